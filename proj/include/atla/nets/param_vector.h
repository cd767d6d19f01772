#ifndef ATLA_NETS_PARAM_VECTOR_H_
#define ATLA_NETS_PARAM_VECTOR_H_

#include <Eigen/Core>
#include <string>
#include <vector>

#include "json.hpp"

namespace atla::nets {

struct Segment {
  std::string name;
  int rows = 0;
  int cols = 0;
  int offset = 0;
  int size() const { return rows * cols; }
  bool operator==(const Segment&) const = default;
};

// Flat parameter storage with a named segment index. Segments are laid out
// back to back in the order they were added; matrices are column-major.
class ParamVector {
 public:
  // Appends a zero-initialized rows x cols block and returns its index.
  int Add(std::string name, int rows, int cols);

  int size() const { return static_cast<int>(values_.size()); }
  const std::vector<Segment>& segments() const { return segments_; }
  const Segment& segment(int index) const { return segments_[index]; }
  // Index of the named segment, or -1.
  int Find(const std::string& name) const;

  Eigen::VectorXd& values() { return values_; }
  const Eigen::VectorXd& values() const { return values_; }

  Eigen::Map<Eigen::MatrixXd> Block(int index) {
    const Segment& s = segments_[index];
    return {values_.data() + s.offset, s.rows, s.cols};
  }
  Eigen::Map<const Eigen::MatrixXd> Block(int index) const {
    const Segment& s = segments_[index];
    return {values_.data() + s.offset, s.rows, s.cols};
  }
  // Same view into a gradient vector laid out like this one.
  Eigen::Map<Eigen::MatrixXd> Block(int index, Eigen::VectorXd& grad) const {
    const Segment& s = segments_[index];
    return {grad.data() + s.offset, s.rows, s.cols};
  }

  // Segments partition the vector exactly and all entries are finite.
  void Validate() const;

  bool operator==(const ParamVector& other) const {
    return segments_ == other.segments_ && values_ == other.values_;
  }

 private:
  std::vector<Segment> segments_;
  Eigen::VectorXd values_;
};

nlohmann::json ToJson(const ParamVector& params);
ParamVector ParamVectorFromJson(const nlohmann::json& doc);

}  // namespace atla::nets

#endif  // ATLA_NETS_PARAM_VECTOR_H_
