#include "atla/nets/param_vector.h"

#include <cmath>

#include "atla/common/error.h"

namespace atla::nets {

int ParamVector::Add(std::string name, int rows, int cols) {
  if (rows < 0 || cols < 0) throw ValidationError("negative segment shape");
  if (Find(name) >= 0) {
    throw ValidationError("duplicate parameter segment '" + name + "'");
  }
  Segment s{std::move(name), rows, cols, size()};
  const int old = size();
  values_.conservativeResize(old + s.size());
  values_.tail(s.size()).setZero();
  segments_.push_back(std::move(s));
  return static_cast<int>(segments_.size()) - 1;
}

int ParamVector::Find(const std::string& name) const {
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    if (segments_[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

void ParamVector::Validate() const {
  int expected = 0;
  for (const Segment& s : segments_) {
    if (s.offset != expected || s.rows < 0 || s.cols < 0) {
      throw ValidationError("segment '" + s.name + "' breaks the partition");
    }
    expected += s.size();
  }
  if (expected != size()) {
    throw ValidationError("segments cover " + std::to_string(expected) +
                          " of " + std::to_string(size()) + " parameters");
  }
  for (int i = 0; i < size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw NumericalError("non-finite parameter at index " + std::to_string(i));
    }
  }
}

nlohmann::json ToJson(const ParamVector& params) {
  nlohmann::json segments = nlohmann::json::array();
  for (const Segment& s : params.segments()) {
    segments.push_back({{"name", s.name}, {"rows", s.rows}, {"cols", s.cols},
                        {"offset", s.offset}});
  }
  const auto& v = params.values();
  return {{"segments", segments},
          {"values", std::vector<double>(v.data(), v.data() + v.size())}};
}

ParamVector ParamVectorFromJson(const nlohmann::json& doc) {
  ParamVector params;
  try {
    for (const auto& s : doc.at("segments")) {
      params.Add(s.at("name").get<std::string>(), s.at("rows").get<int>(),
                 s.at("cols").get<int>());
      if (params.segments().back().offset != s.at("offset").get<int>()) {
        throw ValidationError("segment offsets do not partition the vector");
      }
    }
    const auto values = doc.at("values").get<std::vector<double>>();
    if (static_cast<int>(values.size()) != params.size()) {
      throw ValidationError("parameter count does not match segment index");
    }
    params.values() = Eigen::Map<const Eigen::VectorXd>(
        values.data(), static_cast<Eigen::Index>(values.size()));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed parameter document: ") + e.what());
  }
  params.Validate();
  return params;
}

}  // namespace atla::nets
