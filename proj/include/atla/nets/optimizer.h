#ifndef ATLA_NETS_OPTIMIZER_H_
#define ATLA_NETS_OPTIMIZER_H_

#include <Eigen/Core>

#include "json.hpp"

namespace atla::nets {

class Adam {
 public:
  Adam() = default;
  explicit Adam(int size, double learning_rate, double beta1 = 0.9,
                double beta2 = 0.999, double epsilon = 1e-8);

  double learning_rate() const { return lr_; }
  void set_learning_rate(double lr) { lr_ = lr; }
  int steps() const { return t_; }

  // params -= lr * m_hat / (sqrt(v_hat) + epsilon).
  void Step(Eigen::VectorXd& params, const Eigen::VectorXd& grad);

  nlohmann::json ToJson() const;
  static Adam FromJson(const nlohmann::json& doc);

 private:
  double lr_ = 0.0;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double epsilon_ = 1e-8;
  int t_ = 0;
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
};

// Rescales grad to norm max_norm when larger; returns the original norm.
double ClipGradNorm(Eigen::VectorXd& grad, double max_norm);

}  // namespace atla::nets

#endif  // ATLA_NETS_OPTIMIZER_H_
