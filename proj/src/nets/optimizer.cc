#include "atla/nets/optimizer.h"

#include <cmath>

#include "atla/common/error.h"

namespace atla::nets {

Adam::Adam(int size, double learning_rate, double beta1, double beta2,
           double epsilon)
    : lr_(learning_rate),
      beta1_(beta1),
      beta2_(beta2),
      epsilon_(epsilon),
      m_(Eigen::VectorXd::Zero(size)),
      v_(Eigen::VectorXd::Zero(size)) {
  if (learning_rate < 0.0) throw ValidationError("learning rate must be >= 0");
}

void Adam::Step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
  if (params.size() != m_.size() || grad.size() != m_.size()) {
    throw ValidationError("optimizer state does not match parameter size");
  }
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(beta1_, t_);
  const double c2 = 1.0 - std::pow(beta2_, t_);
  if (lr_ == 0.0) return;
  params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + epsilon_);
}

nlohmann::json Adam::ToJson() const {
  return {{"lr", lr_},     {"beta1", beta1_},
          {"beta2", beta2_}, {"epsilon", epsilon_},
          {"t", t_},
          {"m", std::vector<double>(m_.data(), m_.data() + m_.size())},
          {"v", std::vector<double>(v_.data(), v_.data() + v_.size())}};
}

Adam Adam::FromJson(const nlohmann::json& doc) {
  try {
    const auto m = doc.at("m").get<std::vector<double>>();
    const auto v = doc.at("v").get<std::vector<double>>();
    if (m.size() != v.size()) throw ValidationError("optimizer moment sizes differ");
    Adam adam(static_cast<int>(m.size()), doc.at("lr").get<double>(),
              doc.at("beta1").get<double>(), doc.at("beta2").get<double>(),
              doc.at("epsilon").get<double>());
    adam.t_ = doc.at("t").get<int>();
    adam.m_ = Eigen::Map<const Eigen::VectorXd>(m.data(), static_cast<Eigen::Index>(m.size()));
    adam.v_ = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    return adam;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed optimizer state: ") + e.what());
  }
}

double ClipGradNorm(Eigen::VectorXd& grad, double max_norm) {
  const double norm = grad.norm();
  if (max_norm > 0.0 && norm > max_norm) grad *= max_norm / norm;
  return norm;
}

}  // namespace atla::nets
