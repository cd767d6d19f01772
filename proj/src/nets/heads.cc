#include "atla/nets/heads.h"

#include <cmath>
#include <numbers>

#include "atla/common/error.h"

namespace atla::nets {
namespace categorical {

Eigen::VectorXd LogSoftmax(const Eigen::VectorXd& logits) {
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  return logits.array() - lse;
}

Eigen::VectorXd Softmax(const Eigen::VectorXd& logits) {
  Eigen::VectorXd p = (logits.array() - logits.maxCoeff()).exp();
  return p / p.sum();
}

double LogProb(const Eigen::VectorXd& logits, int action) {
  if (action < 0 || action >= logits.size()) {
    throw ValidationError("action " + std::to_string(action) +
                          " outside categorical support of size " +
                          std::to_string(logits.size()));
  }
  return LogSoftmax(logits)(action);
}

double Entropy(const Eigen::VectorXd& logits) {
  const Eigen::VectorXd logp = LogSoftmax(logits);
  return -(logp.array().exp() * logp.array()).sum();
}

double Kl(const Eigen::VectorXd& p_logits, const Eigen::VectorXd& q_logits) {
  const Eigen::VectorXd lp = LogSoftmax(p_logits);
  const Eigen::VectorXd lq = LogSoftmax(q_logits);
  return (lp.array().exp() * (lp - lq).array()).sum();
}

Eigen::VectorXd LogProbGrad(const Eigen::VectorXd& logits, int action) {
  Eigen::VectorXd g = -Softmax(logits);
  g(action) += 1.0;
  return g;
}

Eigen::VectorXd EntropyGrad(const Eigen::VectorXd& logits) {
  const Eigen::VectorXd logp = LogSoftmax(logits);
  const Eigen::ArrayXd p = logp.array().exp();
  const double h = -(p * logp.array()).sum();
  return (-p * (logp.array() + h)).matrix();
}

Eigen::VectorXd KlGradP(const Eigen::VectorXd& p_logits, const Eigen::VectorXd& q_logits) {
  const Eigen::VectorXd lp = LogSoftmax(p_logits);
  const Eigen::VectorXd lq = LogSoftmax(q_logits);
  const Eigen::ArrayXd p = lp.array().exp();
  const double kl = (p * (lp - lq).array()).sum();
  return (p * ((lp - lq).array() - kl)).matrix();
}

Eigen::VectorXd KlGradQ(const Eigen::VectorXd& p_logits, const Eigen::VectorXd& q_logits) {
  return Softmax(q_logits) - Softmax(p_logits);
}

int Sample(const Eigen::VectorXd& logits, Rng& rng) {
  const Eigen::VectorXd p = Softmax(logits);
  return SampleIndex(rng, p.data(), static_cast<int>(p.size()));
}

int Mode(const Eigen::VectorXd& logits) {
  int best = 0;
  for (int i = 1; i < logits.size(); ++i) {
    if (logits(i) > logits(best)) best = i;
  }
  return best;
}

}  // namespace categorical

namespace gaussian {
namespace {
const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);
}

double LogProb(const Eigen::VectorXd& mean, const Eigen::VectorXd& log_std,
               const Eigen::VectorXd& action) {
  if (action.size() != mean.size()) {
    throw ValidationError("Gaussian action has wrong dimension");
  }
  const Eigen::ArrayXd z = (action - mean).array() * (-log_std.array()).exp();
  return (-0.5 * z.square() - log_std.array() - kHalfLog2Pi).sum();
}

double Entropy(const Eigen::VectorXd& log_std) {
  return (log_std.array() + 0.5 + kHalfLog2Pi).sum();
}

double Kl(const Eigen::VectorXd& p_mean, const Eigen::VectorXd& p_log_std,
          const Eigen::VectorXd& q_mean, const Eigen::VectorXd& q_log_std) {
  const Eigen::ArrayXd var_p = (2.0 * p_log_std.array()).exp();
  const Eigen::ArrayXd var_q = (2.0 * q_log_std.array()).exp();
  const Eigen::ArrayXd diff = (p_mean - q_mean).array();
  return (q_log_std.array() - p_log_std.array() +
          (var_p + diff.square()) / (2.0 * var_q) - 0.5)
      .sum();
}

void LogProbGrad(const Eigen::VectorXd& mean, const Eigen::VectorXd& log_std,
                 const Eigen::VectorXd& action, Eigen::VectorXd* d_mean,
                 Eigen::VectorXd* d_log_std) {
  const Eigen::ArrayXd inv_var = (-2.0 * log_std.array()).exp();
  const Eigen::ArrayXd diff = (action - mean).array();
  if (d_mean != nullptr) *d_mean = (diff * inv_var).matrix();
  if (d_log_std != nullptr) *d_log_std = (diff.square() * inv_var - 1.0).matrix();
}

void KlGrad(const Eigen::VectorXd& p_mean, const Eigen::VectorXd& p_log_std,
            const Eigen::VectorXd& q_mean, const Eigen::VectorXd& q_log_std,
            Eigen::VectorXd* d_p_mean, Eigen::VectorXd* d_p_log_std,
            Eigen::VectorXd* d_q_mean, Eigen::VectorXd* d_q_log_std) {
  const Eigen::ArrayXd var_p = (2.0 * p_log_std.array()).exp();
  const Eigen::ArrayXd inv_var_q = (-2.0 * q_log_std.array()).exp();
  const Eigen::ArrayXd diff = (p_mean - q_mean).array();
  if (d_p_mean != nullptr) *d_p_mean = (diff * inv_var_q).matrix();
  if (d_q_mean != nullptr) *d_q_mean = (-diff * inv_var_q).matrix();
  if (d_p_log_std != nullptr) *d_p_log_std = (var_p * inv_var_q - 1.0).matrix();
  if (d_q_log_std != nullptr) {
    *d_q_log_std = (1.0 - (var_p + diff.square()) * inv_var_q).matrix();
  }
}

Eigen::VectorXd Sample(const Eigen::VectorXd& mean, const Eigen::VectorXd& log_std,
                       Rng& rng) {
  Eigen::VectorXd a(mean.size());
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    a(i) = mean(i) + std::exp(log_std(i)) * StandardNormal(rng);
  }
  return a;
}

}  // namespace gaussian
}  // namespace atla::nets
