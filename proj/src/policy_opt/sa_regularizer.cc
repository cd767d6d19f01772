#include "atla/policy_opt/sa_regularizer.h"

#include "atla/common/error.h"
#include "atla/common/json_util.h"

namespace atla::policy_opt {
namespace {

Eigen::MatrixXd Outputs(const nets::PolicyNet& policy, const Eigen::MatrixXd& x,
                        const Eigen::MatrixXd& recurrent_states, nets::Tape* tape) {
  if (policy.recurrent()) return policy.body().ForwardSteps(x, recurrent_states, tape);
  return policy.body().Forward(x, Eigen::VectorXd(), tape);
}

Eigen::MatrixXd Clip(const Eigen::MatrixXd& x, const Eigen::MatrixXd& center, double eps) {
  return x.array().max(center.array() - eps).min(center.array() + eps).matrix();
}

}  // namespace

Eigen::MatrixXd MaximizeKl(const nets::PolicyNet& policy, const Eigen::MatrixXd& states,
                           const Eigen::MatrixXd& recurrent_states,
                           const KlAscent& ascent, Rng& rng) {
  if (ascent.eps < 0.0) throw ValidationError("perturbation radius must be >= 0");
  if (ascent.eps == 0.0) return states;
  const Eigen::MatrixXd clean = Outputs(policy, states, recurrent_states, nullptr);
  Eigen::MatrixXd x = states;
  const double init = ascent.init_scale * ascent.eps;
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, j) += Uniform(rng, -init, init);
  x = Clip(x, states, ascent.eps);
  for (int k = 0; k < ascent.steps; ++k) {
    nets::Tape tape;
    const Eigen::MatrixXd q = Outputs(policy, x, recurrent_states, &tape);
    Eigen::MatrixXd d_q = Eigen::MatrixXd::Zero(q.rows(), q.cols());
    Eigen::MatrixXd unused_p = d_q;
    for (Eigen::Index j = 0; j < q.cols(); ++j) {
      policy.AddKlGrad(clean.col(j), q.col(j), 1.0, unused_p.col(j), d_q.col(j), nullptr);
    }
    const Eigen::MatrixXd g = policy.body().Backward(tape, d_q, nullptr);
    x += ascent.step_size * g.unaryExpr([](double v) {
      return static_cast<double>((v > 0.0) - (v < 0.0));
    });
    if (ascent.noise_scale > 0.0) {
      for (Eigen::Index j = 0; j < x.cols(); ++j)
        for (Eigen::Index i = 0; i < x.rows(); ++i)
          x(i, j) += ascent.noise_scale * StandardNormal(rng);
    }
    x = Clip(x, states, ascent.eps);
  }
  return x;
}

void SaRegConfig::Validate() const {
  if (!(kappa >= 0.0)) throw ValidationError("SA regularizer weight must be >= 0");
  if (steps < 1) throw ValidationError("SA regularizer needs at least one ascent step");
  if (!(eps >= 0.0)) throw ValidationError("SA regularizer radius must be >= 0");
  if (!(step_size >= 0.0) || !(noise_scale >= 0.0)) {
    throw ValidationError("SA regularizer step and noise must be >= 0");
  }
}

nlohmann::json ToJson(const SaRegConfig& c) {
  return {{"kappa", c.kappa},         {"steps", c.steps},
          {"eps", c.eps},             {"step_size", c.step_size},
          {"noise_scale", c.noise_scale}, {"on_true_state", c.on_true_state}};
}

SaRegConfig SaRegConfigFromJson(const nlohmann::json& doc, SaRegConfig c) {
  JsonReader r(doc, "sa_reg");
  r.Read("kappa", c.kappa);
  r.Read("steps", c.steps);
  r.Read("eps", c.eps);
  r.Read("step_size", c.step_size);
  r.Read("noise_scale", c.noise_scale);
  r.Read("on_true_state", c.on_true_state);
  r.Finish();
  c.Validate();
  return c;
}

double MeanKl(const nets::PolicyNet& policy, const Eigen::MatrixXd& states,
              const Eigen::MatrixXd& perturbed, const Eigen::MatrixXd& recurrent_states) {
  const Eigen::MatrixXd p = Outputs(policy, states, recurrent_states, nullptr);
  const Eigen::MatrixXd q = Outputs(policy, perturbed, recurrent_states, nullptr);
  double total = 0.0;
  for (Eigen::Index j = 0; j < p.cols(); ++j) total += policy.Kl(p.col(j), q.col(j));
  return total / static_cast<double>(p.cols());
}

double SaPenalty(const nets::PolicyNet& policy, const Eigen::MatrixXd& states,
                 const Eigen::MatrixXd& recurrent_states, const SaRegConfig& config,
                 Rng& rng, Eigen::VectorXd* param_grad) {
  if (config.kappa == 0.0 || config.eps == 0.0) return 0.0;
  const Eigen::MatrixXd perturbed =
      MaximizeKl(policy, states, recurrent_states, config.ascent(), rng);
  nets::Tape tape_p, tape_q;
  const Eigen::MatrixXd p = Outputs(policy, states, recurrent_states, &tape_p);
  const Eigen::MatrixXd q = Outputs(policy, perturbed, recurrent_states, &tape_q);
  const double scale = config.kappa / static_cast<double>(states.cols());
  Eigen::MatrixXd d_p = Eigen::MatrixXd::Zero(p.rows(), p.cols());
  Eigen::MatrixXd d_q = d_p;
  double total = 0.0;
  for (Eigen::Index j = 0; j < p.cols(); ++j) {
    total += policy.Kl(p.col(j), q.col(j));
    if (param_grad != nullptr) {
      policy.AddKlGrad(p.col(j), q.col(j), scale, d_p.col(j), d_q.col(j), param_grad);
    }
  }
  if (param_grad != nullptr) {
    policy.body().Backward(tape_p, d_p, param_grad);
    policy.body().Backward(tape_q, d_q, param_grad);
  }
  return scale * total;
}

}  // namespace atla::policy_opt
