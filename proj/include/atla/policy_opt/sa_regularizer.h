#ifndef ATLA_POLICY_OPT_SA_REGULARIZER_H_
#define ATLA_POLICY_OPT_SA_REGULARIZER_H_

#include <Eigen/Core>

#include "atla/common/rng.h"
#include "atla/nets/policy.h"
#include "json.hpp"

namespace atla::policy_opt {

// Projected ascent on D(s_hat) = KL(pi(.|s) || pi(.|s_hat)) over the
// l-infinity ball of radius eps around each column of s. Starts from
// s + U(-init_scale * eps, init_scale * eps); every step moves by
// step_size * sign(grad D) plus Gaussian noise of scale noise_scale, then
// clips back into the ball. For recurrent policies each column is evaluated
// from its own given state.
struct KlAscent {
  double eps = 0.0;
  int steps = 2;
  double step_size = 0.0;
  double noise_scale = 0.0;
  double init_scale = 1.0;
};

Eigen::MatrixXd MaximizeKl(const nets::PolicyNet& policy, const Eigen::MatrixXd& states,
                           const Eigen::MatrixXd& recurrent_states,
                           const KlAscent& ascent, Rng& rng);

// Smoothness penalty kappa * mean_j max_{s_hat in B(s_j)} KL(pi(s_j) || pi(s_hat)),
// with the inner maximum from K noisy ascent steps. Step size and noise are
// given as multiples of eps.
struct SaRegConfig {
  double kappa = 0.0;
  int steps = 2;
  double eps = 0.0;
  double step_size = 0.5;
  double noise_scale = 0.1;
  // Apply to the observed states (default) or the true environment states.
  bool on_true_state = false;

  void Validate() const;
  KlAscent ascent() const {
    return {eps, steps, step_size * eps, noise_scale * eps, 1.0};
  }
};

nlohmann::json ToJson(const SaRegConfig& config);
SaRegConfig SaRegConfigFromJson(const nlohmann::json& doc, SaRegConfig defaults = {});

// Returns the penalty and adds its gradient wrt the policy parameters into
// *param_grad (the inner maximizer is treated as a constant).
double SaPenalty(const nets::PolicyNet& policy, const Eigen::MatrixXd& states,
                 const Eigen::MatrixXd& recurrent_states, const SaRegConfig& config,
                 Rng& rng, Eigen::VectorXd* param_grad);

// Mean over columns of KL(pi(s) || pi(s_hat)).
double MeanKl(const nets::PolicyNet& policy, const Eigen::MatrixXd& states,
              const Eigen::MatrixXd& perturbed, const Eigen::MatrixXd& recurrent_states);

}  // namespace atla::policy_opt

#endif  // ATLA_POLICY_OPT_SA_REGULARIZER_H_
