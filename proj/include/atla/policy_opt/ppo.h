#ifndef ATLA_POLICY_OPT_PPO_H_
#define ATLA_POLICY_OPT_PPO_H_

#include <Eigen/Core>

#include "atla/common/rng.h"
#include "atla/nets/optimizer.h"
#include "atla/nets/policy.h"
#include "atla/policy_opt/rollout.h"
#include "atla/policy_opt/sa_regularizer.h"
#include "json.hpp"

namespace atla::policy_opt {

struct PpoConfig {
  double clip = 0.2;
  double policy_lr = 3e-4;
  double value_lr = 1e-3;
  int epochs = 4;
  int minibatch = 256;  // transitions per minibatch
  double gamma = 0.99;
  double lambda = 0.95;
  double entropy_coef = 0.01;
  int bptt_window = 100;
  double max_grad_norm = 0.5;
  int steps_per_batch = 2048;
  bool anneal_lr = false;  // linear decay to zero over the planned iterations

  void Validate() const;
};

nlohmann::json ToJson(const PpoConfig& config);
PpoConfig PpoConfigFromJson(const nlohmann::json& doc, PpoConfig defaults = {});

// Flattened over episodes in buffer order.
struct Advantages {
  Eigen::VectorXd raw;
  Eigen::VectorXd normalized;  // mean 0, std 1 (std guarded below by 1e-8)
  Eigen::VectorXd targets;     // raw + V_old, the value regression targets
};

// Generalized advantage estimation per episode:
//   delta_t = r_t + gamma V_{t+1} - V_t,  A_t = delta_t + gamma lambda A_{t+1},
// with V after the last step = 0 for terminal episodes and the bootstrap value
// otherwise.
Advantages ComputeGae(const RolloutBuffer& buffer, double gamma, double lambda);

// min(ratio * A, clip(ratio, 1 - clip, 1 + clip) * A).
double ClippedObjective(double ratio, double advantage, double clip);
// Whether the unclipped branch is selected, i.e. the sample has gradient.
bool ClipBranchActive(double ratio, double advantage, double clip);

struct UpdateStats {
  double policy_loss = 0.0;  // mean negative clipped surrogate
  double value_loss = 0.0;   // mean squared error
  double entropy = 0.0;
  double sa_penalty = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  int minibatches = 0;
};

struct PpoLoss {
  double policy = 0.0;     // surrogate - entropy_coef * entropy + sa_penalty
  double surrogate = 0.0;  // mean negative clipped surrogate
  double entropy = 0.0;
  double sa_penalty = 0.0;
  double value = 0.0;
};

// Losses of the whole buffer taken as a single minibatch; gradients are added
// into the non-null accumulators.
PpoLoss PpoObjective(const nets::PolicyNet& policy, const nets::SequenceModel& value,
                     const RolloutBuffer& buffer, const Advantages& advantages,
                     const PpoConfig& config, const SaRegConfig* sa, Rng& rng,
                     Eigen::VectorXd* policy_grad, Eigen::VectorXd* value_grad);

// Optimizer state of one player.
struct PpoOptimizers {
  nets::Adam policy;
  nets::Adam value;
};

// Epochs of minibatch updates on the clipped surrogate plus entropy bonus
// (and the SA penalty when sa is non-null with kappa > 0), and on the value
// regression. Recurrent nets are trained on windows of at most bptt_window
// steps that start from the stored recurrent state and never cross episode
// boundaries. Throws NumericalError on a non-finite loss.
UpdateStats PpoUpdate(nets::PolicyNet& policy, nets::SequenceModel& value,
                      PpoOptimizers& optimizers, const RolloutBuffer& buffer,
                      const Advantages& advantages, const PpoConfig& config,
                      const SaRegConfig* sa, Rng& rng);

}  // namespace atla::policy_opt

#endif  // ATLA_POLICY_OPT_PPO_H_
