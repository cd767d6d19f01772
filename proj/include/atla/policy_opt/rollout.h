#ifndef ATLA_POLICY_OPT_ROLLOUT_H_
#define ATLA_POLICY_OPT_ROLLOUT_H_

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "atla/common/environment.h"
#include "atla/common/stats.h"
#include "atla/nets/policy.h"

namespace atla::policy_opt {

// The learner's inputs (s_hat) and the unperturbed environment states (s)
// are distinct types; the update code only accepts the former.
struct Observations {
  Eigen::MatrixXd values;  // obs_dim x T
};
struct TrueStates {
  Eigen::MatrixXd values;  // state_dim x T
};

struct Episode {
  TrueStates true_states;
  Observations observed;
  Eigen::MatrixXd actions;  // 1 x T action indices, or action_dim x T
  Eigen::VectorXd rewards;
  Eigen::VectorXd log_probs;  // log pi_old(a_t | history)
  Eigen::VectorXd values;     // V_old(history_t)
  // Recurrent state entering each step (empty for feedforward nets).
  Eigen::MatrixXd policy_states;
  Eigen::MatrixXd value_states;
  bool terminal = false;         // ended in an absorbing state
  bool cut = false;              // stopped early by the batch size limit
  double bootstrap_value = 0.0;  // V_old after the last step when truncated

  int length() const { return static_cast<int>(rewards.size()); }
  double Return() const { return rewards.sum(); }
  void Validate() const;
};

struct RolloutBuffer {
  std::vector<Episode> episodes;
  bool discrete = true;

  int steps() const;
  // Returns of the episodes that were not cut by the batch limit.
  std::vector<double> Returns() const;
  void Validate() const;
};

// Collects exactly `steps` transitions; an episode still running at the
// limit is cut and bootstrapped like a truncated one. env_rng drives the environment (and any observation perturbation inside
// it); act_rng drives action sampling.
RolloutBuffer CollectEpisodes(Environment& env, const nets::PolicyNet& policy,
                              const nets::SequenceModel& value, int steps,
                              Rng& env_rng, Rng& act_rng);

// Undiscounted episode returns of `episodes` rollouts. Episode e uses the
// generators MakeRng(seed, "eval/env", e) and MakeRng(seed, "eval/act", e),
// so two evaluations with the same seed see the same randomness.
ReturnStats EvaluatePolicy(const Environment& env, const nets::PolicyNet& policy,
                           int episodes, std::uint64_t seed, bool greedy);

}  // namespace atla::policy_opt

#endif  // ATLA_POLICY_OPT_ROLLOUT_H_
