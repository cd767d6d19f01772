#ifndef ATLA_ATTACKS_TABULAR_H_
#define ATLA_ATTACKS_TABULAR_H_

#include <cstdint>
#include <memory>
#include <vector>

#include "atla/common/environment.h"
#include "atla/gridworld/gridworld.h"
#include "atla/nets/policy.h"
#include "atla/policy_opt/trainer.h"
#include "atla/samdp/samdp.h"

namespace atla::attacks {

// pi(.|s) of a feedforward categorical policy evaluated at every grid state.
samdp::TabularPolicy TabularizePolicy(const nets::PolicyNet& policy,
                                      const gridworld::GridWorld& world,
                                      gridworld::Encoding encoding);

// Discrete MAD: for every s the observation in B(s) maximizing
// KL(pi(.|s) || pi(.|s_hat)), lowest index on ties.
samdp::AdversaryMap MadAdversaryMap(const samdp::SaMdp& samdp,
                                    const samdp::TabularPolicy& policy);

// Adversary view of an SA-MDP with a fixed tabular agent: observation =
// one-hot true state, action = slot k selecting the k-th element of B(s)
// (slots past |B(s)| select s itself), reward = -r. Episodes start at the
// start state and are truncated after `horizon` steps.
class SlotAdversaryEnv : public Environment {
 public:
  SlotAdversaryEnv(std::shared_ptr<const samdp::SaMdp> samdp, samdp::TabularPolicy policy,
                   int horizon);

  static int SlotCount(const samdp::SaMdp& samdp);
  static int Observation(const samdp::SaMdp& samdp, int s, int slot);

  int observation_dim() const override { return samdp_->n_states(); }
  ActionSpec action_spec() const override { return {true, SlotCount(*samdp_), 0}; }
  void Reset(Rng& rng) override;
  Eigen::VectorXd Observe() const override;
  Eigen::VectorXd TrueState() const override { return Observe(); }
  StepResult Step(const EnvAction& action, Rng& rng) override;
  std::unique_ptr<Environment> Clone() const override {
    return std::make_unique<SlotAdversaryEnv>(*this);
  }

 private:
  std::shared_ptr<const samdp::SaMdp> samdp_;
  samdp::TabularPolicy policy_;
  int horizon_;
  int state_ = 0;
  int t_ = 0;
};

// Tabular adversary policy (softmax over slots, one row per state) read off
// a network trained on SlotAdversaryEnv.
samdp::AdversaryMap SlotPolicyToMap(const samdp::SaMdp& samdp, const nets::PolicyNet& net,
                                    bool greedy);

struct TabularLearnedAdversary {
  samdp::AdversaryMap stochastic;
  samdp::AdversaryMap greedy;
  std::vector<policy_opt::IterationStats> curve;
};

// Linear softmax (tabular) adversary trained with the shared PPO trainer.
policy_opt::TrainConfig DefaultTabularAdversaryConfig();
TabularLearnedAdversary TrainTabularAdversary(const samdp::SaMdp& samdp,
                                              const samdp::TabularPolicy& policy,
                                              const policy_opt::TrainConfig& config,
                                              int horizon, std::uint64_t seed);

}  // namespace atla::attacks

#endif  // ATLA_ATTACKS_TABULAR_H_
