#ifndef ATLA_ATTACKS_OPTIMAL_ATTACK_H_
#define ATLA_ATTACKS_OPTIMAL_ATTACK_H_

#include <cstdint>
#include <memory>
#include <vector>

#include "atla/attacks/perturbation.h"
#include "atla/common/environment.h"
#include "atla/policy_opt/trainer.h"

namespace atla::attacks {

// PPO settings for the learned adversary (Gaussian head over delta).
policy_opt::TrainConfig DefaultAdversaryConfig();

// Fixed grid around `base`: learning rates x {0.3, 1, 3}, entropy
// coefficient in {0, 0.01}, learning-rate annealing off / on.
std::vector<policy_opt::TrainConfig> AdversaryGrid(const policy_opt::TrainConfig& base);

// Adversary trainer on the observation space of `env`, seeded from the
// "adversary" stream.
policy_opt::PpoTrainer MakeAdversaryTrainer(const Environment& env,
                                            const policy_opt::TrainConfig& config,
                                            std::uint64_t seed);

// One adversary iteration against a frozen black-box agent: collects on
// AdversaryEnv(env, agent) and updates the adversary.
policy_opt::IterationStats AdversaryPhase(policy_opt::PpoTrainer& adversary,
                                          const Actor& agent, const Environment& env,
                                          const AttackBudget& budget);

struct LearnedAdversary {
  nets::PolicyNet policy;
  std::unique_ptr<nets::SequenceModel> value;
  std::vector<policy_opt::IterationStats> curve;
};

// Trains nu(delta | s) for config.iterations iterations. The agent is only
// queried through Actor::Act.
LearnedAdversary TrainOptimalAttack(const Actor& agent, const Environment& env,
                                    const AttackBudget& budget,
                                    const policy_opt::TrainConfig& config,
                                    std::uint64_t seed);

}  // namespace atla::attacks

#endif  // ATLA_ATTACKS_OPTIMAL_ATTACK_H_
