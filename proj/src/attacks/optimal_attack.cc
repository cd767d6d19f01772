#include "atla/attacks/optimal_attack.h"

namespace atla::attacks {

policy_opt::TrainConfig DefaultAdversaryConfig() {
  policy_opt::TrainConfig c;
  c.ppo.policy_lr = 1e-3;
  c.ppo.value_lr = 1e-3;
  c.ppo.entropy_coef = 0.0;
  c.ppo.steps_per_batch = 2048;
  c.ppo.minibatch = 256;
  c.net.hidden = {32, 32};
  c.net.init_log_std = 0.0;
  c.iterations = 50;
  return c;
}

std::vector<policy_opt::TrainConfig> AdversaryGrid(const policy_opt::TrainConfig& base) {
  std::vector<policy_opt::TrainConfig> grid;
  for (double lr_scale : {0.3, 1.0, 3.0}) {
    for (double entropy : {0.0, 0.01}) {
      for (bool anneal : {false, true}) {
        policy_opt::TrainConfig c = base;
        c.ppo.policy_lr = base.ppo.policy_lr * lr_scale;
        c.ppo.value_lr = base.ppo.value_lr * lr_scale;
        c.ppo.entropy_coef = entropy;
        c.ppo.anneal_lr = anneal;
        grid.push_back(c);
      }
    }
  }
  return grid;
}

policy_opt::PpoTrainer MakeAdversaryTrainer(const Environment& env,
                                            const policy_opt::TrainConfig& config,
                                            std::uint64_t seed) {
  const int dim = env.observation_dim();
  return policy_opt::PpoTrainer::Create(dim, ActionSpec{false, 0, dim}, config, seed,
                                        "adversary");
}

policy_opt::IterationStats AdversaryPhase(policy_opt::PpoTrainer& adversary,
                                          const Actor& agent, const Environment& env,
                                          const AttackBudget& budget) {
  const AdversaryEnv view(env.Clone(), agent.Clone(), budget);
  return adversary.RunIteration(view);
}

LearnedAdversary TrainOptimalAttack(const Actor& agent, const Environment& env,
                                    const AttackBudget& budget,
                                    const policy_opt::TrainConfig& config,
                                    std::uint64_t seed) {
  budget.Validate();
  policy_opt::PpoTrainer trainer = MakeAdversaryTrainer(env, config, seed);
  for (int i = 0; i < config.iterations; ++i) AdversaryPhase(trainer, agent, env, budget);
  return {trainer.policy(), trainer.value().Clone(), trainer.curve()};
}

}  // namespace atla::attacks
