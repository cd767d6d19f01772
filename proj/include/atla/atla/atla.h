#ifndef ATLA_ATLA_ATLA_H_
#define ATLA_ATLA_ATLA_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "atla/attacks/optimal_attack.h"
#include "atla/attacks/perturbation.h"
#include "atla/attacks/suite.h"
#include "atla/common/environment.h"
#include "atla/policy_opt/trainer.h"
#include "json.hpp"

namespace atla::alternating {

// Alternating training: every iteration runs agent_phases agent updates on
// perturbed observations s_hat = Project(s, eps * delta), delta ~ nu(.|s),
// then adversary_phases adversary updates against the frozen agent.
struct AtlaConfig {
  int iterations = 97;
  int agent_phases = 1;
  int adversary_phases = 1;
  double eps = 0.0;
  // Agent PPO, network (mlp or lstm) and optional SA regularizer; the
  // iteration count inside is ignored.
  policy_opt::TrainConfig agent;
  policy_opt::TrainConfig adversary = attacks::DefaultAdversaryConfig();

  void Validate() const;
  attacks::AttackBudget budget() const { return {eps}; }
};

nlohmann::json ToJson(const AtlaConfig& config);
AtlaConfig AtlaConfigFromJson(const nlohmann::json& doc, AtlaConfig defaults = {});

// Both players. The agent uses the "agent" stream and the adversary the
// "adversary" stream of `seed`, so with eps = 0 the agent trains exactly
// like a vanilla PpoTrainer and the adversary phases against a fixed agent
// retrace attacks::TrainOptimalAttack.
class AtlaTrainer {
 public:
  AtlaTrainer(const Environment& env, AtlaConfig config, std::uint64_t seed);
  // Starts from an existing agent.
  AtlaTrainer(policy_opt::PpoTrainer agent, const Environment& env, AtlaConfig config,
              std::uint64_t seed);

  // One PPO iteration for the agent on PerturbedEnv(env, nu) with the
  // adversary sampling its perturbations.
  policy_opt::IterationStats AgentPhase(const Environment& env);
  // One PPO iteration for the adversary against the sampling agent.
  policy_opt::IterationStats AdversaryPhase(const Environment& env);
  void RunIteration(const Environment& env);
  void Train(const Environment& env);

  const AtlaConfig& config() const { return config_; }
  const policy_opt::PpoTrainer& agent() const { return agent_; }
  const policy_opt::PpoTrainer& adversary() const { return adversary_; }
  int iteration() const { return iteration_; }

 private:
  AtlaConfig config_;
  policy_opt::PpoTrainer agent_;
  policy_opt::PpoTrainer adversary_;
  int iteration_ = 0;
};

struct ExactFloor {
  double value = 0.0;  // agent's discounted value at the start state
  ReturnStats returns;  // episode returns under the exact adversary
};

struct RobustnessReport {
  std::string arch;
  attacks::SuiteReport suite;
  std::optional<ExactFloor> floor;  // tabular grids with feedforward agents
};

// Attack suite plus, when env is a GridEnv and the agent is a feedforward
// categorical policy, the optimal adversary over grid-point observations
// within eps (solved exactly on the tabularized policy).
RobustnessReport EvaluateRobustness(const Environment& env, const nets::PolicyNet& agent,
                                    const attacks::AttackBudget& budget,
                                    const attacks::SuiteConfig& suite, std::uint64_t seed,
                                    const std::string& env_name, const std::string& method);

nlohmann::json ToJson(const RobustnessReport& report);
// Suite columns followed by floor_value,floor_return_mean,floor_return_std,arch.
std::string RobustnessCsv(const std::vector<RobustnessReport>& reports);

// Index of the median of `scores` (lower median, ties by index).
int MedianIndex(const std::vector<double>& scores);

struct Replicate {
  std::uint64_t seed = 0;
  AtlaTrainer trainer;
  RobustnessReport report;
};

struct ReplicateRun {
  std::vector<Replicate> replicates;
  int median = 0;  // replicate with the median worst-case attack return
};

// Trains `count` replicates with seeds DeriveSeed(seed, "replicate", i),
// evaluates each, and picks the median by best_attack_mean.
ReplicateRun TrainReplicates(const Environment& env, const AtlaConfig& config,
                             const attacks::SuiteConfig& suite, int count, std::uint64_t seed,
                             int threads, const std::string& env_name);

}  // namespace atla::alternating

#endif  // ATLA_ATLA_ATLA_H_
