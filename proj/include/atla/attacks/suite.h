#ifndef ATLA_ATTACKS_SUITE_H_
#define ATLA_ATTACKS_SUITE_H_

#include <cstdint>
#include <string>
#include <vector>

#include "atla/attacks/optimal_attack.h"
#include "atla/attacks/perturbation.h"
#include "atla/common/environment.h"
#include "atla/common/stats.h"
#include "atla/nets/policy.h"
#include "atla/policy_opt/trainer.h"
#include "json.hpp"

namespace atla::attacks {

// Episode returns of `agent` (sampling its actions) on PerturbedEnv(env,
// perturber) pooled over `seeds` seeds of `episodes` episodes. Seed k uses
// DeriveSeed(seed, "eval", k), so different perturbers see paired randomness.
ReturnStats EvaluateUnderAttack(const Environment& env, const nets::PolicyNet& agent,
                                const Perturber& perturber, const AttackBudget& budget,
                                int episodes, int seeds, std::uint64_t seed);

struct SuiteConfig {
  // Any of "none", "random", "mad", "optimal"; the natural return is always
  // reported.
  std::vector<std::string> attacks = {"random", "mad", "optimal"};
  int episodes = 50;
  int seeds = 3;
  MadConfig mad;
  policy_opt::TrainConfig adversary = DefaultAdversaryConfig();
  bool adversary_grid = true;  // train over AdversaryGrid(adversary) or just the base
  int threads = 1;

  void Validate() const;
};

nlohmann::json ToJson(const SuiteConfig& config);
SuiteConfig SuiteConfigFromJson(const nlohmann::json& doc, SuiteConfig defaults = {});

struct AttackResult {
  std::string name;
  ReturnStats stats;
};

struct SuiteReport {
  std::string env;
  double eps = 0.0;
  std::string method;
  ReturnStats natural;
  std::vector<AttackResult> attacks;
  // Mean return of every learned adversary (grid point x {sampled, mean}).
  std::vector<double> optimal_candidates;
  std::string best_attack = "none";
  double best_attack_mean = 0.0;  // lowest mean over attacks (natural if none)

  const AttackResult* Find(const std::string& name) const;
};

SuiteReport EvaluateSuite(const Environment& env, const nets::PolicyNet& agent,
                          const AttackBudget& budget, const SuiteConfig& config,
                          std::uint64_t seed, const std::string& env_name,
                          const std::string& method);

nlohmann::json ToJson(const SuiteReport& report);
// One row per report: env,eps,method,natural_mean,natural_std, then
// <attack>_mean,<attack>_std for the attacks of the first report, then
// best_attack,best_attack_mean.
std::string ReportCsv(const std::vector<SuiteReport>& reports);

}  // namespace atla::attacks

#endif  // ATLA_ATTACKS_SUITE_H_
