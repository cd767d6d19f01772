#include "atla/attacks/suite.h"

#include <algorithm>
#include <memory>
#include <set>
#include <sstream>

#include "atla/common/error.h"
#include "atla/common/json_util.h"
#include "atla/common/parallel.h"
#include "atla/policy_opt/rollout.h"

namespace atla::attacks {

ReturnStats EvaluateUnderAttack(const Environment& env, const nets::PolicyNet& agent,
                                const Perturber& perturber, const AttackBudget& budget,
                                int episodes, int seeds, std::uint64_t seed) {
  if (seeds < 1) throw ValidationError("need at least one evaluation seed");
  const PerturbedEnv attacked(env.Clone(), perturber.Clone(), budget);
  std::vector<double> returns;
  for (int k = 0; k < seeds; ++k) {
    const ReturnStats part = policy_opt::EvaluatePolicy(attacked, agent, episodes,
                                                        DeriveSeed(seed, "eval", k), false);
    returns.insert(returns.end(), part.returns.begin(), part.returns.end());
  }
  return Summarize(std::move(returns));
}

void SuiteConfig::Validate() const {
  static const std::set<std::string> kKnown = {"none", "random", "mad", "optimal"};
  if (attacks.empty()) throw ValidationError("attack set must not be empty");
  for (const auto& a : attacks) {
    if (!kKnown.count(a)) {
      throw ValidationError("unknown attack '" + a + "' (expected none, random, mad, optimal)");
    }
  }
  if (episodes < 1 || seeds < 1) throw ValidationError("episodes and seeds must be >= 1");
  if (threads < 1) throw ValidationError("threads must be >= 1");
  mad.Validate();
  adversary.Validate();
}

nlohmann::json ToJson(const SuiteConfig& c) {
  return {{"attacks", c.attacks},
          {"episodes", c.episodes},
          {"seeds", c.seeds},
          {"mad",
           {{"steps", c.mad.steps},
            {"step_size", c.mad.step_size},
            {"init_scale", c.mad.init_scale}}},
          {"adversary", policy_opt::ToJson(c.adversary)},
          {"adversary_grid", c.adversary_grid},
          {"threads", c.threads}};
}

SuiteConfig SuiteConfigFromJson(const nlohmann::json& doc, SuiteConfig c) {
  JsonReader r(doc, "attack");
  r.Read("attacks", c.attacks);
  r.Read("episodes", c.episodes);
  r.Read("seeds", c.seeds);
  if (const auto* v = r.Get("mad")) {
    JsonReader m(*v, "attack.mad");
    m.Read("steps", c.mad.steps);
    m.Read("step_size", c.mad.step_size);
    m.Read("init_scale", c.mad.init_scale);
    m.Finish();
  }
  if (const auto* v = r.Get("adversary")) {
    c.adversary = policy_opt::TrainConfigFromJson(*v, c.adversary);
  }
  r.Read("adversary_grid", c.adversary_grid);
  r.Read("threads", c.threads);
  r.Finish();
  c.Validate();
  return c;
}

const AttackResult* SuiteReport::Find(const std::string& name) const {
  for (const auto& a : attacks) {
    if (a.name == name) return &a;
  }
  return nullptr;
}

SuiteReport EvaluateSuite(const Environment& env, const nets::PolicyNet& agent,
                          const AttackBudget& budget, const SuiteConfig& config,
                          std::uint64_t seed, const std::string& env_name,
                          const std::string& method) {
  config.Validate();
  budget.Validate();
  SuiteReport report;
  report.env = env_name;
  report.eps = budget.eps;
  report.method = method;
  const int episodes = config.episodes;
  const int seeds = config.seeds;
  report.natural =
      EvaluateUnderAttack(env, agent, NoPerturber(), budget, episodes, seeds, seed);
  for (const std::string& name : config.attacks) {
    if (name == "none") continue;
    AttackResult result{name, {}};
    if (name == "random") {
      result.stats =
          EvaluateUnderAttack(env, agent, RandomPerturber(), budget, episodes, seeds, seed);
    } else if (name == "mad") {
      result.stats = EvaluateUnderAttack(env, agent, MadPerturber(agent, config.mad), budget,
                                         episodes, seeds, seed);
    } else {
      const std::vector<policy_opt::TrainConfig> grid =
          config.adversary_grid ? AdversaryGrid(config.adversary)
                                : std::vector<policy_opt::TrainConfig>{config.adversary};
      const PolicyActor actor(agent, false);
      std::vector<ReturnStats> candidates(2 * grid.size());
      ParallelFor(static_cast<int>(grid.size()), config.threads, [&](int i) {
        const LearnedAdversary adv = TrainOptimalAttack(
            actor, env, budget, grid[i], DeriveSeed(seed, "optimal-grid", i));
        for (int greedy = 0; greedy < 2; ++greedy) {
          candidates[2 * i + greedy] =
              EvaluateUnderAttack(env, agent, LearnedPerturber(adv.policy, greedy == 1),
                                  budget, episodes, seeds, seed);
        }
      });
      std::size_t best = 0;
      for (std::size_t i = 0; i < candidates.size(); ++i) {
        report.optimal_candidates.push_back(candidates[i].mean);
        if (candidates[i].mean < candidates[best].mean) best = i;
      }
      result.stats = candidates[best];
    }
    report.attacks.push_back(std::move(result));
  }
  report.best_attack_mean = report.natural.mean;
  for (const auto& a : report.attacks) {
    if (report.best_attack == "none" || a.stats.mean < report.best_attack_mean) {
      report.best_attack = a.name;
      report.best_attack_mean = a.stats.mean;
    }
  }
  return report;
}

nlohmann::json ToJson(const SuiteReport& r) {
  nlohmann::json attacks = nlohmann::json::object();
  for (const auto& a : r.attacks) {
    attacks[a.name] = {{"mean", a.stats.mean}, {"std", a.stats.std}};
  }
  return {{"env", r.env},
          {"eps", r.eps},
          {"method", r.method},
          {"natural", {{"mean", r.natural.mean}, {"std", r.natural.std}}},
          {"attacks", attacks},
          {"optimal_candidates", r.optimal_candidates},
          {"best_attack", r.best_attack},
          {"best_attack_mean", r.best_attack_mean}};
}

std::string ReportCsv(const std::vector<SuiteReport>& reports) {
  std::ostringstream os;
  os << "env,eps,method,natural_mean,natural_std";
  std::vector<std::string> names;
  if (!reports.empty()) {
    for (const auto& a : reports.front().attacks) {
      names.push_back(a.name);
      os << ',' << a.name << "_mean," << a.name << "_std";
    }
  }
  os << ",best_attack,best_attack_mean\n";
  for (const auto& r : reports) {
    os << r.env << ',' << FormatDouble(r.eps) << ',' << r.method << ','
       << FormatDouble(r.natural.mean) << ',' << FormatDouble(r.natural.std);
    for (const auto& name : names) {
      const AttackResult* a = r.Find(name);
      if (a == nullptr) {
        os << ",,";
      } else {
        os << ',' << FormatDouble(a->stats.mean) << ',' << FormatDouble(a->stats.std);
      }
    }
    os << ',' << r.best_attack << ',' << FormatDouble(r.best_attack_mean) << '\n';
  }
  return os.str();
}

}  // namespace atla::attacks
