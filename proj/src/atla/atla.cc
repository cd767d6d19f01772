#include "atla/atla/atla.h"

#include <algorithm>
#include <memory>
#include <numeric>
#include <sstream>

#include "atla/attacks/tabular.h"
#include "atla/common/error.h"
#include "atla/common/json_util.h"
#include "atla/common/parallel.h"
#include "atla/gridworld/gridworld.h"

namespace atla::alternating {

void AtlaConfig::Validate() const {
  if (iterations < 0) throw ValidationError("atla.iterations must be >= 0");
  if (agent_phases < 1 || adversary_phases < 1) {
    throw ValidationError("atla.agent_phases and atla.adversary_phases must be >= 1");
  }
  budget().Validate();
  agent.Validate();
  adversary.Validate();
  if (agent.sa && agent.sa->eps != eps) {
    throw ValidationError("SA regularizer radius differs from the attack budget");
  }
}

nlohmann::json ToJson(const AtlaConfig& c) {
  return {{"iterations", c.iterations},
          {"agent_phases", c.agent_phases},
          {"adversary_phases", c.adversary_phases},
          {"eps", c.eps},
          {"agent", policy_opt::ToJson(c.agent)},
          {"adversary", policy_opt::ToJson(c.adversary)}};
}

AtlaConfig AtlaConfigFromJson(const nlohmann::json& doc, AtlaConfig c) {
  JsonReader r(doc, "atla");
  r.Read("iterations", c.iterations);
  r.Read("agent_phases", c.agent_phases);
  r.Read("adversary_phases", c.adversary_phases);
  r.Read("eps", c.eps);
  if (const auto* v = r.Get("agent")) c.agent = policy_opt::TrainConfigFromJson(*v, c.agent);
  if (const auto* v = r.Get("adversary")) {
    c.adversary = policy_opt::TrainConfigFromJson(*v, c.adversary);
  }
  r.Finish();
  c.Validate();
  return c;
}

AtlaTrainer::AtlaTrainer(const Environment& env, AtlaConfig config, std::uint64_t seed)
    : AtlaTrainer(policy_opt::PpoTrainer::Create(env.observation_dim(), env.action_spec(),
                                                 config.agent, seed, "agent"),
                  env, config, seed) {}

AtlaTrainer::AtlaTrainer(policy_opt::PpoTrainer agent, const Environment& env,
                         AtlaConfig config, std::uint64_t seed)
    : config_(std::move(config)),
      agent_(std::move(agent)),
      adversary_(attacks::MakeAdversaryTrainer(env, config_.adversary, seed)) {
  config_.Validate();
}

policy_opt::IterationStats AtlaTrainer::AgentPhase(const Environment& env) {
  const attacks::PerturbedEnv view(
      env.Clone(), std::make_unique<attacks::LearnedPerturber>(adversary_.policy(), false),
      config_.budget());
  try {
    return agent_.RunIteration(view);
  } catch (const NumericalError& e) {
    throw NumericalError("agent phase of iteration " + std::to_string(iteration_) + ": " +
                         e.what());
  }
}

policy_opt::IterationStats AtlaTrainer::AdversaryPhase(const Environment& env) {
  try {
    return attacks::AdversaryPhase(adversary_, attacks::PolicyActor(agent_.policy(), false),
                                   env, config_.budget());
  } catch (const NumericalError& e) {
    throw NumericalError("adversary phase of iteration " + std::to_string(iteration_) +
                         ": " + e.what());
  }
}

void AtlaTrainer::RunIteration(const Environment& env) {
  for (int i = 0; i < config_.agent_phases; ++i) AgentPhase(env);
  for (int i = 0; i < config_.adversary_phases; ++i) AdversaryPhase(env);
  ++iteration_;
}

void AtlaTrainer::Train(const Environment& env) {
  while (iteration_ < config_.iterations) RunIteration(env);
}

RobustnessReport EvaluateRobustness(const Environment& env, const nets::PolicyNet& agent,
                                    const attacks::AttackBudget& budget,
                                    const attacks::SuiteConfig& suite, std::uint64_t seed,
                                    const std::string& env_name, const std::string& method) {
  RobustnessReport report;
  report.arch = agent.recurrent() ? "lstm" : "mlp";
  report.suite = attacks::EvaluateSuite(env, agent, budget, suite, seed, env_name, method);
  const auto* grid = dynamic_cast<const gridworld::GridEnv*>(&env);
  if (grid == nullptr || agent.recurrent() || agent.head() != nets::HeadKind::kCategorical) {
    return report;
  }
  const gridworld::GridWorld& world = grid->world();
  const samdp::SaMdp samdp = world.LinfSaMdp(budget.eps);
  const samdp::TabularPolicy table =
      attacks::TabularizePolicy(agent, world, grid->encoding());
  const samdp::AdversarySolution solution = samdp::SolveOptimalAdversary(samdp, table);
  ExactFloor floor;
  floor.value = -solution.adversary_values[samdp.start_state];
  std::vector<double> returns;
  const int episodes = suite.episodes * suite.seeds;
  for (int e = 0; e < episodes; ++e) {
    returns.push_back(gridworld::Rollout(samdp, gridworld::SamplePolicy(table),
                                         gridworld::SampleAdversary(solution.adversary),
                                         grid->horizon(), DeriveSeed(seed, "floor", e))
                          .Return());
  }
  floor.returns = Summarize(std::move(returns));
  report.floor = floor;
  return report;
}

nlohmann::json ToJson(const RobustnessReport& r) {
  nlohmann::json doc = attacks::ToJson(r.suite);
  doc["arch"] = r.arch;
  if (r.floor) {
    doc["exact_floor"] = {{"value", r.floor->value},
                          {"return_mean", r.floor->returns.mean},
                          {"return_std", r.floor->returns.std}};
  } else {
    doc["exact_floor"] = nullptr;
  }
  return doc;
}

std::string RobustnessCsv(const std::vector<RobustnessReport>& reports) {
  std::vector<attacks::SuiteReport> suites;
  for (const auto& r : reports) suites.push_back(r.suite);
  std::istringstream in(attacks::ReportCsv(suites));
  std::ostringstream out;
  std::string line;
  std::getline(in, line);
  out << line << ",floor_value,floor_return_mean,floor_return_std,arch\n";
  for (const auto& r : reports) {
    std::getline(in, line);
    out << line << ',';
    if (r.floor) {
      out << FormatDouble(r.floor->value) << ',' << FormatDouble(r.floor->returns.mean) << ','
          << FormatDouble(r.floor->returns.std);
    } else {
      out << ",,";
    }
    out << ',' << r.arch << '\n';
  }
  return out.str();
}

int MedianIndex(const std::vector<double>& scores) {
  if (scores.empty()) throw ValidationError("median of an empty set");
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores[a] < scores[b]; });
  return order[(order.size() - 1) / 2];
}

ReplicateRun TrainReplicates(const Environment& env, const AtlaConfig& config,
                             const attacks::SuiteConfig& suite, int count, std::uint64_t seed,
                             int threads, const std::string& env_name) {
  if (count < 1) throw ValidationError("need at least one replicate");
  std::vector<std::optional<Replicate>> slots(count);
  ParallelFor(count, threads, [&](int i) {
    const std::uint64_t s = DeriveSeed(seed, "replicate", i);
    AtlaTrainer trainer(env, config, s);
    trainer.Train(env);
    RobustnessReport report = EvaluateRobustness(env, trainer.agent().policy(),
                                                 config.budget(), suite, s, env_name, "atla");
    slots[i].emplace(Replicate{s, std::move(trainer), std::move(report)});
  });
  ReplicateRun run;
  std::vector<double> scores;
  for (auto& slot : slots) {
    scores.push_back(slot->report.suite.best_attack_mean);
    run.replicates.push_back(std::move(*slot));
  }
  run.median = MedianIndex(scores);
  return run;
}

}  // namespace atla::alternating
