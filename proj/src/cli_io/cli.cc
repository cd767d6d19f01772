#include "atla/cli_io/cli.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "atla/atla/atla.h"
#include "atla/attacks/suite.h"
#include "atla/attacks/tabular.h"
#include "atla/cli_io/manifest.h"
#include "atla/common/error.h"
#include "atla/common/stats.h"
#include "atla/gridworld/gridworld.h"
#include "atla/mdp/solvers.h"
#include "atla/nets/policy.h"
#include "atla/policy_opt/rollout.h"
#include "atla/policy_opt/trainer.h"
#include "atla/samdp/pomdp.h"
#include "atla/samdp/samdp.h"

namespace atla::cli_io {
namespace {

using gridworld::Encoding;
using gridworld::GridEnv;
using gridworld::GridWorld;

struct Global {
  std::uint64_t seed = 0;
  int threads = 1;
  std::string out;
};

// Settings shared by every subcommand that reads a grid.
struct GridInput {
  std::string path;
  std::shared_ptr<const GridWorld> world;

  void Load() { world = std::make_shared<const GridWorld>(gridworld::LoadGridSpec(path)); }
  nlohmann::json Json() const { return gridworld::ToJson(world->spec()); }
};

struct Budget {
  std::optional<double> eps;
  std::optional<double> eps_cells;

  // Absolute radius in normalized coordinates.
  std::optional<double> Resolve(const GridWorld& world) const {
    if (eps) return *eps;
    if (eps_cells) return *eps_cells * world.pitch();
    return std::nullopt;
  }
};

void AddBudget(CLI::App* cmd, Budget& b) {
  auto* eps = cmd->add_option("--eps", b.eps, "attack radius in normalized coordinates")
                  ->check(CLI::NonNegativeNumber);
  auto* cells = cmd->add_option("--eps-cells", b.eps_cells, "attack radius in grid cells")
                    ->check(CLI::NonNegativeNumber);
  eps->excludes(cells);
}

double RequireBudget(const Budget& b, const GridWorld& world) {
  const auto eps = b.Resolve(world);
  if (!eps) throw ValidationError("one of --eps or --eps-cells is required");
  return *eps;
}

Encoding ParseEncoding(const std::string& name) {
  if (name == "xy") return Encoding::kNormalizedXY;
  if (name == "onehot") return Encoding::kOneHot;
  throw ValidationError("unknown encoding '" + name + "' (expected xy or onehot)");
}

std::string EncodingName(Encoding e) { return e == Encoding::kOneHot ? "onehot" : "xy"; }

// The encoding a checkpoint was trained on, from its input width.
Encoding EncodingFor(const nets::PolicyNet& policy, const GridWorld& world) {
  if (policy.input_dim() == world.observation_dim(Encoding::kNormalizedXY)) {
    return Encoding::kNormalizedXY;
  }
  if (policy.input_dim() == world.observation_dim(Encoding::kOneHot)) return Encoding::kOneHot;
  throw ValidationError("policy input width " + std::to_string(policy.input_dim()) +
                        " matches no encoding of the grid");
}

nlohmann::json LoadJsonOrEmpty(const std::string& path) {
  if (path.empty()) return nlohmann::json::object();
  return nets::ReadJsonFile(path);
}

nlohmann::json InputRecord(const std::string& path) {
  return {{"path", path}, {"sha256", Sha256File(path)}};
}

// Tabular policy from `solve` or a network checkpoint evaluated at the grid
// points.
samdp::TabularPolicy LoadTabularPolicy(const std::string& path, const GridWorld& world) {
  const nlohmann::json doc = nets::ReadJsonFile(path);
  if (doc.is_object() && doc.contains("format")) {
    const nets::PolicyNet net = nets::PolicyFromJson(doc);
    return attacks::TabularizePolicy(net, world, EncodingFor(net, world));
  }
  samdp::TabularPolicy policy = mdp::PolicyFromJson(doc);
  if (policy.n_states() != world.n_states() || policy.n_actions() != gridworld::kNumMoves) {
    throw ValidationError("policy shape does not match the grid");
  }
  return policy;
}

std::vector<double> ToVector(const samdp::ValueVector& v) { return {v.begin(), v.end()}; }

std::string Fmt(double x) { return FormatDouble(x); }

// Greedy path from the start state, stopping at a terminal state, a repeat,
// or the horizon.
nlohmann::json GreedyPath(const GridWorld& world, const samdp::TabularPolicy& policy,
                          bool* reaches_target) {
  nlohmann::json path = nlohmann::json::array();
  std::vector<bool> seen(world.n_states(), false);
  int s = world.start_state();
  *reaches_target = false;
  for (int t = 0; t <= world.spec().horizon; ++t) {
    path.push_back({world.CellOf(s).x, world.CellOf(s).y});
    if (world.IsTarget(s)) {
      *reaches_target = true;
      break;
    }
    if (seen[s]) break;
    seen[s] = true;
    int best = 0;
    for (int a = 1; a < gridworld::kNumMoves; ++a) {
      if (policy.prob(s, a) > policy.prob(s, best)) best = a;
    }
    s = world.Next(s, best);
  }
  return path;
}

// --- Subcommands -----------------------------------------------------------------

struct SolveArgs {
  std::string grid;
  std::string mdp;
  std::string method = "pi";
};

nlohmann::json RunSolve(const SolveArgs& a, OutputDir& dir, std::ostream& out) {
  if (a.method != "pi" && a.method != "vi") {
    throw ValidationError("--method must be pi or vi");
  }
  if (a.grid.empty() == a.mdp.empty()) {
    throw ValidationError("solve needs exactly one of --grid or --mdp");
  }
  const auto solve = [&](const mdp::TabularMdp& m) {
    return a.method == "pi" ? mdp::PolicyIteration(m) : mdp::ValueIteration(m);
  };
  if (!a.mdp.empty()) {
    const mdp::TabularMdp m = mdp::MdpFromJson(nets::ReadJsonFile(a.mdp));
    const mdp::SolveResult r = solve(m);
    std::ostringstream csv;
    csv << "state,value,action\n";
    for (int s = 0; s < m.n_states(); ++s) {
      int best = 0;
      for (int act = 1; act < m.n_actions(); ++act) {
        if (r.policy.prob(s, act) > r.policy.prob(s, best)) best = act;
      }
      csv << s << ',' << Fmt(r.values[s]) << ',' << best << '\n';
    }
    dir.Write("values.csv", csv.str());
    dir.WriteJson("policy.json", mdp::ToJson(r.policy));
    dir.WriteJson("summary.json", {{"iterations", r.iterations}, {"values", ToVector(r.values)}});
    out << "solved " << m.n_states() << "-state MDP in " << r.iterations << " iterations\n";
    return {{"mdp", InputRecord(a.mdp)}, {"method", a.method}};
  }
  GridInput g{a.grid, nullptr};
  g.Load();
  const GridWorld& world = *g.world;
  const mdp::SolveResult r = solve(world.samdp().base);
  const auto values = ToVector(r.values);
  const auto arrows = gridworld::AgentArrows(world, r.policy);
  bool reaches = false;
  const nlohmann::json path = GreedyPath(world, r.policy, &reaches);
  const double natural = mdp::ExpectedTruncatedReturn(world.samdp().base, r.policy,
                                                      world.start_state(), world.spec().horizon);
  const std::string ascii = gridworld::RenderAscii(world, values, arrows);
  dir.WriteJson("grid.json", g.Json());
  dir.WriteJson("policy.json", mdp::ToJson(r.policy));
  dir.Write("values.csv", gridworld::RenderCsv(world, values, arrows));
  dir.Write("values.txt", ascii);
  dir.WriteJson("summary.json", {{"start_value", values[world.start_state()]},
                                 {"greedy_path", path},
                                 {"reaches_target", reaches},
                                 {"truncated_return", natural},
                                 {"iterations", r.iterations}});
  out << ascii << "start value " << Fmt(values[world.start_state()]) << ", greedy path "
      << (reaches ? "reaches" : "misses") << " the target, return " << Fmt(natural) << "\n";
  return {{"grid", g.Json()}, {"grid_file", InputRecord(a.grid)}, {"method", a.method}};
}

struct AdversaryArgs {
  std::string grid;
  std::string policy;
  Budget budget;
};

samdp::SaMdp PerturbationModel(const GridWorld& world, const Budget& budget) {
  const auto eps = budget.Resolve(world);
  return eps ? world.LinfSaMdp(*eps) : world.samdp();
}

nlohmann::json RunAdversary(const AdversaryArgs& a, OutputDir& dir, std::ostream& out) {
  GridInput g{a.grid, nullptr};
  g.Load();
  const GridWorld& world = *g.world;
  const samdp::SaMdp sa = PerturbationModel(world, a.budget);
  const samdp::TabularPolicy policy = LoadTabularPolicy(a.policy, world);
  const samdp::AdversarySolution solution = samdp::SolveOptimalAdversary(sa, policy);
  const samdp::ValueVector attacked = samdp::EvaluateUnderAdversary(sa, policy, solution.adversary);
  const samdp::ValueVector natural = samdp::EvaluateUnderAdversary(
      sa, policy, samdp::AdversaryMap::Identity(sa.n_states()));
  const samdp::TabularPolicy composed = samdp::ComposePolicy(policy, solution.adversary);
  const int s0 = sa.start_state;
  const int horizon = world.spec().horizon;
  const double attacked_return = mdp::ExpectedTruncatedReturn(sa.base, composed, s0, horizon);
  const double natural_return = mdp::ExpectedTruncatedReturn(sa.base, policy, s0, horizon);
  const auto values = ToVector(attacked);
  const auto arrows = gridworld::AdversaryArrows(world, solution.adversary);
  const std::string ascii = gridworld::RenderAscii(world, values, arrows);
  dir.WriteJson("adversary.json", samdp::ToJson(solution.adversary));
  dir.Write("adversary.csv", gridworld::RenderCsv(world, values, arrows));
  dir.Write("adversary.txt", ascii);
  dir.WriteJson("summary.json", {{"natural_value", natural[s0]},
                                 {"attacked_value", attacked[s0]},
                                 {"adversary_value", solution.adversary_values[s0]},
                                 {"natural_truncated_return", natural_return},
                                 {"attacked_truncated_return", attacked_return},
                                 {"horizon", horizon}});
  out << ascii << "agent value " << Fmt(natural[s0]) << " -> " << Fmt(attacked[s0])
      << ", " << horizon << "-step return " << Fmt(natural_return) << " -> "
      << Fmt(attacked_return) << "\n";
  nlohmann::json config = {{"grid", g.Json()}, {"policy", InputRecord(a.policy)}};
  const auto eps = a.budget.Resolve(world);
  config["eps"] = eps ? nlohmann::json(*eps) : nlohmann::json("neighbours");
  return config;
}

struct ExportArgs {
  std::string grid;
  std::string policy;
  std::string adversary;
  Budget budget;
};

nlohmann::json RunExport(const ExportArgs& a, OutputDir& dir, std::ostream& out) {
  GridInput g{a.grid, nullptr};
  g.Load();
  const GridWorld& world = *g.world;
  const samdp::SaMdp sa = PerturbationModel(world, a.budget);
  nlohmann::json config = {{"grid", g.Json()}};
  samdp::AdversaryMap adversary;
  if (!a.adversary.empty()) {
    adversary = samdp::AdversaryMapFromJson(nets::ReadJsonFile(a.adversary));
    config["adversary"] = InputRecord(a.adversary);
  } else if (!a.policy.empty()) {
    adversary = samdp::SolveOptimalAdversary(sa, LoadTabularPolicy(a.policy, world)).adversary;
    config["policy"] = InputRecord(a.policy);
  } else {
    throw ValidationError("export-pomdp needs --adversary or --policy");
  }
  adversary.Validate(sa);
  std::vector<std::string> states;
  for (int s = 0; s < world.n_states(); ++s) {
    states.push_back("x" + std::to_string(world.CellOf(s).x) + "y" +
                     std::to_string(world.CellOf(s).y));
  }
  const samdp::PomdpModel model =
      samdp::BuildPomdp(sa, adversary, states, {"up", "down", "left", "right"});
  const std::string text = samdp::WritePomdpText(model);
  const nlohmann::json doc = samdp::PomdpToJson(model);
  const bool text_ok = samdp::ParsePomdpText(text) == model;
  const bool json_ok = samdp::PomdpFromJson(nlohmann::json::parse(doc.dump())) == model;
  if (!text_ok || !json_ok) throw std::runtime_error("POMDP export does not round-trip");
  dir.Write("model.pomdp", text);
  dir.WriteJson("model.json", doc);
  dir.WriteJson("summary.json", {{"states", model.n_states()},
                                 {"actions", model.n_actions()},
                                 {"observations", model.n_observations()},
                                 {"round_trip", true}});
  out << "POMDP with " << model.n_states() << " states and " << model.n_observations()
      << " observations written; round trip ok\n";
  const auto eps = a.budget.Resolve(world);
  config["eps"] = eps ? nlohmann::json(*eps) : nlohmann::json("neighbours");
  return config;
}

// --- Learning subcommands --------------------------------------------------------

struct NetOverrides {
  std::optional<int> iters;
  std::string arch;
  std::string sa_reg = "off";
  std::optional<double> sa_eps;
};

std::optional<policy_opt::SaRegConfig> ParseSaReg(const std::string& text, double eps,
                                                  std::optional<policy_opt::SaRegConfig> base) {
  if (text == "off") return base;
  double kappa = 0.0;
  try {
    std::size_t used = 0;
    kappa = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
  } catch (const std::exception&) {
    throw ValidationError("--sa-reg must be a number or 'off', got '" + text + "'");
  }
  policy_opt::SaRegConfig sa = base.value_or(policy_opt::SaRegConfig{});
  sa.kappa = kappa;
  sa.eps = eps;
  return sa;
}

struct TrainArgs {
  std::string env;
  std::string config;
  std::string encoding = "xy";
  int eval_episodes = 50;
  NetOverrides net;
};

nlohmann::json RunTrain(const TrainArgs& a, const Global& global, OutputDir& dir,
                        std::ostream& out) {
  GridInput g{a.env, nullptr};
  g.Load();
  const Encoding encoding = ParseEncoding(a.encoding);
  policy_opt::TrainConfig config = policy_opt::TrainConfigFromJson(LoadJsonOrEmpty(a.config));
  if (a.net.iters) config.iterations = *a.net.iters;
  if (!a.net.arch.empty()) config.net.arch = a.net.arch;
  if (a.net.sa_reg != "off" && !a.net.sa_eps) {
    throw ValidationError("--sa-reg needs --sa-eps for vanilla training");
  }
  config.sa = ParseSaReg(a.net.sa_reg, a.net.sa_eps.value_or(0.0), config.sa);
  config.threads = global.threads;
  config.Validate();
  const GridEnv env(g.world, encoding);
  auto trainer = policy_opt::PpoTrainer::Create(env.observation_dim(), env.action_spec(),
                                                config, global.seed, "agent");
  trainer.Train(env, config.iterations);
  const ReturnStats natural = policy_opt::EvaluatePolicy(
      env, trainer.policy(), a.eval_episodes, DeriveSeed(global.seed, "eval"), false);
  dir.WriteJson("agent.json", nets::PolicyToJson(trainer.policy()));
  dir.WriteJson("value.json", nets::ValueToJson(trainer.value()));
  dir.Write("curve.csv", policy_opt::CurveCsv(trainer.curve()));
  dir.WriteJson("eval.json", {{"natural_mean", natural.mean},
                              {"natural_std", natural.std},
                              {"episodes", a.eval_episodes},
                              {"env_steps", trainer.env_steps()}});
  out << "trained " << config.iterations << " iterations (" << trainer.env_steps()
      << " steps); natural return " << Fmt(natural.mean) << " +- " << Fmt(natural.std) << "\n";
  nlohmann::json resolved = policy_opt::ToJson(config);
  resolved.erase("threads");
  return {{"grid", g.Json()},
          {"encoding", EncodingName(encoding)},
          {"train", resolved},
          {"eval_episodes", a.eval_episodes}};
}

struct AttackArgs {
  std::string policy;
  std::string env;
  std::string config;
  std::string method = "ppo";
  std::vector<std::string> attacks;
  std::optional<int> episodes;
  std::optional<int> seeds;
  Budget budget;
};

attacks::SuiteConfig ResolveSuite(const AttackArgs& a, const Global& global) {
  attacks::SuiteConfig suite = attacks::SuiteConfigFromJson(LoadJsonOrEmpty(a.config));
  if (!a.attacks.empty()) suite.attacks = a.attacks;
  if (a.episodes) suite.episodes = *a.episodes;
  if (a.seeds) suite.seeds = *a.seeds;
  suite.threads = global.threads;
  suite.Validate();
  return suite;
}

nlohmann::json SuiteJson(const attacks::SuiteConfig& suite) {
  nlohmann::json j = attacks::ToJson(suite);
  j.erase("threads");
  j["adversary"].erase("threads");
  return j;
}

nlohmann::json RunAttack(const AttackArgs& a, const Global& global, bool robustness,
                         OutputDir& dir, std::ostream& out) {
  GridInput g{a.env, nullptr};
  g.Load();
  const double eps = RequireBudget(a.budget, *g.world);
  const nets::PolicyNet agent = nets::PolicyFromJson(nets::ReadJsonFile(a.policy));
  const Encoding encoding = EncodingFor(agent, *g.world);
  const GridEnv env(g.world, encoding);
  const attacks::SuiteConfig suite = ResolveSuite(a, global);
  const std::string name = g.world->spec().name.empty() ? "grid" : g.world->spec().name;
  if (robustness) {
    const alternating::RobustnessReport report = alternating::EvaluateRobustness(
        env, agent, {eps}, suite, global.seed, name, a.method);
    dir.WriteJson("robustness.json", alternating::ToJson(report));
    dir.Write("robustness.csv", alternating::RobustnessCsv({report}));
    out << "natural " << Fmt(report.suite.natural.mean) << ", best attack "
        << report.suite.best_attack << " " << Fmt(report.suite.best_attack_mean);
    if (report.floor) out << ", exact floor value " << Fmt(report.floor->value);
    out << "\n";
  } else {
    const attacks::SuiteReport report =
        attacks::EvaluateSuite(env, agent, {eps}, suite, global.seed, name, a.method);
    dir.WriteJson("report.json", attacks::ToJson(report));
    dir.Write("report.csv", attacks::ReportCsv({report}));
    out << attacks::ReportCsv({report});
  }
  return {{"grid", g.Json()},
          {"policy", InputRecord(a.policy)},
          {"encoding", EncodingName(encoding)},
          {"eps", eps},
          {"method", a.method},
          {"suite", SuiteJson(suite)}};
}

struct AtlaArgs {
  std::string env;
  std::string config;
  std::string attack_config;
  std::string encoding = "xy";
  int replicates = 5;
  Budget budget;
  NetOverrides net;
};

nlohmann::json RunAtla(const AtlaArgs& a, const Global& global, OutputDir& dir,
                       std::ostream& out) {
  GridInput g{a.env, nullptr};
  g.Load();
  const double eps = RequireBudget(a.budget, *g.world);
  const Encoding encoding = ParseEncoding(a.encoding);
  if (a.replicates < 1) throw ValidationError("--replicates must be >= 1");
  alternating::AtlaConfig config = alternating::AtlaConfigFromJson(LoadJsonOrEmpty(a.config));
  config.eps = eps;
  if (config.agent.sa) config.agent.sa->eps = eps;
  if (a.net.iters) config.iterations = *a.net.iters;
  if (!a.net.arch.empty()) config.agent.net.arch = a.net.arch;
  config.agent.sa = ParseSaReg(a.net.sa_reg, eps, config.agent.sa);
  config.Validate();
  AttackArgs suite_args;
  suite_args.config = a.attack_config;
  const attacks::SuiteConfig suite = ResolveSuite(suite_args, Global{global.seed, 1, ""});
  const GridEnv env(g.world, encoding);
  const std::string name = g.world->spec().name.empty() ? "grid" : g.world->spec().name;
  const alternating::ReplicateRun run = alternating::TrainReplicates(
      env, config, suite, a.replicates, global.seed, global.threads, name);

  nlohmann::json reports = nlohmann::json::array();
  std::vector<alternating::RobustnessReport> rows;
  for (std::size_t i = 0; i < run.replicates.size(); ++i) {
    const auto& r = run.replicates[i];
    const std::string sub = "replicate_" + std::to_string(i) + "/";
    dir.WriteJson(sub + "agent.json", nets::PolicyToJson(r.trainer.agent().policy()));
    dir.WriteJson(sub + "agent_value.json", nets::ValueToJson(r.trainer.agent().value()));
    dir.WriteJson(sub + "adversary.json", nets::PolicyToJson(r.trainer.adversary().policy()));
    dir.WriteJson(sub + "adversary_value.json",
                  nets::ValueToJson(r.trainer.adversary().value()));
    dir.Write(sub + "agent_curve.csv", policy_opt::CurveCsv(r.trainer.agent().curve()));
    dir.Write(sub + "adversary_curve.csv",
              policy_opt::CurveCsv(r.trainer.adversary().curve()));
    nlohmann::json doc = alternating::ToJson(r.report);
    doc["replicate"] = i;
    doc["seed"] = r.seed;
    reports.push_back(doc);
    rows.push_back(r.report);
  }
  const auto& median = run.replicates[run.median];
  dir.WriteJson("agent.json", nets::PolicyToJson(median.trainer.agent().policy()));
  dir.WriteJson("adversary.json", nets::PolicyToJson(median.trainer.adversary().policy()));
  dir.WriteJson("report.json", {{"median_replicate", run.median},
                                {"median", reports[run.median]},
                                {"replicates", reports}});
  dir.Write("report.csv", alternating::RobustnessCsv(rows));
  out << "median replicate " << run.median << ": natural "
      << Fmt(median.report.suite.natural.mean) << ", best attack "
      << Fmt(median.report.suite.best_attack_mean);
  if (median.report.floor) out << ", exact floor value " << Fmt(median.report.floor->value);
  out << "\n";
  nlohmann::json resolved = alternating::ToJson(config);
  resolved["agent"].erase("threads");
  resolved["adversary"].erase("threads");
  return {{"grid", g.Json()},
          {"encoding", EncodingName(encoding)},
          {"atla", resolved},
          {"replicates", a.replicates},
          {"suite", SuiteJson(suite)}};
}

// --- Dispatch ---------------------------------------------------------------------

void ReportError(std::ostream& err, const std::string& kind, const std::string& message) {
  err << nlohmann::json{{"error", {{"kind", kind}, {"message", message}}}}.dump() << "\n";
}

std::string ResolveOutputDir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') return env;
  return "atla-out";
}

// Recorded command line without its output directory.
std::vector<std::string> StripOut(const std::vector<std::string>& args) {
  std::vector<std::string> kept;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--out") {
      ++i;
      continue;
    }
    if (args[i].rfind("--out=", 0) == 0) continue;
    kept.push_back(args[i]);
  }
  return kept;
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"State-adversarial MDP toolkit: exact adversaries, attacks and ATLA training"};
  app.require_subcommand(1);
  app.fallthrough();
  Global global;
  app.add_option("--seed", global.seed, "root random seed");
  app.add_option("--threads", global.threads, "worker threads (results do not depend on it)")
      ->check(CLI::PositiveNumber);
  app.add_option("--out", global.out,
                 std::string("output directory (default $") + kOutputDirEnv + " or ./atla-out)");

  SolveArgs solve;
  auto* solve_cmd = app.add_subcommand("solve", "exact DP on a grid or MDP");
  solve_cmd->add_option("--grid,--env", solve.grid, "grid spec (.json or ASCII art)");
  solve_cmd->add_option("--mdp", solve.mdp, "MDP JSON document");
  solve_cmd->add_option("--method", solve.method, "pi (policy iteration) or vi");

  AdversaryArgs adversary;
  auto* adversary_cmd = app.add_subcommand("adversary", "exact optimal adversary for a policy");
  adversary_cmd->add_option("--grid,--env", adversary.grid, "grid spec")->required();
  adversary_cmd->add_option("--policy", adversary.policy, "tabular policy or checkpoint")
      ->required();
  AddBudget(adversary_cmd, adversary.budget);

  ExportArgs exported;
  auto* export_cmd = app.add_subcommand("export-pomdp", "POMDP induced by a fixed adversary");
  export_cmd->add_option("--grid,--env", exported.grid, "grid spec")->required();
  export_cmd->add_option("--adversary", exported.adversary, "adversary map JSON");
  export_cmd->add_option("--policy", exported.policy, "policy whose optimal adversary to use");
  AddBudget(export_cmd, exported.budget);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "vanilla PPO");
  train_cmd->add_option("--env,--grid", train.env, "grid spec")->required();
  train_cmd->add_option("--config", train.config, "training config JSON");
  train_cmd->add_option("--encoding", train.encoding, "xy or onehot");
  train_cmd->add_option("--iters", train.net.iters, "PPO iterations");
  train_cmd->add_option("--arch", train.net.arch, "mlp or lstm");
  train_cmd->add_option("--sa-reg", train.net.sa_reg, "SA regularizer weight or off");
  train_cmd->add_option("--sa-eps", train.net.sa_eps, "SA regularizer radius");
  train_cmd->add_option("--eval-episodes", train.eval_episodes, "evaluation episodes")
      ->check(CLI::PositiveNumber);

  AttackArgs attack;
  const auto add_attack_options = [](CLI::App* cmd, AttackArgs& a) {
    cmd->add_option("--policy", a.policy, "agent checkpoint")->required();
    cmd->add_option("--env,--grid", a.env, "grid spec")->required();
    cmd->add_option("--config", a.config, "attack suite config JSON");
    cmd->add_option("--method", a.method, "label for the report");
    cmd->add_option("--attacks", a.attacks, "subset of none,random,mad,optimal")
        ->delimiter(',');
    cmd->add_option("--episodes", a.episodes, "episodes per seed");
    cmd->add_option("--seeds", a.seeds, "evaluation seeds");
    AddBudget(cmd, a.budget);
  };
  auto* attack_cmd = app.add_subcommand("attack", "attack suite against a frozen agent");
  add_attack_options(attack_cmd, attack);
  AttackArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "robustness report with exact floor");
  add_attack_options(eval_cmd, eval);

  AtlaArgs atla;
  auto* atla_cmd = app.add_subcommand("atla", "alternating training with learned adversaries");
  atla_cmd->add_option("--env,--grid", atla.env, "grid spec")->required();
  atla_cmd->add_option("--config", atla.config, "ATLA config JSON");
  atla_cmd->add_option("--attack-config", atla.attack_config, "attack suite config JSON");
  atla_cmd->add_option("--encoding", atla.encoding, "xy or onehot");
  atla_cmd->add_option("--arch", atla.net.arch, "mlp or lstm");
  atla_cmd->add_option("--sa-reg", atla.net.sa_reg, "SA regularizer weight or off");
  atla_cmd->add_option("--iters", atla.net.iters, "ATLA iterations");
  atla_cmd->add_option("--replicates", atla.replicates, "independent replicates");
  AddBudget(atla_cmd, atla.budget);

  std::string manifest_path;
  auto* replay_cmd = app.add_subcommand("replay", "re-run a manifest and compare digests");
  replay_cmd->add_option("--manifest", manifest_path, "manifest.json of an earlier run")
      ->required();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    ReportError(err, "usage", e.what());
    return kExitUsage;
  }

  try {
    const std::string out_dir = ResolveOutputDir(global.out);
    if (replay_cmd->parsed()) {
      const RunManifest recorded = ManifestFromJson(nets::ReadJsonFile(manifest_path));
      std::vector<std::string> rerun = StripOut(recorded.command_line);
      rerun.push_back("--out");
      rerun.push_back(out_dir);
      const int code = RunCli(rerun, out, err);
      if (code != kExitOk) return code;
      const std::vector<std::string> bad = VerifyOutputs(recorded, out_dir);
      for (const auto& path : bad) out << "differs: " << path << "\n";
      out << (bad.empty() ? "replay identical\n" : "replay differs\n");
      return bad.empty() ? kExitOk : kExitRuntime;
    }
    RunManifest manifest;
    manifest.command_line = args;
    manifest.seed = global.seed;
    manifest.threads = global.threads;
    manifest.version = VersionTag();
    manifest.started = UtcTimestamp();
    OutputDir dir(out_dir);
    if (solve_cmd->parsed()) {
      manifest.command = "solve";
      manifest.config = RunSolve(solve, dir, out);
    } else if (adversary_cmd->parsed()) {
      manifest.command = "adversary";
      manifest.config = RunAdversary(adversary, dir, out);
    } else if (export_cmd->parsed()) {
      manifest.command = "export-pomdp";
      manifest.config = RunExport(exported, dir, out);
    } else if (train_cmd->parsed()) {
      manifest.command = "train";
      manifest.config = RunTrain(train, global, dir, out);
    } else if (attack_cmd->parsed()) {
      manifest.command = "attack";
      manifest.config = RunAttack(attack, global, false, dir, out);
    } else if (eval_cmd->parsed()) {
      manifest.command = "eval";
      manifest.config = RunAttack(eval, global, true, dir, out);
    } else {
      manifest.command = "atla";
      manifest.config = RunAtla(atla, global, dir, out);
    }
    dir.Finish(std::move(manifest));
    return kExitOk;
  } catch (const ValidationError& e) {
    ReportError(err, "config", e.what());
    return kExitUsage;
  } catch (const NumericalError& e) {
    ReportError(err, "numerical", e.what());
    return kExitRuntime;
  } catch (const std::exception& e) {
    ReportError(err, "runtime", e.what());
    return kExitRuntime;
  }
}

}  // namespace atla::cli_io
