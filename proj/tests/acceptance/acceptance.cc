// End-to-end acceptance run. Prints one PASS/FAIL line per criterion, writes
// every criterion's result document to <out>/run_1, re-runs everything into
// <out>/run_2 and compares the files byte for byte.

#include <Eigen/Core>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "atla/atla/atla.h"
#include "atla/attacks/suite.h"
#include "atla/attacks/tabular.h"
#include "atla/cli_io/manifest.h"
#include "atla/common/stats.h"
#include "atla/gridworld/gridworld.h"
#include "atla/mdp/solvers.h"
#include "atla/nets/policy.h"
#include "atla/policy_opt/rollout.h"
#include "atla/policy_opt/sa_regularizer.h"
#include "atla/policy_opt/trainer.h"
#include "atla/samdp/pomdp.h"
#include "atla/samdp/samdp.h"
#include "grad_check.h"
#include "json.hpp"
#include "test_util.h"

namespace atla::acceptance {
namespace {

using gridworld::Encoding;
using gridworld::GridEnv;
using gridworld::GridWorld;
using json = nlohmann::json;

constexpr std::uint64_t kRootSeed = 20240607;
constexpr int kReplicates = 5;

struct Outcome {
  bool pass = false;
  std::string summary;
  json result;  // written to criterion_<n>.json; must not contain timings
};

std::string Fixed(double x, int digits = 4) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(digits);
  out << x;
  return out.str();
}

double Seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

json StatsJson(const ReturnStats& s) { return {{"mean", s.mean}, {"std", s.std}}; }

// Shared state of one acceptance run. Trained agents are built on first use
// and reused by later criteria.
class Context {
 public:
  Context()
      : world_(std::make_shared<const GridWorld>(
            gridworld::LoadGridSpec(testing::DataPath("grids/canonical.json")))),
        env_(world_, Encoding::kNormalizedXY),
        ppo_(policy_opt::TrainConfigFromJson(
            nets::ReadJsonFile(testing::DataPath("configs/ppo_grid.json")))) {}

  const GridWorld& world() const { return *world_; }
  const GridEnv& env() const { return env_; }
  const policy_opt::TrainConfig& ppo() const { return ppo_; }
  double eps() const { return world_->pitch(); }
  attacks::SuiteConfig suite() const { return {}; }

  static std::uint64_t ReplicateSeed(int i) { return DeriveSeed(kRootSeed, "replicate", i); }

  const std::vector<policy_opt::PpoTrainer>& Vanilla() {
    if (vanilla_.empty()) {
      for (int i = 0; i < kReplicates; ++i) {
        auto trainer = policy_opt::PpoTrainer::Create(env_.observation_dim(), env_.action_spec(),
                                                      ppo_, ReplicateSeed(i), "agent");
        trainer.Train(env_, ppo_.iterations);
        vanilla_.push_back(std::move(trainer));
      }
    }
    return vanilla_;
  }

  const std::vector<alternating::RobustnessReport>& VanillaReports() {
    if (vanilla_reports_.empty()) {
      std::vector<double> scores;
      for (int i = 0; i < kReplicates; ++i) {
        vanilla_reports_.push_back(alternating::EvaluateRobustness(
            env_, Vanilla()[i].policy(), {eps()}, suite(), ReplicateSeed(i), "canonical",
            "ppo"));
        scores.push_back(vanilla_reports_.back().suite.best_attack_mean);
      }
      vanilla_median_ = alternating::MedianIndex(scores);
    }
    return vanilla_reports_;
  }

  int VanillaMedian() {
    VanillaReports();
    return vanilla_median_;
  }

  const alternating::ReplicateRun& Atla() {
    if (!atla_) {
      alternating::AtlaConfig config;
      config.iterations = ppo_.iterations;
      config.agent = ppo_;
      config.eps = eps();
      atla_ = alternating::TrainReplicates(env_, config, suite(), kReplicates, kRootSeed, 1,
                                           "canonical");
    }
    return *atla_;
  }

 private:
  std::shared_ptr<const GridWorld> world_;
  GridEnv env_;
  policy_opt::TrainConfig ppo_;
  std::vector<policy_opt::PpoTrainer> vanilla_;
  std::vector<alternating::RobustnessReport> vanilla_reports_;
  int vanilla_median_ = -1;
  std::optional<alternating::ReplicateRun> atla_;
};

// --- 1. Exact-DP agent on the canonical grid -------------------------------

Outcome ExactAgent(Context& ctx) {
  const GridWorld& world = ctx.world();
  const samdp::SaMdp& sa = world.samdp();
  const mdp::SolveResult pi = mdp::PolicyIteration(sa.base);
  const double expected = mdp::ExpectedTruncatedReturn(sa.base, pi.policy, sa.start_state,
                                                       world.spec().horizon);
  const gridworld::EpisodeTrace trace =
      gridworld::Rollout(sa, gridworld::GreedyPolicy(pi.policy), gridworld::IdentityAdversary(),
                         world.spec().horizon, kRootSeed);
  std::vector<int> path = {sa.start_state};
  for (const auto& step : trace.steps) path.push_back(step.next_state);
  const bool reached = trace.terminal && world.IsTarget(path.back());

  Outcome o;
  o.pass = expected == 1.0 && trace.Return() == 1.0 && reached;
  o.summary = "expected return " + FormatDouble(expected) + ", greedy path " +
              std::to_string(trace.steps.size()) + " steps" +
              (reached ? " ending at the target" : " not reaching the target");
  o.result = {{"expected_return", expected},
              {"rollout_return", trace.Return()},
              {"greedy_path", path},
              {"reaches_target", reached},
              {"start_value", pi.values[sa.start_state]}};
  return o;
}

// --- 2. Exact optimal adversary against the exact-DP agent -----------------

Outcome ExactAdversary(Context& ctx) {
  const GridWorld& world = ctx.world();
  const samdp::SaMdp& sa = world.samdp();
  const mdp::SolveResult pi = mdp::PolicyIteration(sa.base);
  const samdp::AdversarySolution adv = samdp::SolveOptimalAdversary(sa, pi.policy);
  constexpr int kHorizon = 200;
  const double expected = mdp::ExpectedTruncatedReturn(
      sa.base, samdp::ComposePolicy(pi.policy, adv.adversary), sa.start_state, kHorizon);
  const gridworld::EpisodeTrace trace =
      gridworld::Rollout(sa, gridworld::GreedyPolicy(pi.policy),
                         gridworld::SampleAdversary(adv.adversary), kHorizon, kRootSeed);
  const int trap_visits = trace.CountVisits([&](int s) { return world.IsTrap(s); });
  const double adversary_value = adv.adversary_values[sa.start_state];

  Outcome o;
  o.pass = expected <= -10.0 && trace.Return() <= -10.0 && adversary_value > 0.0;
  o.summary = "truncated return " + Fixed(expected, 1) + " (" + std::to_string(trap_visits) +
              " trap entries), adversary value " + Fixed(adversary_value);
  o.result = {{"expected_truncated_return", expected},
              {"rollout_return", trace.Return()},
              {"trap_visits", trap_visits},
              {"adversary_value", adversary_value},
              {"adversary", samdp::ToJson(adv.adversary)}};
  return o;
}

// --- 3. Optimal adversary solver against enumeration ---------------------------------

Outcome OracleEquivalence(Context&) {
  constexpr int kInstances = 100;
  Rng rng = MakeRng(kRootSeed, "oracle");
  double worst_value_gap = 0.0;
  int map_mismatches = 0;
  std::uint64_t maps = 0;
  json instances = json::array();
  for (int k = 0; k < kInstances; ++k) {
    const int n = 2 + static_cast<int>(rng() % 5);
    const int m = 1 + static_cast<int>(rng() % 3);
    const double gamma = Uniform(rng, 0.5, 0.95);
    const samdp::SaMdp sa = testing::RandomSaMdp(rng, n, m, 3, gamma);
    const samdp::TabularPolicy policy = testing::RandomPolicy(rng, n, m, k % 4 == 0);

    const samdp::AdversarySolution masked = samdp::SolveOptimalAdversary(sa, policy);
    const samdp::AdversarySolution finite = samdp::SolveOptimalAdversary(
        sa, policy, mdp::kDefaultTol, samdp::SetConstraint::kFiniteCost);
    const samdp::EnumerationResult oracle = samdp::EnumerateAdversaries(sa, policy);
    const samdp::ValueVector achieved = samdp::EvaluateUnderAdversary(sa, policy, masked.adversary);
    double gap = 0.0;
    for (int s = 0; s < n; ++s) {
      gap = std::max(gap, std::abs(-masked.adversary_values[s] - oracle.agent_values[s]));
      gap = std::max(gap, std::abs(achieved[s] - oracle.agent_values[s]));
    }
    worst_value_gap = std::max(worst_value_gap, gap);
    if (!(masked.adversary == finite.adversary)) ++map_mismatches;
    maps += oracle.maps_evaluated;
    instances.push_back({{"states", n},
                         {"actions", m},
                         {"gamma", gamma},
                         {"maps", oracle.maps_evaluated},
                         {"max_gap", gap},
                         {"start_value", oracle.agent_values[sa.start_state]}});
  }
  Outcome o;
  o.pass = worst_value_gap <= 1e-8 && map_mismatches == 0;
  o.summary = std::to_string(kInstances) + " instances, " + std::to_string(maps) +
              " maps enumerated, max |solve - enumerate| " + FormatDouble(worst_value_gap) +
              ", masked/finite-cost map mismatches " + std::to_string(map_mismatches);
  o.result = {{"max_value_gap", worst_value_gap},
              {"map_mismatches", map_mismatches},
              {"instances", instances}};
  return o;
}

// --- 4. POMDP export --------------------------------------------------------

samdp::AdversaryMap RandomAdversaryMap(const samdp::SaMdp& sa, Rng& rng) {
  samdp::AdversaryMap map(sa.n_states());
  for (int s = 0; s < sa.n_states(); ++s) {
    const auto& set = sa.perturbation_sets[s];
    if (rng() % 3 == 0) {
      map.set_prob(s, set[rng() % set.size()], 1.0);
      continue;
    }
    std::vector<double> w(set.size());
    double total = 0.0;
    for (auto& x : w) total += (x = UniformUnit(rng) + 1e-3);
    for (std::size_t k = 0; k < set.size(); ++k) map.set_prob(s, set[k], w[k] / total);
  }
  return map;
}

Outcome PomdpExport(Context&) {
  constexpr int kInstances = 50;
  Rng rng = MakeRng(kRootSeed, "pomdp");
  double worst_row = 0.0;
  int round_trip_failures = 0;
  json instances = json::array();
  for (int k = 0; k < kInstances; ++k) {
    const int n = 2 + static_cast<int>(rng() % 5);
    const int m = 1 + static_cast<int>(rng() % 3);
    const samdp::SaMdp sa = testing::RandomSaMdp(rng, n, m, 3, Uniform(rng, 0.5, 0.95));
    const samdp::AdversaryMap nu = RandomAdversaryMap(sa, rng);
    const samdp::PomdpModel model = samdp::BuildPomdp(sa, nu);
    for (int s = 0; s < model.n_states(); ++s) {
      double row = 0.0;
      for (int obs = 0; obs < model.n_observations(); ++obs) row += model.O(s, obs);
      worst_row = std::max(worst_row, std::abs(row - 1.0));
    }
    const std::string text = samdp::WritePomdpText(model);
    const samdp::PomdpModel parsed = samdp::ParsePomdpText(text);
    const bool exact = parsed == model && samdp::WritePomdpText(parsed) == text &&
                       samdp::PomdpFromJson(samdp::PomdpToJson(model)) == model;
    if (!exact) ++round_trip_failures;
    instances.push_back({{"states", n},
                         {"observations", model.n_observations()},
                         {"sha256", cli_io::Sha256Hex(text)},
                         {"round_trip", exact}});
  }
  Outcome o;
  o.pass = worst_row <= 1e-12 && round_trip_failures == 0;
  o.summary = std::to_string(kInstances) + " exports, max |row sum - 1| " +
              FormatDouble(worst_row) + ", round-trip failures " +
              std::to_string(round_trip_failures);
  o.result = {{"max_row_error", worst_row},
              {"round_trip_failures", round_trip_failures},
              {"instances", instances}};
  return o;
}

// --- 5. Finite-difference gradient suite -----------------------------------

// Loss = sum_t log pi(a_t | x_<=t) + c * entropy_t over one sequence; checks
// the parameter gradient (including a Gaussian log-std) and the input
// gradient.
testing::ModelGradCheck CheckPolicyLoss(nets::PolicyNet& policy, int steps, int samples,
                                        Rng& rng) {
  constexpr double kEntropy = 0.05;
  Eigen::MatrixXd inputs = testing::RandomMatrix(policy.input_dim(), steps, rng);
  std::vector<EnvAction> actions;
  {
    const Eigen::MatrixXd out = policy.body().Forward(inputs, policy.InitialState(), nullptr);
    for (int t = 0; t < steps; ++t) actions.push_back(policy.Sample(out.col(t), rng));
  }
  auto loss = [&] {
    const Eigen::MatrixXd out = policy.body().Forward(inputs, policy.InitialState(), nullptr);
    double total = 0.0;
    for (int t = 0; t < steps; ++t) {
      total += policy.LogProb(out.col(t), actions[t]) + kEntropy * policy.Entropy(out.col(t));
    }
    return total;
  };
  nets::Tape tape;
  const Eigen::MatrixXd out = policy.body().Forward(inputs, policy.InitialState(), &tape);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(policy.params().size());
  Eigen::MatrixXd d_out = Eigen::MatrixXd::Zero(out.rows(), out.cols());
  for (int t = 0; t < steps; ++t) {
    policy.AddLogProbGrad(out.col(t), actions[t], 1.0, d_out.col(t), &grad);
    policy.AddEntropyGrad(out.col(t), kEntropy, d_out.col(t), &grad);
  }
  const Eigen::MatrixXd d_in = policy.body().Backward(tape, d_out, &grad);

  testing::ModelGradCheck r;
  r.params = testing::CheckGradient(policy.params().values(), grad, loss, samples, rng);
  Eigen::VectorXd flat = Eigen::Map<const Eigen::VectorXd>(inputs.data(), inputs.size());
  const Eigen::VectorXd flat_grad = Eigen::Map<const Eigen::VectorXd>(d_in.data(), d_in.size());
  auto input_loss = [&] {
    inputs = Eigen::Map<const Eigen::MatrixXd>(flat.data(), inputs.rows(), inputs.cols());
    return loss();
  };
  r.inputs = testing::CheckGradient(flat, flat_grad, input_loss, samples, rng);
  return r;
}

Outcome GradientSuite(Context&) {
  constexpr int kObs = 6;
  constexpr int kSteps = 24;
  constexpr int kSamples = 100;
  constexpr double kTol = 1e-4;
  Rng rng = MakeRng(kRootSeed, "gradients");
  double worst = 0.0;
  int min_checked = std::numeric_limits<int>::max();
  json checks = json::array();
  auto record = [&](const std::string& name, const testing::ModelGradCheck& r) {
    worst = std::max({worst, r.params.max_relative_error, r.inputs.max_relative_error});
    min_checked = std::min({min_checked, r.params.checked, r.inputs.checked});
    checks.push_back({{"network", name},
                      {"param_coords", r.params.checked},
                      {"param_max_rel_error", r.params.max_relative_error},
                      {"input_coords", r.inputs.checked},
                      {"input_max_rel_error", r.inputs.max_relative_error}});
  };
  for (const std::string arch : {"mlp", "lstm"}) {
    policy_opt::NetConfig net;
    net.arch = arch;
    net.hidden = {16, 16};
    net.lstm_hidden = 8;
    net.embed = 6;
    for (const bool discrete : {true, false}) {
      const ActionSpec spec = discrete ? ActionSpec{true, 4, 0} : ActionSpec{false, 0, 2};
      nets::PolicyNet policy = policy_opt::MakePolicy(net, kObs, spec, rng);
      testing::RandomizeParams(policy.params(), rng, 0.4);
      record(arch + "/policy/" + (discrete ? "categorical" : "gaussian"),
             CheckPolicyLoss(policy, kSteps, kSamples, rng));
    }
    auto value = policy_opt::MakeValue(net, kObs, rng);
    testing::RandomizeParams(value->params(), rng, 0.4);
    record(arch + "/value",
           testing::CheckModelGradients(*value, testing::RandomMatrix(kObs, kSteps, rng),
                                        testing::RandomMatrix(1, kSteps, rng), true, kSamples,
                                        rng));
  }
  Outcome o;
  o.pass = worst <= kTol && min_checked >= kSamples;
  o.summary = std::to_string(checks.size()) + " networks (mlp and lstm over " +
              std::to_string(kSteps) + " steps), >= " + std::to_string(min_checked) +
              " coordinates per check, max relative error " + FormatDouble(worst);
  o.result = {{"max_relative_error", worst}, {"checks", checks}};
  return o;
}

// --- 6. Vanilla PPO ----------------------------------------------------------

Outcome PpoSanity(Context& ctx) {
  constexpr int kEpisodes = 50;
  const auto& vanilla = ctx.Vanilla();
  std::vector<double> means;
  std::int64_t steps = 0;
  json replicates = json::array();
  for (int i = 0; i < kReplicates; ++i) {
    const ReturnStats natural = policy_opt::EvaluatePolicy(
        ctx.env(), vanilla[i].policy(), kEpisodes, DeriveSeed(Context::ReplicateSeed(i), "natural"),
        false);
    means.push_back(natural.mean);
    steps = std::max(steps, vanilla[i].env_steps());
    replicates.push_back({{"seed", Context::ReplicateSeed(i)},
                          {"env_steps", vanilla[i].env_steps()},
                          {"natural", StatsJson(natural)},
                          {"agent_sha256", cli_io::Sha256Hex(
                                               nets::PolicyToJson(vanilla[i].policy()).dump())}});
  }
  const double median = Median(means);
  std::string listed;
  for (double m : means) listed += (listed.empty() ? "" : " ") + Fixed(m, 2);
  Outcome o;
  o.pass = median >= 0.9 && steps <= 200000;
  o.summary = "median natural return " + Fixed(median, 3) + " over seeds [" + listed + "], " +
              std::to_string(steps) + " env steps";
  o.result = {{"median_natural", median}, {"max_env_steps", steps}, {"replicates", replicates}};
  return o;
}

// --- 7. Attack ordering -----------------------------------------------------

Outcome AttackOrdering(Context& ctx) {
  const auto& reports = ctx.VanillaReports();
  const int median = ctx.VanillaMedian();
  const attacks::SuiteReport& r = reports[median].suite;
  const ReturnStats& natural = r.natural;
  const ReturnStats& random = r.Find("random")->stats;
  const ReturnStats& mad = r.Find("mad")->stats;
  const ReturnStats& optimal = r.Find("optimal")->stats;
  const bool ordered =
      optimal.mean <= mad.mean && mad.mean <= random.mean && random.mean <= natural.mean;
  const bool separated = optimal.mean + optimal.std < natural.mean - natural.std;
  json all = json::array();
  for (const auto& rep : reports) all.push_back(alternating::ToJson(rep));
  Outcome o;
  o.pass = ordered && separated;
  o.summary = "median agent " + std::to_string(median) + ": optimal " + Fixed(optimal.mean, 3) +
              " +- " + Fixed(optimal.std, 3) + " <= mad " + Fixed(mad.mean, 3) +
              " <= random " + Fixed(random.mean, 3) + " <= natural " + Fixed(natural.mean, 3) +
              " +- " + Fixed(natural.std, 3) + (ordered ? "" : " [order violated]") +
              (separated ? "" : " [1-std intervals overlap]");
  o.result = {{"median_replicate", median},
              {"ordered", ordered},
              {"separated", separated},
              {"reports", all}};
  return o;
}

// --- 8. Exactness floor -------------------------------------------------------

struct FloorCase {
  std::string name;
  samdp::SaMdp sa;
  samdp::TabularPolicy policy;
  bool learn = false;  // also train the tabular learned adversary
};

Outcome ExactnessFloor(Context& ctx) {
  const GridWorld& world = ctx.world();
  std::vector<FloorCase> cases;
  {
    const samdp::SaMdp& sa = world.samdp();
    cases.push_back({"canonical/4-neighbour/dp-agent", sa,
                     mdp::PolicyIteration(sa.base).policy, true});
  }
  const auto& vanilla = ctx.Vanilla();
  const int median = ctx.VanillaMedian();
  for (int i = 0; i < kReplicates; ++i) {
    cases.push_back({"canonical/linf-pitch/ppo-" + std::to_string(i), world.LinfSaMdp(ctx.eps()),
                     attacks::TabularizePolicy(vanilla[i].policy(), world,
                                               Encoding::kNormalizedXY),
                     i == median});
  }
  {
    const GridWorld bandit(gridworld::LoadGridSpec(testing::DataPath("grids/bandit.json")));
    const samdp::SaMdp& sa = bandit.samdp();
    cases.push_back({"bandit/dp-agent", sa, mdp::PolicyIteration(sa.base).policy, false});
  }
  Rng rng = MakeRng(kRootSeed, "floor");
  for (int k = 0; k < 20; ++k) {
    const int n = 2 + static_cast<int>(rng() % 5);
    const int m = 1 + static_cast<int>(rng() % 3);
    samdp::SaMdp sa = testing::RandomSaMdp(rng, n, m, 3, Uniform(rng, 0.5, 0.95));
    samdp::TabularPolicy policy = testing::RandomPolicy(rng, n, m);
    cases.push_back({"random/" + std::to_string(k), std::move(sa), std::move(policy), false});
  }

  double worst_margin = std::numeric_limits<double>::infinity();
  double worst_learned_gap = 0.0;
  int attacks_checked = 0;
  json rows = json::array();
  for (const FloorCase& c : cases) {
    const samdp::SaMdp& sa = c.sa;
    const samdp::AdversarySolution exact = samdp::SolveOptimalAdversary(sa, c.policy);
    std::vector<std::pair<std::string, samdp::AdversaryMap>> maps = {
        {"identity", samdp::AdversaryMap::Identity(sa.n_states())},
        {"uniform", samdp::AdversaryMap::Uniform(sa)},
        {"mad", attacks::MadAdversaryMap(sa, c.policy)}};
    for (int k = 0; k < 20; ++k) maps.push_back({"random", RandomAdversaryMap(sa, rng)});
    std::optional<double> learned_gap;
    if (c.learn) {
      policy_opt::TrainConfig config = attacks::DefaultTabularAdversaryConfig();
      config.ppo.gamma = sa.base.gamma();
      const attacks::TabularLearnedAdversary learned = attacks::TrainTabularAdversary(
          sa, c.policy, config, world.spec().horizon, DeriveSeed(kRootSeed, "tabular"));
      maps.push_back({"learned/sampled", learned.stochastic});
      maps.push_back({"learned/greedy", learned.greedy});
    }
    const double floor = -exact.adversary_values[sa.start_state];
    double case_margin = std::numeric_limits<double>::infinity();
    double best_learned = std::numeric_limits<double>::infinity();
    for (const auto& [name, map] : maps) {
      const samdp::ValueVector v = samdp::EvaluateUnderAdversary(sa, c.policy, map);
      for (int s = 0; s < sa.n_states(); ++s) {
        case_margin = std::min(case_margin, v[s] + exact.adversary_values[s]);
      }
      if (name.starts_with("learned")) best_learned = std::min(best_learned, v[sa.start_state]);
      ++attacks_checked;
    }
    worst_margin = std::min(worst_margin, case_margin);
    json row = {{"case", c.name}, {"floor", floor}, {"min_margin", case_margin}};
    if (c.learn) {
      learned_gap = (best_learned - floor) / std::abs(floor);
      worst_learned_gap = std::max(worst_learned_gap, *learned_gap);
      row["learned_value"] = best_learned;
      row["learned_relative_gap"] = *learned_gap;
    }
    rows.push_back(row);
  }
  Outcome o;
  o.pass = worst_margin >= -1e-8 && worst_learned_gap <= 0.05;
  o.summary = std::to_string(attacks_checked) + " tabular attacks on " +
              std::to_string(cases.size()) + " SA-MDPs, min value above floor " +
              FormatDouble(worst_margin) + ", tabular learned adversary within " +
              Fixed(100.0 * worst_learned_gap, 2) + "% of the exact optimum";
  o.result = {{"min_margin", worst_margin},
              {"max_learned_relative_gap", worst_learned_gap},
              {"cases", rows}};
  return o;
}

// --- 9. ATLA against vanilla PPO --------------------------------------------

Outcome AtlaMargin(Context& ctx) {
  const auto& vanilla = ctx.VanillaReports()[ctx.VanillaMedian()];
  const alternating::ReplicateRun& atla = ctx.Atla();
  const auto& robust = atla.replicates[atla.median].report;
  const double floor_margin = robust.floor->value - vanilla.floor->value;
  const double range = vanilla.suite.natural.mean;
  const double attack_margin = robust.suite.best_attack_mean - vanilla.suite.best_attack_mean;
  const double natural_ratio = robust.suite.natural.mean / vanilla.suite.natural.mean;
  json replicates = json::array();
  for (const auto& r : atla.replicates) replicates.push_back(alternating::ToJson(r.report));

  Outcome o;
  o.pass = floor_margin > 0.0 && attack_margin >= 0.2 * range && natural_ratio >= 0.7;
  o.summary = "exact-adversary value " + Fixed(robust.floor->value) + " vs " +
              Fixed(vanilla.floor->value) + ", best attack " +
              Fixed(robust.suite.best_attack_mean, 3) + " vs " +
              Fixed(vanilla.suite.best_attack_mean, 3) + " (need +" + Fixed(0.2 * range, 3) +
              "), natural " + Fixed(robust.suite.natural.mean, 3) + " vs " +
              Fixed(vanilla.suite.natural.mean, 3);
  o.result = {{"vanilla_median_replicate", ctx.VanillaMedian()},
              {"atla_median_replicate", atla.median},
              {"floor_margin", floor_margin},
              {"attack_margin", attack_margin},
              {"natural_range", range},
              {"natural_ratio", natural_ratio},
              {"atla_replicates", replicates}};
  return o;
}

// --- 10. SA regularizer sweep -----------------------------------------------

// Per-state maximum of KL(pi(s) || pi(s_hat)) over the eps ball, from several
// restarts of projected sign-gradient ascent.
std::vector<double> MaxKlPerState(const nets::PolicyNet& policy, const Eigen::MatrixXd& states,
                                  double eps, std::uint64_t seed) {
  constexpr int kRestarts = 8;
  const policy_opt::KlAscent ascent{eps, 20, 0.1 * eps, 0.0, 1.0};
  Rng rng = MakeRng(seed, "max-kl");
  const Eigen::MatrixXd clean = policy.body().Forward(states, policy.InitialState(), nullptr);
  std::vector<double> best(states.cols(), 0.0);
  for (int r = 0; r < kRestarts; ++r) {
    const Eigen::MatrixXd perturbed =
        policy_opt::MaximizeKl(policy, states, Eigen::MatrixXd(), ascent, rng);
    const Eigen::MatrixXd out = policy.body().Forward(perturbed, policy.InitialState(), nullptr);
    for (int j = 0; j < states.cols(); ++j) {
      best[j] = std::max(best[j], policy.Kl(clean.col(j), out.col(j)));
    }
  }
  return best;
}

Outcome RegularizerSweep(Context& ctx) {
  constexpr int kSeeds = 3;
  const std::vector<double> kappas = {0.0, 0.1, 1.0};
  const GridWorld& world = ctx.world();
  Eigen::MatrixXd states(world.observation_dim(Encoding::kNormalizedXY), world.n_states());
  for (int s = 0; s < world.n_states(); ++s) {
    states.col(s) = world.Observation(s, Encoding::kNormalizedXY);
  }
  std::vector<double> mean_kl, max_kl, natural;
  json rows = json::array();
  for (double kappa : kappas) {
    policy_opt::TrainConfig config = ctx.ppo();
    policy_opt::SaRegConfig sa;
    sa.kappa = kappa;
    sa.eps = ctx.eps();
    config.sa = sa;
    double kl_sum = 0.0, kl_max = 0.0, natural_sum = 0.0;
    for (int i = 0; i < kSeeds; ++i) {
      const std::uint64_t seed = Context::ReplicateSeed(i);
      auto trainer = policy_opt::PpoTrainer::Create(ctx.env().observation_dim(),
                                                    ctx.env().action_spec(), config, seed, "agent");
      trainer.Train(ctx.env(), config.iterations);
      const std::vector<double> kl = MaxKlPerState(trainer.policy(), states, ctx.eps(), seed);
      const double nat = policy_opt::EvaluatePolicy(ctx.env(), trainer.policy(), 50,
                                                    DeriveSeed(seed, "natural"), false)
                             .mean;
      kl_sum += Mean(kl);
      kl_max = std::max(kl_max, *std::max_element(kl.begin(), kl.end()));
      natural_sum += nat;
      rows.push_back({{"kappa", kappa}, {"seed", seed}, {"mean_max_kl", Mean(kl)},
                      {"natural", nat}});
    }
    mean_kl.push_back(kl_sum / kSeeds);
    max_kl.push_back(kl_max);
    natural.push_back(natural_sum / kSeeds);
  }
  bool kl_monotone = true;
  for (std::size_t k = 1; k < kappas.size(); ++k) kl_monotone &= mean_kl[k] <= mean_kl[k - 1];
  bool natural_flat = true;
  for (std::size_t k = 0; k + 1 < kappas.size(); ++k) natural_flat &= natural.back() <= natural[k];

  std::string listed;
  for (std::size_t k = 0; k < kappas.size(); ++k) {
    listed += (k ? ", " : "") + std::string("kappa ") + FormatDouble(kappas[k]) + ": kl " +
              Fixed(mean_kl[k]) + " natural " + Fixed(natural[k], 3);
  }
  Outcome o;
  o.pass = kl_monotone && natural_flat;
  o.summary = listed;
  o.result = {{"kappas", kappas},
              {"mean_max_kl", mean_kl},
              {"max_kl", max_kl},
              {"natural", natural},
              {"runs", rows}};
  return o;
}

// --- Driver -----------------------------------------------------------------

struct Criterion {
  int id;
  std::string title;
  double limit_seconds;
  std::function<Outcome(Context&)> run;
};

std::vector<Criterion> Criteria() {
  return {{1, "exact-DP agent reaches the target", 1, ExactAgent},
          {2, "exact adversary forces trap cycling", 5, ExactAdversary},
          {3, "optimal adversary equals enumeration", 60, OracleEquivalence},
          {4, "POMDP export is exact", 10, PomdpExport},
          {5, "gradients match finite differences", 60, GradientSuite},
          {6, "vanilla PPO solves the grid", 600, PpoSanity},
          {7, "attack strength ordering", 900, AttackOrdering},
          {8, "no attack beats the exact floor", 600, ExactnessFloor},
          {9, "ATLA robustness margin", 1800, AtlaMargin},
          {10, "SA regularizer trade-off", 1800, RegularizerSweep}};
}

struct RunRecord {
  std::map<int, std::string> files;  // criterion -> file content
  std::map<int, bool> pass;
};

RunRecord RunAll(const std::vector<Criterion>& criteria, const std::string& dir, bool verbose) {
  Context ctx;
  RunRecord record;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.run(ctx);
    } catch (const std::exception& e) {
      outcome.pass = false;
      outcome.summary = std::string("error: ") + e.what();
      outcome.result = {{"error", e.what()}};
    }
    const double seconds = Seconds(start);
    const bool in_time = seconds < c.limit_seconds;
    const bool pass = outcome.pass && in_time;
    json doc = {{"criterion", c.id}, {"title", c.title}, {"pass", outcome.pass},
                {"result", outcome.result}};
    const std::string content = doc.dump(2) + "\n";
    cli_io::WriteFileAtomic(dir + "/criterion_" + std::to_string(c.id) + ".json", content);
    record.files[c.id] = content;
    record.pass[c.id] = pass;
    if (verbose) {
      std::printf("[%s] criterion %2d  %s: %s (%.1f s, limit %.0f s%s)\n", pass ? "PASS" : "FAIL",
                  c.id, c.title.c_str(), outcome.summary.c_str(), seconds, c.limit_seconds,
                  in_time ? "" : ", over the limit");
      std::fflush(stdout);
    }
  }
  return record;
}

int Main(int argc, char** argv) {
  CLI::App app("Acceptance run");
  std::string out = "acceptance-out";
  std::vector<int> only;
  app.add_option("--out", out, "Directory for result files");
  app.add_option("--only", only, "Run only these criteria (1-10)")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  std::vector<Criterion> criteria;
  for (Criterion& c : Criteria()) {
    if (only.empty() || std::find(only.begin(), only.end(), c.id) != only.end()) {
      criteria.push_back(std::move(c));
    }
  }
  std::filesystem::remove_all(out);
  const RunRecord first = RunAll(criteria, out + "/run_1", true);
  const auto start = std::chrono::steady_clock::now();
  const RunRecord second = RunAll(criteria, out + "/run_2", false);
  std::vector<std::string> differing;
  for (const auto& [id, content] : first.files) {
    if (second.files.at(id) != content) differing.push_back(std::to_string(id));
  }
  const bool deterministic = differing.empty();
  std::string detail = std::to_string(first.files.size()) + " result files re-run";
  if (deterministic) {
    detail += ", all bit-identical";
  } else {
    detail += ", differing: criterion";
    for (const auto& id : differing) detail += " " + id;
  }
  std::printf("[%s] criterion 11  re-runs are bit-identical: %s (%.1f s)\n",
              deterministic ? "PASS" : "FAIL", detail.c_str(), Seconds(start));

  int failed = deterministic ? 0 : 1;
  for (const auto& [id, pass] : first.pass) failed += pass ? 0 : 1;
  std::printf("%d of %zu criteria passed\n", static_cast<int>(first.pass.size()) + 1 - failed,
              first.pass.size() + 1);
  return failed == 0 ? 0 : 1;
}

}  // namespace
}  // namespace atla::acceptance

int main(int argc, char** argv) { return atla::acceptance::Main(argc, argv); }
