#include <gtest/gtest.h>

#include <set>

#include "atla/common/error.h"
#include "atla/gridworld/gridworld.h"
#include "atla/mdp/solvers.h"
#include "test_util.h"

namespace atla::gridworld {
namespace {

using testing::DataPath;

std::string ErrorText(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

TEST(GridSpecTest, AsciiParsing) {
  const GridSpec spec = GridSpecFromAscii("S.#\n.TG\n", 0.8, -0.1);
  EXPECT_EQ(spec.width, 3);
  EXPECT_EQ(spec.height, 2);
  EXPECT_EQ(spec.start, (Cell{0, 0}));
  EXPECT_EQ(spec.target, (Cell{2, 1}));
  EXPECT_EQ(spec.traps, std::vector<Cell>({{1, 1}}));
  EXPECT_EQ(spec.walls, std::vector<Cell>({{2, 0}}));
  EXPECT_EQ(spec.gamma, 0.8);
  EXPECT_EQ(spec.step_reward, -0.1);
  EXPECT_EQ(ToAscii(spec), "S.#\n.TG\n");
}

TEST(GridSpecTest, JsonRoundTrip) {
  const GridSpec spec = LoadGridSpec(DataPath("grids/canonical.json"));
  EXPECT_EQ(GridSpecFromJson(nlohmann::json::parse(ToJson(spec).dump())), spec);
}

TEST(GridSpecTest, ValidationNamesOffendingCell) {
  GridSpec spec = GridSpecFromAscii("S.G\n");
  spec.traps.push_back({5, 0});
  EXPECT_NE(ErrorText([&] { spec.Validate(); }).find("(5,0)"), std::string::npos);
  spec.traps = {{2, 0}};
  EXPECT_NE(ErrorText([&] { spec.Validate(); }).find("(2,0)"), std::string::npos);
  EXPECT_NE(ErrorText([] { GridSpecFromAscii("S.\n..G\n"); }), "");
  EXPECT_NE(ErrorText([] { GridSpecFromAscii("S.x\n"); }), "");
  EXPECT_NE(ErrorText([] { GridSpecFromAscii("..G\n"); }), "");
  nlohmann::json doc = ToJson(GridSpecFromAscii("SG"));
  doc["colour"] = "red";
  EXPECT_NE(ErrorText([&] { GridSpecFromJson(doc); }).find("colour"), std::string::npos);
}

TEST(GridWorldTest, TwoCellValueIsOne) {
  const GridWorld world(LoadGridSpec(DataPath("grids/two_cell.txt")));
  const auto result = mdp::PolicyIteration(world.samdp().base);
  EXPECT_NEAR(result.values[world.start_state()], 1.0, 1e-12);
  EXPECT_EQ(result.policy.ArgMax(world.start_state()), kRight);
}

TEST(GridWorldTest, MovesAndWalls) {
  const GridWorld world(GridSpecFromAscii("S#\n.G\n"));
  EXPECT_EQ(world.n_states(), 3);
  const int s = world.start_state();
  EXPECT_EQ(world.Next(s, kRight), s);  // wall
  EXPECT_EQ(world.Next(s, kUp), s);     // border
  EXPECT_EQ(world.CellOf(world.Next(s, kDown)), (Cell{0, 1}));
  EXPECT_EQ(world.samdp().perturbation_sets[s].size(), 2u);
}

TEST(GridWorldTest, RewardAccounting) {
  const GridWorld world(GridSpecFromAscii("ST.G\n", 0.9, -0.05));
  const int trap = world.StateOf({1, 0});
  const int target = world.StateOf({3, 0});
  EXPECT_EQ(world.Reward(world.start_state(), trap), -1.05);
  EXPECT_EQ(world.Reward(trap, trap), -1.05);  // staying in a trap pays again
  EXPECT_EQ(world.Reward(trap, world.StateOf({2, 0})), -0.05);
  EXPECT_EQ(world.Reward(world.StateOf({2, 0}), target), 0.95);
  EXPECT_TRUE(world.samdp().base.terminal(target));
}

TEST(GridWorldTest, EncodingsAreInjective) {
  const GridWorld world(LoadGridSpec(DataPath("grids/canonical.json")));
  for (Encoding e : {Encoding::kNormalizedXY, Encoding::kOneHot}) {
    std::set<std::vector<double>> seen;
    for (int s = 0; s < world.n_states(); ++s) {
      const Eigen::VectorXd v = world.Observation(s, e);
      ASSERT_EQ(v.size(), world.observation_dim(e));
      EXPECT_TRUE(v.minCoeff() >= 0.0 && v.maxCoeff() <= 1.0);
      seen.insert(std::vector<double>(v.data(), v.data() + v.size()));
    }
    EXPECT_EQ(static_cast<int>(seen.size()), world.n_states());
  }
  EXPECT_DOUBLE_EQ(world.pitch(), 1.0 / 6.0);
}

TEST(GridWorldTest, LinfSetsMatchBallMembership) {
  const GridWorld world(LoadGridSpec(DataPath("grids/canonical.json")));
  for (double eps : {0.0, 0.5 * world.pitch(), world.pitch(), 2 * world.pitch()}) {
    const samdp::SaMdp sa = world.LinfSaMdp(eps);
    EXPECT_NO_THROW(sa.Validate());
    for (int s = 0; s < world.n_states(); ++s) {
      const Eigen::VectorXd xs = world.Observation(s, Encoding::kNormalizedXY);
      for (int o = 0; o < world.n_states(); ++o) {
        const double d = (world.Observation(o, Encoding::kNormalizedXY) - xs)
                             .cwiseAbs().maxCoeff();
        EXPECT_EQ(sa.InSet(s, o), d <= eps + 1e-9) << s << " " << o << " " << eps;
      }
    }
  }
}

TEST(GridWorldTest, CompileIsDeterministic) {
  const GridSpec spec = LoadGridSpec(DataPath("grids/canonical.json"));
  const samdp::SaMdp a = Compile(spec);
  const samdp::SaMdp b = Compile(spec);
  EXPECT_EQ(a.base, b.base);
  EXPECT_EQ(a.perturbation_sets, b.perturbation_sets);
  EXPECT_EQ(mdp::ToJson(a.base).dump(), mdp::ToJson(b.base).dump());
}

TEST(CanonicalGridTest, OptimalPolicyReachesTarget) {
  const GridWorld world(LoadGridSpec(DataPath("grids/canonical.json")));
  const auto& sa = world.samdp();
  const auto pi = mdp::PolicyIteration(sa.base);
  const auto trace = Rollout(sa, GreedyPolicy(pi.policy), IdentityAdversary(),
                             world.spec().horizon, 1);
  EXPECT_TRUE(trace.terminal);
  EXPECT_EQ(trace.Return(), 1.0);
  EXPECT_EQ(trace.CountVisits([&](int s) { return world.IsTrap(s); }), 0);
}

TEST(CanonicalGridTest, OptimalAdversaryDrivesAgentIntoTraps) {
  const GridWorld world(LoadGridSpec(DataPath("grids/canonical.json")));
  const auto& sa = world.samdp();
  const auto pi = mdp::PolicyIteration(sa.base);
  const auto adv = samdp::SolveOptimalAdversary(sa, pi.policy);
  EXPECT_GT(adv.adversary_values[sa.start_state], 0.0);
  const auto trace = Rollout(sa, GreedyPolicy(pi.policy),
                             SampleAdversary(adv.adversary), 200, 1);
  EXPECT_LE(trace.Return(), -10.0);
  EXPECT_FALSE(trace.terminal);
  EXPECT_EQ(trace.steps.size(), 200u);
  // Sign flip: the adversary's rewards are the negated agent rewards.
  const auto adv_rewards = trace.AdversaryRewards();
  for (std::size_t t = 0; t < trace.steps.size(); ++t) {
    EXPECT_EQ(adv_rewards[t], -trace.steps[t].reward);
  }
}

TEST(RolloutTest, SingleStepReturnsStepReward) {
  const GridWorld world(GridSpecFromAscii("S..G\n", 0.9, -0.25));
  const auto pi = mdp::PolicyIteration(world.samdp().base);
  const auto trace = Rollout(world.samdp(), GreedyPolicy(pi.policy),
                             IdentityAdversary(), 1, 3);
  ASSERT_EQ(trace.steps.size(), 1u);
  EXPECT_EQ(trace.Return(), -0.25);
  EXPECT_EQ(trace.truncation_limit, 1);
}

TEST(RolloutTest, SameSeedSameTrace) {
  const GridWorld world(LoadGridSpec(DataPath("grids/canonical.json")));
  const auto& sa = world.samdp();
  const auto pi = mdp::TabularPolicy::Uniform(sa.n_states(), sa.n_actions());
  const auto nu = samdp::AdversaryMap::Uniform(sa);
  const auto a = Rollout(sa, SamplePolicy(pi), SampleAdversary(nu), 50, 9);
  const auto b = Rollout(sa, SamplePolicy(pi), SampleAdversary(nu), 50, 9);
  ASSERT_EQ(a.steps.size(), b.steps.size());
  for (std::size_t t = 0; t < a.steps.size(); ++t) {
    EXPECT_EQ(a.steps[t].observed_state, b.steps[t].observed_state);
    EXPECT_EQ(a.steps[t].action, b.steps[t].action);
  }
}

TEST(GridEnvTest, StepsAndTruncates) {
  auto world = std::make_shared<const GridWorld>(GridSpecFromAscii("S.G\n"));
  GridEnv env(world, Encoding::kOneHot, 3);
  Rng rng(1);
  env.Reset(rng);
  EXPECT_EQ(env.state(), world->start_state());
  EXPECT_EQ(env.Observe(), world->Observation(world->start_state(), Encoding::kOneHot));
  StepResult r = env.Step({kLeft, {}}, rng);
  EXPECT_FALSE(r.done());
  r = env.Step({kLeft, {}}, rng);
  r = env.Step({kLeft, {}}, rng);
  EXPECT_TRUE(r.truncated);
  EXPECT_FALSE(r.terminal);

  env.Reset(rng);
  env.Step({kRight, {}}, rng);
  r = env.Step({kRight, {}}, rng);
  EXPECT_TRUE(r.terminal);
  EXPECT_EQ(r.reward, 1.0);
  EXPECT_THROW(env.Step({7, {}}, rng), ValidationError);
}

TEST(RenderTest, CsvAndArrows) {
  const GridWorld world(GridSpecFromAscii("S.G\n"));
  const auto pi = mdp::PolicyIteration(world.samdp().base);
  const auto arrows = AgentArrows(world, pi.policy);
  EXPECT_EQ(arrows[world.start_state()], ">");
  const std::string csv = RenderCsv(world, pi.values, arrows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "x,y,state,kind,value,arrow");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  const auto adv = AdversaryArrows(world, samdp::AdversaryMap::Identity(3));
  EXPECT_EQ(adv[0], "o");
}

}  // namespace
}  // namespace atla::gridworld
