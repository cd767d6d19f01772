#include <gtest/gtest.h>

#include "atla/common/error.h"
#include "atla/gridworld/gridworld.h"
#include "atla/samdp/pomdp.h"
#include "test_util.h"

namespace atla::samdp {
namespace {

using testing::RandomPolicy;
using testing::RandomSaMdp;

TEST(PomdpTest, IdentityAdversaryObservesEveryState) {
  Rng rng(83);
  SaMdp sa = RandomSaMdp(rng, 5, 2, 3, 0.9);
  const PomdpModel model = BuildPomdp(sa, AdversaryMap::Identity(5));
  ASSERT_EQ(model.n_observations(), 5);
  for (int s = 0; s < 5; ++s) {
    EXPECT_EQ(model.observation_states[s], s);
    EXPECT_EQ(model.observation_names[s], model.state_names[s]);
    for (int o = 0; o < 5; ++o) EXPECT_EQ(model.O(s, o), s == o ? 1.0 : 0.0);
  }
  for (int s = 0; s < 5; ++s)
    for (int a = 0; a < 2; ++a)
      for (int next = 0; next < 5; ++next) {
        EXPECT_EQ(model.T(s, a, next), sa.base.transition(s, a, next));
        EXPECT_EQ(model.R(s, a, next), sa.base.reward(s, a, next));
      }
}

TEST(PomdpTest, ConstantAdversaryHasSingleObservation) {
  TabularMdp base(3, 2, 0.9);
  for (int s = 0; s < 3; ++s)
    for (int a = 0; a < 2; ++a) base.set_transition(s, a, (s + a) % 3, 1.0);
  SaMdp sa{base, {{0}, {1, 0}, {2, 0}}, 0};
  const PomdpModel model = BuildPomdp(sa, AdversaryMap::Deterministic({0, 0, 0}));
  ASSERT_EQ(model.n_observations(), 1);
  for (int s = 0; s < 3; ++s) EXPECT_EQ(model.O(s, 0), 1.0);
}

TEST(PomdpTest, ObservationSetIsUnionOfSupports) {
  Rng rng(89);
  SaMdp sa = RandomSaMdp(rng, 6, 2, 4, 0.9);
  const PomdpModel model = BuildPomdp(sa, AdversaryMap::Uniform(sa));
  std::vector<int> expected;
  for (int s = 0; s < 6; ++s)
    for (int o : sa.perturbation_sets[s]) expected.push_back(o);
  std::sort(expected.begin(), expected.end());
  expected.erase(std::unique(expected.begin(), expected.end()), expected.end());
  EXPECT_EQ(model.observation_states, expected);
  for (int s = 0; s < 6; ++s) {
    double total = 0.0;
    for (int o = 0; o < model.n_observations(); ++o) total += model.O(s, o);
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(PomdpTest, TextRoundTripIsExact) {
  Rng rng(97);
  for (int trial = 0; trial < 20; ++trial) {
    SaMdp sa = RandomSaMdp(rng, 2 + trial % 5, 2 + trial % 3, 3, 0.95);
    TabularPolicy pi = RandomPolicy(rng, sa.n_states(), sa.n_actions());
    const auto nu = SolveOptimalAdversary(sa, pi).adversary;
    AdversaryMap mixed = AdversaryMap::Uniform(sa);
    const PomdpModel model = BuildPomdp(sa, trial % 2 ? nu : mixed);
    const std::string text = WritePomdpText(model);
    const PomdpModel back = ParsePomdpText(text);
    EXPECT_EQ(back, model) << text;
    EXPECT_EQ(WritePomdpText(back), text);
  }
}

TEST(PomdpTest, JsonRoundTripIsExact) {
  const gridworld::GridWorld world(
      gridworld::GridSpecFromAscii("S.T\n..G\n", 0.9, -0.01));
  const PomdpModel model =
      BuildPomdp(world.samdp(), AdversaryMap::Uniform(world.samdp()));
  const auto doc = nlohmann::json::parse(PomdpToJson(model).dump());
  EXPECT_EQ(PomdpFromJson(doc), model);
}

TEST(PomdpTest, ParserAcceptsWildcardsAndCounts) {
  const std::string text =
      "discount: 0.5\n"
      "values: reward\n"
      "states: 2\n"
      "actions: stay go\n"
      "observations: 2\n"
      "start: 1 0\n"
      "T: stay : * : * 0.5\n"
      "T: go : 0 : 1 1\n"
      "T: go : 1 : 0 1\n"
      "O: * : 0 : 0 1\n"
      "O: * : 1 : 1 1\n"
      "R: go : 0 : 1 : * 2.5\n";
  const PomdpModel m = ParsePomdpText(text);
  EXPECT_EQ(m.gamma, 0.5);
  EXPECT_EQ(m.n_states(), 2);
  EXPECT_EQ(m.action_names[1], "go");
  EXPECT_EQ(m.T(1, 0, 0), 0.5);
  EXPECT_EQ(m.T(0, 1, 1), 1.0);
  EXPECT_EQ(m.R(0, 1, 1), 2.5);
  EXPECT_EQ(m.O(1, 1), 1.0);
}

TEST(PomdpTest, ParserReportsLineNumbers) {
  const std::string text =
      "discount: 0.5\nvalues: reward\nstates: 1\nactions: 1\n"
      "observations: 1\nstart: 1\nT: 0 : 0 : 7 1\n";
  try {
    ParsePomdpText(text);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("line 7"), std::string::npos) << e.what();
  }
}

}  // namespace
}  // namespace atla::samdp
