#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "atla/common/error.h"
#include "atla/mdp/solvers.h"
#include "test_util.h"

namespace atla::mdp {
namespace {

using testing::LinearSolveValues;
using testing::RandomMdp;
using testing::RandomPolicy;

double MaxDiff(const ValueVector& a, const ValueVector& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

TEST(PolicyEvaluationTest, SelfLoopIsGeometricSeries) {
  TabularMdp m(1, 1, 0.9);
  m.set_transition(0, 0, 0, 1.0);
  m.set_reward(0, 0, 0, 1.0);
  const auto v = PolicyEvaluation(m, TabularPolicy::Uniform(1, 1), 1e-10);
  EXPECT_NEAR(v[0], 10.0, 1e-9);
}

TEST(PolicyEvaluationTest, ZeroRewardsGiveExactZero) {
  Rng rng(3);
  TabularMdp m = RandomMdp(rng, 5, 2, 0.9);
  TabularMdp zero(5, 2, 0.9);
  for (int s = 0; s < 5; ++s)
    for (int a = 0; a < 2; ++a)
      for (int n = 0; n < 5; ++n) zero.set_transition(s, a, n, m.transition(s, a, n));
  const auto v = PolicyEvaluation(zero, TabularPolicy::Uniform(5, 2));
  for (double x : v) EXPECT_EQ(x, 0.0);
}

TEST(PolicyEvaluationTest, ChainMatchesLinearSolve) {
  // 0 -> 1 -> 2 chain with a stay action; state 2 absorbing.
  TabularMdp m(3, 2, 0.95);
  for (int s = 0; s < 2; ++s) {
    m.set_transition(s, 0, s + 1, 1.0);
    m.set_reward(s, 0, s + 1, s == 1 ? 1.0 : 0.2);
    m.set_transition(s, 1, s, 1.0);
    m.set_reward(s, 1, s, -0.1);
  }
  m.MakeTerminal(2);
  Rng rng(11);
  const TabularPolicy p = RandomPolicy(rng, 3, 2);
  const auto v = PolicyEvaluation(m, p);
  const Eigen::VectorXd oracle = LinearSolveValues(m, p);
  for (int s = 0; s < 3; ++s) EXPECT_NEAR(v[s], oracle(s), 1e-8);
}

TEST(PolicyEvaluationTest, ResidualBelowTolerance) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    TabularMdp m = RandomMdp(rng, 6, 3, 0.95);
    TabularPolicy p = RandomPolicy(rng, 6, 3);
    const auto v = PolicyEvaluation(m, p, 1e-9);
    EXPECT_LE(MaxDiff(BellmanExpectation(m, p, v), v), 1e-9);
  }
}

TEST(PolicyEvaluationTest, RejectsNonStochasticPolicy) {
  TabularMdp m(2, 2, 0.9);
  for (int s = 0; s < 2; ++s)
    for (int a = 0; a < 2; ++a) m.set_transition(s, a, s, 1.0);
  TabularPolicy p(2, 2);
  p.set_prob(0, 0, 0.7);
  p.set_prob(1, 0, 1.0);
  EXPECT_THROW(PolicyEvaluation(m, p), ValidationError);
}

TEST(PolicyEvaluationTest, RejectsNaN) {
  TabularMdp m(1, 1, 0.9);
  m.set_transition(0, 0, 0, 1.0);
  m.set_reward(0, 0, 0, std::numeric_limits<double>::quiet_NaN());
  EXPECT_THROW(PolicyEvaluation(m, TabularPolicy::Uniform(1, 1)), ValidationError);
}

TEST(TabularMdpTest, ValidateCatchesBadRows) {
  TabularMdp m(2, 1, 0.9);
  m.set_transition(0, 0, 0, 0.5);
  m.set_transition(1, 0, 1, 1.0);
  EXPECT_THROW(m.Validate(), ValidationError);
  m.set_transition(0, 0, 1, 0.5);
  EXPECT_NO_THROW(m.Validate());
  m.set_gamma(1.0);
  EXPECT_THROW(m.Validate(), ValidationError);
}

TEST(TabularMdpTest, JsonRoundTripAndValidationOnLoad) {
  Rng rng(21);
  TabularMdp m = RandomMdp(rng, 4, 2, 0.8, 0.3);
  const TabularMdp back = MdpFromJson(nlohmann::json::parse(ToJson(m).dump()));
  EXPECT_EQ(back, m);

  auto doc = ToJson(m);
  doc["transition"][0][0][0] = 2.0;
  EXPECT_THROW(MdpFromJson(doc), ValidationError);
  auto missing = ToJson(m);
  missing.erase("gamma");
  EXPECT_THROW(MdpFromJson(missing), ValidationError);
}

TEST(PolicyIterationTest, DominantActionChosenEverywhere) {
  Rng rng(8);
  TabularMdp m = RandomMdp(rng, 5, 3, 0.9);
  // Action 2 earns +5 on top of anything the others get, same dynamics.
  for (int s = 0; s < 5; ++s)
    for (int n = 0; n < 5; ++n) {
      m.set_transition(s, 2, n, m.transition(s, 0, n));
      m.set_reward(s, 2, n, 5.0);
      m.set_reward(s, 0, n, std::min(m.reward(s, 0, n), 1.0));
    }
  const auto result = PolicyIteration(m);
  for (int s = 0; s < 5; ++s) EXPECT_EQ(result.policy.ArgMax(s), 2);
}

TEST(PolicyIterationTest, AgreesWithValueIteration) {
  Rng rng(13);
  TabularMdp m = RandomMdp(rng, 6, 3, 0.9);
  const auto pi = PolicyIteration(m);
  const auto vi = ValueIteration(m);
  EXPECT_LE(MaxDiff(pi.values, vi.values), 1e-8);
}

TEST(PolicyIterationTest, SatisfiesBellmanOptimality) {
  Rng rng(17);
  TabularMdp m = RandomMdp(rng, 7, 3, 0.95, 0.2);
  const auto pi = PolicyIteration(m);
  for (int s = 0; s < 7; ++s) {
    double best = -1e300;
    for (int a = 0; a < 3; ++a) best = std::max(best, QValue(m, pi.values, s, a));
    EXPECT_NEAR(best, pi.values[s], 1e-9);
  }
}

TEST(PolicyIterationTest, MonotoneImprovement) {
  Rng rng(19);
  for (int trial = 0; trial < 30; ++trial) {
    TabularMdp m = RandomMdp(rng, 8, 4, 0.95, 0.1);
    const auto pi = PolicyIteration(m);
    for (std::size_t k = 1; k < pi.value_history.size(); ++k) {
      for (int s = 0; s < 8; ++s) {
        EXPECT_GE(pi.value_history[k][s], pi.value_history[k - 1][s] - 1e-10);
      }
    }
  }
}

TEST(ValueIterationTest, ZeroRewardGivesZeroValue) {
  TabularMdp m(3, 2, 0.9);
  for (int s = 0; s < 3; ++s)
    for (int a = 0; a < 2; ++a) m.set_transition(s, a, (s + a) % 3, 1.0);
  const auto vi = ValueIteration(m);
  for (double v : vi.values) EXPECT_EQ(v, 0.0);
}

TEST(ValueIterationTest, SingleLegalActionEqualsForcedPolicy) {
  Rng rng(23);
  TabularMdp m = RandomMdp(rng, 6, 3, 0.9);
  ActionMask mask(6, 3, false);
  std::vector<int> forced(6);
  for (int s = 0; s < 6; ++s) {
    forced[s] = (s * 7) % 3;
    mask.set(s, forced[s], true);
  }
  const auto vi = ValueIteration(m, 1e-10, mask);
  const auto pe = PolicyEvaluation(m, TabularPolicy::Deterministic(forced, 3));
  EXPECT_LE(MaxDiff(vi.values, pe), 1e-9);
  for (int s = 0; s < 6; ++s) EXPECT_EQ(vi.policy.ArgMax(s), forced[s]);
}

TEST(ValueIterationTest, EmptyAdmissibleSetIsAnError) {
  TabularMdp m(2, 2, 0.9);
  for (int s = 0; s < 2; ++s)
    for (int a = 0; a < 2; ++a) m.set_transition(s, a, s, 1.0);
  ActionMask mask(2, 2, true);
  mask.set(1, 0, false);
  mask.set(1, 1, false);
  try {
    ValueIteration(m, 1e-10, mask);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("empty admissible action set"),
              std::string::npos);
  }
}

TEST(ValueIterationTest, Contraction) {
  Rng rng(29);
  for (int trial = 0; trial < 30; ++trial) {
    const double gamma = Uniform(rng, 0.5, 0.97);
    TabularMdp m = RandomMdp(rng, 8, 4, gamma, 0.1);
    const auto vi = ValueIteration(m);
    for (std::size_t k = 1; k < vi.residuals.size(); ++k) {
      EXPECT_LE(vi.residuals[k], gamma * vi.residuals[k - 1] + 1e-12);
    }
  }
}

TEST(SolverAgreementTest, HundredRandomMdps) {
  Rng rng(31);
  const double tol = kDefaultTol;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 8);
    const int a = 1 + static_cast<int>(rng() % 4);
    TabularMdp m = RandomMdp(rng, n, a, Uniform(rng, 0.5, 0.95), 0.15);
    const auto pi = PolicyIteration(m, tol);
    const auto vi = ValueIteration(m, tol);
    EXPECT_LE(MaxDiff(pi.values, vi.values), 10 * tol) << "trial " << trial;
  }
}

TEST(SolverDeterminismTest, BitIdenticalReruns) {
  Rng rng(37);
  TabularMdp m = RandomMdp(rng, 8, 4, 0.9);
  const auto a = ValueIteration(m);
  const auto b = ValueIteration(m);
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(a.policy, b.policy);
  EXPECT_EQ(PolicyIteration(m).values, PolicyIteration(m).values);
}

TEST(ExpectedTruncatedReturnTest, MatchesHandComputation) {
  // Two states swapping each step, reward 1 for leaving state 0 only.
  TabularMdp m(2, 1, 0.9);
  m.set_transition(0, 0, 1, 1.0);
  m.set_reward(0, 0, 1, 1.0);
  m.set_transition(1, 0, 0, 1.0);
  const auto p = TabularPolicy::Uniform(2, 1);
  EXPECT_EQ(ExpectedTruncatedReturn(m, p, 0, 5), 3.0);
  EXPECT_EQ(ExpectedTruncatedReturn(m, p, 1, 5), 2.0);
}

}  // namespace
}  // namespace atla::mdp
