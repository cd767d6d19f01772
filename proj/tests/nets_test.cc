#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "atla/common/error.h"
#include "atla/nets/feedforward.h"
#include "atla/nets/heads.h"
#include "atla/nets/lstm.h"
#include "atla/nets/optimizer.h"
#include "atla/nets/policy.h"
#include "grad_check.h"

namespace atla::nets {
namespace {

using testing::CheckGradient;
using testing::CheckModelGradients;
using testing::CheckPolicyGradients;
using testing::RandomMatrix;
using testing::RandomizeParams;

constexpr double kGradTol = 1e-4;

TEST(FeedForwardTest, ZeroNetGivesZeroOutputs) {
  FeedForwardNet net({3, 5, 2}, Activation::kTanh);
  Rng rng(1);
  const Eigen::MatrixXd out = net.Forward(RandomMatrix(3, 4, rng), {}, nullptr);
  EXPECT_TRUE(out.isZero(0.0));
}

TEST(FeedForwardTest, IdentityLayerPassesInputThrough) {
  FeedForwardNet net({3, 3}, Activation::kIdentity);
  net.params().Block(net.weight_segment(0)) = Eigen::MatrixXd::Identity(3, 3);
  Rng rng(2);
  const Eigen::MatrixXd x = RandomMatrix(3, 6, rng);
  EXPECT_EQ(net.Forward(x, {}, nullptr), x);
}

TEST(FeedForwardTest, ForwardIsDeterministic) {
  Rng rng(3);
  FeedForwardNet net({4, 16, 16, 3}, Activation::kTanh, 1.0, rng);
  const Eigen::MatrixXd x = RandomMatrix(4, 8, rng);
  EXPECT_EQ(net.Forward(x, {}, nullptr), net.Forward(x, {}, nullptr));
}

TEST(FeedForwardTest, RejectsShapeMismatch) {
  FeedForwardNet net({3, 2}, Activation::kTanh);
  EXPECT_THROW(net.Forward(Eigen::MatrixXd::Zero(4, 1), {}, nullptr), ValidationError);
  Tape tape;
  net.Forward(Eigen::MatrixXd::Zero(3, 2), {}, &tape);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(net.params().size());
  EXPECT_THROW(net.Backward(tape, Eigen::MatrixXd::Zero(2, 3), &grad), ValidationError);
}

TEST(FeedForwardTest, ConstantLossHasZeroGradient) {
  Rng rng(4);
  FeedForwardNet net({3, 8, 2}, Activation::kTanh, 1.0, rng);
  Tape tape;
  net.Forward(RandomMatrix(3, 5, rng), {}, &tape);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(net.params().size());
  const Eigen::MatrixXd dx = net.Backward(tape, Eigen::MatrixXd::Zero(2, 5), &grad);
  EXPECT_TRUE(grad.isZero(0.0));
  EXPECT_TRUE(dx.isZero(0.0));
}

TEST(FeedForwardTest, GradientsMatchFiniteDifferences) {
  Rng rng(5);
  FeedForwardNet net({4, 16, 16, 3}, Activation::kTanh, 1.0, rng);
  RandomizeParams(net.params(), rng);
  const auto r = CheckModelGradients(net, RandomMatrix(4, 6, rng),
                                     RandomMatrix(3, 6, rng), true, 100, rng);
  EXPECT_EQ(r.params.checked, 100);
  EXPECT_LE(r.params.max_relative_error, kGradTol);
  EXPECT_LE(r.inputs.max_relative_error, kGradTol);
}

TEST(LstmTest, GradientsMatchFiniteDifferencesOverTwentySteps) {
  for (int embed : {0, 6}) {
    Rng rng(6 + embed);
    LstmNet net(3, embed, 8, 2, 1.0, rng);
    RandomizeParams(net.params(), rng);
    const auto r = CheckModelGradients(net, RandomMatrix(3, 20, rng),
                                       RandomMatrix(2, 20, rng), true, 100, rng);
    EXPECT_LE(r.params.max_relative_error, kGradTol) << "embed " << embed;
    EXPECT_EQ(r.inputs.checked, 60);
    EXPECT_LE(r.inputs.max_relative_error, kGradTol) << "embed " << embed;
  }
}

TEST(LstmTest, IndependentStepGradients) {
  Rng rng(9);
  LstmNet net(3, 4, 6, 2, 1.0, rng);
  RandomizeParams(net.params(), rng);
  const auto r = CheckModelGradients(net, RandomMatrix(3, 7, rng),
                                     RandomMatrix(2, 7, rng), false, 100, rng);
  EXPECT_LE(r.params.max_relative_error, kGradTol);
  EXPECT_LE(r.inputs.max_relative_error, kGradTol);
}

TEST(LstmTest, StepMatchesSequenceForward) {
  Rng rng(10);
  LstmNet net(2, 0, 5, 3, 1.0, rng);
  RandomizeParams(net.params(), rng);
  const Eigen::MatrixXd x = RandomMatrix(2, 9, rng);
  Tape tape;
  const Eigen::MatrixXd seq = net.Forward(x, net.InitialState(), &tape);
  Eigen::VectorXd state = net.InitialState();
  for (int t = 0; t < 9; ++t) {
    EXPECT_TRUE(net.Step(x.col(t), &state).isApprox(seq.col(t), 1e-14));
  }
  EXPECT_TRUE(state.isApprox(net.FinalState(tape), 1e-14));
  // Independent steps from the recorded states reproduce the sequence.
  const Eigen::MatrixXd steps = net.ForwardSteps(x, net.StatesBefore(tape), nullptr);
  EXPECT_TRUE(steps.isApprox(seq, 1e-14));
}

TEST(LstmTest, BackpropagationIsCausal) {
  Rng rng(11);
  LstmNet net(3, 4, 6, 2, 1.0, rng);
  RandomizeParams(net.params(), rng);
  Tape tape;
  net.Forward(RandomMatrix(3, 12, rng), net.InitialState(), &tape);
  Eigen::MatrixXd d_out = RandomMatrix(2, 12, rng);
  const int t = 5;
  d_out.rightCols(12 - t - 1).setZero();
  const Eigen::MatrixXd dx = net.Backward(tape, d_out, nullptr);
  EXPECT_TRUE(dx.rightCols(12 - t - 1).isZero(0.0));
  EXPECT_FALSE(dx.col(t).isZero(0.0));
}

TEST(LstmTest, InitialStateIsZero) {
  LstmNet net(2, 0, 4, 1);
  EXPECT_TRUE(net.InitialState().isZero(0.0));
  EXPECT_EQ(net.InitialState().size(), 8);
}

TEST(HeadsTest, UniformCategorical) {
  const Eigen::VectorXd logits = Eigen::VectorXd::Constant(4, 0.3);
  EXPECT_NEAR(categorical::LogProb(logits, 2), std::log(0.25), 1e-15);
  EXPECT_NEAR(categorical::Entropy(logits), std::log(4.0), 1e-15);
  EXPECT_THROW(categorical::LogProb(logits, 4), ValidationError);
}

TEST(HeadsTest, GaussianAtMean) {
  const Eigen::VectorXd mean = Eigen::VectorXd::LinSpaced(3, -1.0, 1.0);
  const Eigen::VectorXd log_std = Eigen::VectorXd::Zero(3);
  EXPECT_NEAR(gaussian::LogProb(mean, log_std, mean), -1.5 * std::log(2 * std::numbers::pi),
              1e-14);
}

TEST(HeadsTest, CategoricalProbabilitiesNormalized) {
  Rng rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::VectorXd logits = RandomMatrix(7, 1, rng, 5.0);
    EXPECT_NEAR(categorical::Softmax(logits).sum(), 1.0, 1e-10);
    EXPECT_NEAR(categorical::LogSoftmax(logits).array().exp().sum(), 1.0, 1e-10);
  }
}

TEST(HeadsTest, KlGradientsMatchFiniteDifferences) {
  Rng rng(13);
  Eigen::VectorXd p = RandomMatrix(5, 1, rng), q = RandomMatrix(5, 1, rng);
  auto loss = [&] { return categorical::Kl(p, q); };
  EXPECT_LE(CheckGradient(p, categorical::KlGradP(p, q), loss, 5, rng).max_relative_error,
            kGradTol);
  EXPECT_LE(CheckGradient(q, categorical::KlGradQ(p, q), loss, 5, rng).max_relative_error,
            kGradTol);
  EXPECT_GE(categorical::Kl(p, q), 0.0);
  EXPECT_EQ(categorical::Kl(p, p), 0.0);

  Eigen::VectorXd pm = RandomMatrix(3, 1, rng), pl = RandomMatrix(3, 1, rng, 0.3);
  Eigen::VectorXd qm = RandomMatrix(3, 1, rng), ql = RandomMatrix(3, 1, rng, 0.3);
  Eigen::VectorXd g[4];
  gaussian::KlGrad(pm, pl, qm, ql, &g[0], &g[1], &g[2], &g[3]);
  auto gl = [&] { return gaussian::Kl(pm, pl, qm, ql); };
  Eigen::VectorXd* args[4] = {&pm, &pl, &qm, &ql};
  for (int k = 0; k < 4; ++k) {
    EXPECT_LE(CheckGradient(*args[k], g[k], gl, 3, rng).max_relative_error, kGradTol);
  }
}

TEST(HeadsTest, EntropyGradientMatchesFiniteDifferences) {
  Rng rng(14);
  Eigen::VectorXd z = RandomMatrix(6, 1, rng);
  auto loss = [&] { return categorical::Entropy(z); };
  EXPECT_LE(CheckGradient(z, categorical::EntropyGrad(z), loss, 6, rng).max_relative_error,
            kGradTol);
}

TEST(PolicyNetTest, CategoricalFeedForwardLogProbGradient) {
  Rng rng(15);
  PolicyNet policy(std::make_unique<FeedForwardNet>(std::vector<int>{3, 12, 12, 4},
                                                    Activation::kTanh, 1.0, rng),
                   HeadKind::kCategorical);
  RandomizeParams(policy.params(), rng);
  EXPECT_LE(CheckPolicyGradients(policy, 8, 0.1, 100, rng).max_relative_error, kGradTol);
}

TEST(PolicyNetTest, GaussianFeedForwardLogProbGradient) {
  Rng rng(16);
  PolicyNet policy(std::make_unique<FeedForwardNet>(std::vector<int>{3, 12, 2},
                                                    Activation::kTanh, 1.0, rng),
                   HeadKind::kGaussian, -0.5);
  RandomizeParams(policy.params(), rng, 0.4);
  const auto r = CheckPolicyGradients(policy, 8, 0.1, 100, rng);
  EXPECT_LE(r.max_relative_error, kGradTol);
}

TEST(PolicyNetTest, RecurrentHeadsGradient) {
  for (HeadKind head : {HeadKind::kCategorical, HeadKind::kGaussian}) {
    Rng rng(17);
    PolicyNet policy(std::make_unique<LstmNet>(3, 5, 6, 2, 1.0, rng), head);
    RandomizeParams(policy.params(), rng, 0.4);
    EXPECT_LE(CheckPolicyGradients(policy, 20, 0.05, 100, rng).max_relative_error,
              kGradTol)
        << HeadName(head);
  }
}

TEST(PolicyNetTest, LogStdIsClampedWithoutGradient) {
  Rng rng(18);
  PolicyNet policy(std::make_unique<FeedForwardNet>(std::vector<int>{2, 2},
                                                    Activation::kTanh),
                   HeadKind::kGaussian, 5.0);
  EXPECT_EQ(policy.LogStd(), Eigen::VectorXd::Constant(2, gaussian::kMaxLogStd));
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(policy.params().size());
  Eigen::VectorXd d_out = Eigen::VectorXd::Zero(2);
  policy.AddEntropyGrad(Eigen::VectorXd::Zero(2), 1.0, d_out, &grad);
  EXPECT_TRUE(grad.isZero(0.0));
}

TEST(CheckpointTest, PolicyRoundTripIsExact) {
  Rng rng(19);
  PolicyNet mlp(std::make_unique<FeedForwardNet>(std::vector<int>{2, 8, 2},
                                                 Activation::kTanh, 0.01, rng),
                HeadKind::kGaussian, -0.3);
  PolicyNet lstm(std::make_unique<LstmNet>(2, 0, 4, 4, 0.01, rng), HeadKind::kCategorical);
  for (const PolicyNet* p : {&mlp, &lstm}) {
    const PolicyNet back = PolicyFromJson(nlohmann::json::parse(PolicyToJson(*p).dump()));
    EXPECT_EQ(back.params(), p->params());
    EXPECT_EQ(back.head(), p->head());
    EXPECT_EQ(back.body().Architecture(), p->body().Architecture());
  }
  FeedForwardNet value({2, 8, 1}, Activation::kTanh, 1.0, rng);
  EXPECT_EQ(ValueFromJson(ValueToJson(value))->params(), value.params());
}

TEST(CheckpointTest, RejectsWrongVersion) {
  Rng rng(20);
  PolicyNet p(std::make_unique<FeedForwardNet>(std::vector<int>{2, 2}, Activation::kTanh),
              HeadKind::kCategorical);
  auto doc = PolicyToJson(p);
  doc["version"] = 99;
  EXPECT_THROW(PolicyFromJson(doc), ValidationError);
  EXPECT_THROW(ValueFromJson(PolicyToJson(p)), ValidationError);
}

TEST(ParamVectorTest, SegmentsPartitionTheVector) {
  ParamVector pv;
  pv.Add("a", 2, 3);
  pv.Add("b", 4, 1);
  EXPECT_EQ(pv.size(), 10);
  EXPECT_EQ(pv.segment(1).offset, 6);
  EXPECT_NO_THROW(pv.Validate());
  EXPECT_THROW(pv.Add("a", 1, 1), ValidationError);
  pv.values()(3) = std::nan("");
  EXPECT_THROW(pv.Validate(), NumericalError);
  auto doc = ToJson(ParamVector());
  doc["values"] = {1.0};
  EXPECT_THROW(ParamVectorFromJson(doc), ValidationError);
}

TEST(OrthogonalInitTest, ColumnsAreOrthonormal) {
  Rng rng(21);
  const Eigen::MatrixXd w = OrthogonalInit(8, 3, 1.0, rng);
  EXPECT_TRUE((w.transpose() * w).isApprox(Eigen::MatrixXd::Identity(3, 3), 1e-12));
  const Eigen::MatrixXd wide = OrthogonalInit(3, 8, 2.0, rng);
  EXPECT_TRUE((wide * wide.transpose()).isApprox(4.0 * Eigen::MatrixXd::Identity(3, 3), 1e-12));
}

TEST(AdamTest, ZeroLearningRateKeepsParametersBitIdentical) {
  Rng rng(22);
  Eigen::VectorXd x = RandomMatrix(5, 1, rng);
  const Eigen::VectorXd before = x;
  Adam adam(5, 0.0);
  adam.Step(x, RandomMatrix(5, 1, rng));
  EXPECT_EQ(x, before);
}

TEST(AdamTest, MinimizesQuadratic) {
  Eigen::VectorXd x = Eigen::VectorXd::Constant(3, 4.0);
  Adam adam(3, 0.1);
  for (int i = 0; i < 2000; ++i) adam.Step(x, 2.0 * x);
  EXPECT_LT(x.norm(), 1e-3);
  const Adam back = Adam::FromJson(adam.ToJson());
  EXPECT_EQ(back.steps(), adam.steps());
}

TEST(ClipGradNormTest, RescalesOnlyLargeGradients) {
  Eigen::VectorXd g(2);
  g << 3.0, 4.0;
  EXPECT_EQ(ClipGradNorm(g, 10.0), 5.0);
  EXPECT_EQ(g(0), 3.0);
  ClipGradNorm(g, 1.0);
  EXPECT_NEAR(g.norm(), 1.0, 1e-15);
}

}  // namespace
}  // namespace atla::nets
