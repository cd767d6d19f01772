#include "atla/attacks/tabular.h"

#include <algorithm>
#include <cmath>

#include "atla/common/error.h"
#include "atla/nets/heads.h"

namespace atla::attacks {

samdp::TabularPolicy TabularizePolicy(const nets::PolicyNet& policy,
                                      const gridworld::GridWorld& world,
                                      gridworld::Encoding encoding) {
  if (policy.recurrent() || policy.head() != nets::HeadKind::kCategorical) {
    throw ValidationError("only feedforward categorical policies have a tabular form");
  }
  if (policy.action_dim() != gridworld::kNumMoves ||
      policy.input_dim() != world.observation_dim(encoding)) {
    throw ValidationError("policy does not match the grid's observation and action spaces");
  }
  const int n = world.n_states();
  Eigen::MatrixXd obs(policy.input_dim(), n);
  for (int s = 0; s < n; ++s) obs.col(s) = world.Observation(s, encoding);
  const Eigen::MatrixXd out = policy.body().Forward(obs, Eigen::VectorXd(), nullptr);
  samdp::TabularPolicy table(n, gridworld::kNumMoves);
  for (int s = 0; s < n; ++s) {
    const Eigen::VectorXd p = nets::categorical::Softmax(out.col(s));
    for (int a = 0; a < gridworld::kNumMoves; ++a) table.set_prob(s, a, p(a));
  }
  return table;
}

namespace {

double TabularKl(const samdp::TabularPolicy& policy, int s, int s_hat) {
  double kl = 0.0;
  for (int a = 0; a < policy.n_actions(); ++a) {
    const double p = policy.prob(s, a);
    if (p > 0.0) kl += p * (std::log(p) - std::log(policy.prob(s_hat, a)));
  }
  return kl;
}

}  // namespace

samdp::AdversaryMap MadAdversaryMap(const samdp::SaMdp& samdp,
                                    const samdp::TabularPolicy& policy) {
  std::vector<int> observed(samdp.n_states());
  for (int s = 0; s < samdp.n_states(); ++s) {
    double best = -1.0;
    for (int o : samdp.perturbation_sets[s]) {
      const double kl = TabularKl(policy, s, o);
      if (kl > best || (kl == best && o < observed[s])) {
        best = kl;
        observed[s] = o;
      }
    }
  }
  return samdp::AdversaryMap::Deterministic(observed);
}

SlotAdversaryEnv::SlotAdversaryEnv(std::shared_ptr<const samdp::SaMdp> samdp,
                                   samdp::TabularPolicy policy, int horizon)
    : samdp_(std::move(samdp)), policy_(std::move(policy)), horizon_(horizon) {
  samdp_->Validate();
  policy_.Validate();
  if (policy_.n_states() != samdp_->n_states() ||
      policy_.n_actions() != samdp_->n_actions()) {
    throw ValidationError("agent policy does not match the SA-MDP");
  }
  if (horizon_ < 1) throw ValidationError("horizon must be >= 1");
  state_ = samdp_->start_state;
}

int SlotAdversaryEnv::SlotCount(const samdp::SaMdp& samdp) {
  std::size_t k = 1;
  for (const auto& set : samdp.perturbation_sets) k = std::max(k, set.size());
  return static_cast<int>(k);
}

int SlotAdversaryEnv::Observation(const samdp::SaMdp& samdp, int s, int slot) {
  const auto& set = samdp.perturbation_sets[s];
  return slot >= 0 && slot < static_cast<int>(set.size()) ? set[slot] : s;
}

void SlotAdversaryEnv::Reset(Rng&) {
  state_ = samdp_->start_state;
  t_ = 0;
}

Eigen::VectorXd SlotAdversaryEnv::Observe() const {
  return Eigen::VectorXd::Unit(samdp_->n_states(), state_);
}

StepResult SlotAdversaryEnv::Step(const EnvAction& action, Rng& rng) {
  if (action.index < 0 || action.index >= SlotCount(*samdp_)) {
    throw ValidationError("adversary slot out of range");
  }
  const int observed = Observation(*samdp_, state_, action.index);
  const int a = SampleIndex(rng, policy_.row(observed), policy_.n_actions());
  const auto& base = samdp_->base;
  const int next = SampleIndex(rng, base.transition_row(state_, a), base.n_states());
  StepResult r;
  r.reward = -base.reward(state_, a, next);
  state_ = next;
  ++t_;
  r.terminal = base.terminal(state_);
  r.truncated = !r.terminal && t_ >= horizon_;
  return r;
}

samdp::AdversaryMap SlotPolicyToMap(const samdp::SaMdp& samdp, const nets::PolicyNet& net,
                                    bool greedy) {
  const int n = samdp.n_states();
  const Eigen::MatrixXd out =
      net.body().Forward(Eigen::MatrixXd::Identity(n, n), Eigen::VectorXd(), nullptr);
  samdp::AdversaryMap map(n);
  for (int s = 0; s < n; ++s) {
    const Eigen::VectorXd p = nets::categorical::Softmax(out.col(s));
    if (greedy) {
      Eigen::Index k;
      p.maxCoeff(&k);
      map.set_prob(s, SlotAdversaryEnv::Observation(samdp, s, static_cast<int>(k)), 1.0);
    } else {
      for (int k = 0; k < p.size(); ++k) {
        const int o = SlotAdversaryEnv::Observation(samdp, s, k);
        map.set_prob(s, o, map.prob(s, o) + p(k));
      }
    }
  }
  return map;
}

policy_opt::TrainConfig DefaultTabularAdversaryConfig() {
  policy_opt::TrainConfig c;
  c.net.hidden = {};
  c.ppo.policy_lr = 0.03;
  c.ppo.value_lr = 0.03;
  c.ppo.entropy_coef = 0.0;
  c.ppo.gamma = 0.9;
  c.ppo.steps_per_batch = 2048;
  c.ppo.minibatch = 256;
  c.iterations = 40;
  return c;
}

TabularLearnedAdversary TrainTabularAdversary(const samdp::SaMdp& samdp,
                                              const samdp::TabularPolicy& policy,
                                              const policy_opt::TrainConfig& config,
                                              int horizon, std::uint64_t seed) {
  const SlotAdversaryEnv env(std::make_shared<const samdp::SaMdp>(samdp), policy, horizon);
  auto trainer = policy_opt::PpoTrainer::Create(env.observation_dim(), env.action_spec(),
                                                config, seed, "adversary");
  trainer.Train(env, config.iterations);
  return {SlotPolicyToMap(samdp, trainer.policy(), false),
          SlotPolicyToMap(samdp, trainer.policy(), true), trainer.curve()};
}

}  // namespace atla::attacks
