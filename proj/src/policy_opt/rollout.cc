#include "atla/policy_opt/rollout.h"

#include <cmath>
#include <limits>

#include "atla/common/error.h"

namespace atla::policy_opt {

void Episode::Validate() const {
  const int t = length();
  if (t < 1) throw ValidationError("empty episode");
  if (observed.values.cols() != t || true_states.values.cols() != t ||
      actions.cols() != t || log_probs.size() != t || values.size() != t) {
    throw ValidationError("episode fields have inconsistent lengths");
  }
  if (policy_states.size() > 0 && policy_states.cols() != t) {
    throw ValidationError("episode policy states have wrong length");
  }
  if (value_states.size() > 0 && value_states.cols() != t) {
    throw ValidationError("episode value states have wrong length");
  }
  if (!log_probs.allFinite()) throw NumericalError("non-finite log-probability in episode");
}

int RolloutBuffer::steps() const {
  int n = 0;
  for (const auto& e : episodes) n += e.length();
  return n;
}

std::vector<double> RolloutBuffer::Returns() const {
  std::vector<double> out;
  for (const auto& e : episodes) {
    if (!e.cut) out.push_back(e.Return());
  }
  return out;
}

void RolloutBuffer::Validate() const {
  for (const auto& e : episodes) e.Validate();
}

namespace {

Episode RunEpisode(Environment& env, const nets::PolicyNet& policy,
                   const nets::SequenceModel* value, Rng& env_rng, Rng& act_rng,
                   bool greedy, int max_steps) {
  const bool discrete = policy.action_spec().discrete;
  env.Reset(env_rng);
  Eigen::VectorXd p_state = policy.InitialState();
  Eigen::VectorXd v_state = value ? value->InitialState() : Eigen::VectorXd();
  std::vector<Eigen::VectorXd> obs, truth, acts, p_states, v_states;
  std::vector<double> rewards, log_probs, values;
  Episode ep;
  while (true) {
    const Eigen::VectorXd o = env.Observe();
    obs.push_back(o);
    truth.push_back(env.TrueState());
    if (policy.recurrent()) p_states.push_back(p_state);
    const auto decision = policy.Act(o, &p_state, act_rng, greedy);
    if (value != nullptr) {
      if (value->recurrent()) v_states.push_back(v_state);
      values.push_back(value->Step(o, &v_state)(0));
    }
    acts.push_back(nets::ActionToVector(decision.action, discrete));
    log_probs.push_back(decision.log_prob);
    const StepResult r = env.Step(decision.action, env_rng);
    rewards.push_back(r.reward);
    const bool cut = !r.done() && static_cast<int>(rewards.size()) >= max_steps;
    if (r.done() || cut) {
      ep.terminal = r.terminal;
      ep.cut = cut;
      if (!r.terminal && value != nullptr) {
        ep.bootstrap_value = value->Step(env.Observe(), &v_state)(0);
      }
      break;
    }
  }
  auto stack = [](const std::vector<Eigen::VectorXd>& cols) {
    if (cols.empty()) return Eigen::MatrixXd();
    Eigen::MatrixXd m(cols[0].size(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t t = 0; t < cols.size(); ++t) m.col(t) = cols[t];
    return m;
  };
  auto vec = [](const std::vector<double>& v) {
    return Eigen::VectorXd(
        Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
  };
  ep.observed.values = stack(obs);
  ep.true_states.values = stack(truth);
  ep.actions = stack(acts);
  ep.policy_states = stack(p_states);
  ep.value_states = stack(v_states);
  ep.rewards = vec(rewards);
  ep.log_probs = vec(log_probs);
  ep.values = value ? vec(values) : Eigen::VectorXd::Zero(ep.rewards.size());
  return ep;
}

}  // namespace

RolloutBuffer CollectEpisodes(Environment& env, const nets::PolicyNet& policy,
                              const nets::SequenceModel& value, int steps,
                              Rng& env_rng, Rng& act_rng) {
  if (env.observation_dim() != policy.input_dim() ||
      env.observation_dim() != value.input_dim()) {
    throw ValidationError("network input size does not match the observation size");
  }
  RolloutBuffer buffer;
  buffer.discrete = policy.action_spec().discrete;
  if (steps < 1) throw ValidationError("need at least one step to collect");
  int collected = 0;
  while (collected < steps) {
    buffer.episodes.push_back(
        RunEpisode(env, policy, &value, env_rng, act_rng, false, steps - collected));
    collected += buffer.episodes.back().length();
  }
  return buffer;
}

ReturnStats EvaluatePolicy(const Environment& env, const nets::PolicyNet& policy,
                           int episodes, std::uint64_t seed, bool greedy) {
  if (episodes < 1) throw ValidationError("need at least one evaluation episode");
  if (env.observation_dim() != policy.input_dim()) {
    throw ValidationError("policy input size does not match the observation size");
  }
  std::vector<double> returns;
  returns.reserve(episodes);
  auto local = env.Clone();
  for (int e = 0; e < episodes; ++e) {
    Rng env_rng = MakeRng(seed, "eval/env", e);
    Rng act_rng = MakeRng(seed, "eval/act", e);
    returns.push_back(RunEpisode(*local, policy, nullptr, env_rng, act_rng, greedy,
                                 std::numeric_limits<int>::max()).Return());
  }
  return Summarize(std::move(returns));
}

}  // namespace atla::policy_opt
