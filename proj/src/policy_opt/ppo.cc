#include "atla/policy_opt/ppo.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "atla/common/error.h"
#include "atla/common/json_util.h"

namespace atla::policy_opt {

void PpoConfig::Validate() const {
  if (!(clip > 0.0 && clip < 1.0)) throw ValidationError("PPO clip must lie in (0, 1)");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ValidationError("gamma must lie in [0, 1]");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ValidationError("lambda must lie in [0, 1]");
  if (!(policy_lr >= 0.0) || !(value_lr >= 0.0)) {
    throw ValidationError("learning rates must be >= 0");
  }
  if (epochs < 1 || minibatch < 1 || steps_per_batch < 1) {
    throw ValidationError("epochs, minibatch and steps_per_batch must be >= 1");
  }
  if (bptt_window < 1 || bptt_window > 100) {
    throw ValidationError("bptt_window must lie in [1, 100]");
  }
  if (!(entropy_coef >= 0.0) || !(max_grad_norm >= 0.0)) {
    throw ValidationError("entropy_coef and max_grad_norm must be >= 0");
  }
}

nlohmann::json ToJson(const PpoConfig& c) {
  return {{"clip", c.clip},
          {"policy_lr", c.policy_lr},
          {"value_lr", c.value_lr},
          {"epochs", c.epochs},
          {"minibatch", c.minibatch},
          {"gamma", c.gamma},
          {"lambda", c.lambda},
          {"entropy_coef", c.entropy_coef},
          {"bptt_window", c.bptt_window},
          {"max_grad_norm", c.max_grad_norm},
          {"steps_per_batch", c.steps_per_batch},
          {"anneal_lr", c.anneal_lr}};
}

PpoConfig PpoConfigFromJson(const nlohmann::json& doc, PpoConfig c) {
  JsonReader r(doc, "ppo");
  r.Read("clip", c.clip);
  r.Read("policy_lr", c.policy_lr);
  r.Read("value_lr", c.value_lr);
  r.Read("epochs", c.epochs);
  r.Read("minibatch", c.minibatch);
  r.Read("gamma", c.gamma);
  r.Read("lambda", c.lambda);
  r.Read("entropy_coef", c.entropy_coef);
  r.Read("bptt_window", c.bptt_window);
  r.Read("max_grad_norm", c.max_grad_norm);
  r.Read("steps_per_batch", c.steps_per_batch);
  r.Read("anneal_lr", c.anneal_lr);
  r.Finish();
  c.Validate();
  return c;
}

Advantages ComputeGae(const RolloutBuffer& buffer, double gamma, double lambda) {
  const int n = buffer.steps();
  if (n == 0) throw ValidationError("cannot compute advantages of an empty buffer");
  Advantages out;
  out.raw.resize(n);
  out.targets.resize(n);
  int offset = 0;
  for (const Episode& ep : buffer.episodes) {
    const int t_len = ep.length();
    double next_value = ep.terminal ? 0.0 : ep.bootstrap_value;
    double next_adv = 0.0;
    for (int t = t_len - 1; t >= 0; --t) {
      const double delta = ep.rewards(t) + gamma * next_value - ep.values(t);
      next_adv = delta + gamma * lambda * next_adv;
      out.raw(offset + t) = next_adv;
      out.targets(offset + t) = next_adv + ep.values(t);
      next_value = ep.values(t);
    }
    offset += t_len;
  }
  const double mean = out.raw.mean();
  const double std = std::sqrt((out.raw.array() - mean).square().mean());
  out.normalized = (out.raw.array() - mean) / std::max(std, 1e-8);
  return out;
}

double ClippedObjective(double ratio, double advantage, double clip) {
  const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip);
  return std::min(ratio * advantage, clipped * advantage);
}

bool ClipBranchActive(double ratio, double advantage, double clip) {
  const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip);
  return ratio * advantage <= clipped * advantage;
}

namespace {

// Flattened view of the buffer.
struct Dataset {
  Eigen::MatrixXd obs;
  Eigen::MatrixXd truth;
  Eigen::MatrixXd actions;
  Eigen::VectorXd old_log_probs;
  std::vector<int> episode_offset;
};

Dataset Flatten(const RolloutBuffer& buffer) {
  Dataset d;
  const int n = buffer.steps();
  const auto& first = buffer.episodes.front();
  d.obs.resize(first.observed.values.rows(), n);
  d.truth.resize(first.true_states.values.rows(), n);
  d.actions.resize(first.actions.rows(), n);
  d.old_log_probs.resize(n);
  int offset = 0;
  for (const Episode& ep : buffer.episodes) {
    const int t = ep.length();
    d.episode_offset.push_back(offset);
    d.obs.middleCols(offset, t) = ep.observed.values;
    d.truth.middleCols(offset, t) = ep.true_states.values;
    d.actions.middleCols(offset, t) = ep.actions;
    d.old_log_probs.segment(offset, t) = ep.log_probs;
    offset += t;
  }
  return d;
}

struct Window {
  int episode = 0;
  int start = 0;  // within the episode
  int length = 0;
};

struct LossTotals {
  double policy = 0.0;
  double value = 0.0;
  double entropy = 0.0;
  double sa = 0.0;
  double kl = 0.0;
  double clipped = 0.0;
};

// Adds the surrogate and entropy gradients (scaled by 1/n_total) for the
// columns of `out`, whose flattened sample indices are idx[k].
void PolicyLossGrad(const nets::PolicyNet& policy, const Eigen::MatrixXd& out,
                    const std::vector<int>& idx, const Dataset& data,
                    const Eigen::VectorXd& adv, const PpoConfig& config,
                    bool discrete, double inv_n, Eigen::MatrixXd& d_out,
                    Eigen::VectorXd* grad, LossTotals& totals) {
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const int i = idx[k];
    const EnvAction action = nets::ActionFromVector(data.actions.col(i), discrete);
    const double logp = policy.LogProb(out.col(k), action);
    const double log_ratio = logp - data.old_log_probs(i);
    const double ratio = std::exp(log_ratio);
    const double a = adv(i);
    totals.policy -= ClippedObjective(ratio, a, config.clip) * inv_n;
    totals.entropy += policy.Entropy(out.col(k)) * inv_n;
    totals.kl -= log_ratio * inv_n;
    if (std::abs(ratio - 1.0) > config.clip) totals.clipped += inv_n;
    if (ClipBranchActive(ratio, a, config.clip)) {
      policy.AddLogProbGrad(out.col(k), action, -a * ratio * inv_n, d_out.col(k), grad);
    }
    if (config.entropy_coef > 0.0) {
      policy.AddEntropyGrad(out.col(k), -config.entropy_coef * inv_n, d_out.col(k), grad);
    }
  }
}

void CheckFinite(double loss, const Eigen::VectorXd& grad, const char* player,
                 int epoch, int minibatch) {
  if (std::isfinite(loss) && grad.allFinite()) return;
  std::ostringstream os;
  os << "non-finite " << player << " loss or gradient (loss " << loss << ") at epoch "
     << epoch << ", minibatch " << minibatch;
  throw NumericalError(os.str());
}

Eigen::MatrixXd Gather(const Eigen::MatrixXd& m, const std::vector<int>& idx) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out.col(k) = m.col(idx[k]);
  return out;
}

void Shuffle(std::vector<int>& v, Rng& rng) {
  for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
    const int j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
    std::swap(v[i], v[j]);
  }
}

// BPTT windows: consecutive chunks of at most `window` steps per episode.
std::vector<Window> MakeWindows(const RolloutBuffer& buffer, int window) {
  std::vector<Window> windows;
  for (int e = 0; e < static_cast<int>(buffer.episodes.size()); ++e) {
    const int t_len = buffer.episodes[e].length();
    for (int s = 0; s < t_len; s += window) {
      windows.push_back({e, s, std::min(window, t_len - s)});
    }
  }
  return windows;
}

// Losses of one minibatch (the given units, n samples in total); gradients
// are added into the non-null accumulators.
LossTotals Minibatch(const nets::PolicyNet& policy, const nets::SequenceModel& value,
                     const RolloutBuffer& buffer, const Dataset& data,
                     const std::vector<Window>& windows, bool recurrent,
                     const std::vector<int>& units, int n, const Advantages& advantages,
                     const PpoConfig& config, const SaRegConfig* sa, Rng& rng,
                     Eigen::VectorXd* p_grad, Eigen::VectorXd* v_grad) {
  const bool discrete = buffer.discrete;
  const bool use_sa = sa != nullptr && sa->kappa > 0.0 && sa->eps > 0.0;
  const double inv_n = 1.0 / n;
  LossTotals mb;
  std::vector<int> sa_idx;
  Eigen::MatrixXd sa_states;

  if (!recurrent) {
    const std::vector<int>& idx = units;
    nets::Tape tape;
    const Eigen::MatrixXd x = Gather(data.obs, idx);
    const Eigen::MatrixXd out = policy.body().Forward(x, Eigen::VectorXd(), &tape);
    Eigen::MatrixXd d_out = Eigen::MatrixXd::Zero(out.rows(), out.cols());
    PolicyLossGrad(policy, out, idx, data, advantages.normalized, config, discrete,
                   inv_n, d_out, p_grad, mb);
    policy.body().Backward(tape, d_out, p_grad);

    nets::Tape v_tape;
    const Eigen::MatrixXd v = value.Forward(x, Eigen::VectorXd(), &v_tape);
    Eigen::MatrixXd d_v(1, v.cols());
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const double err = v(0, k) - advantages.targets(idx[k]);
      mb.value += err * err * inv_n;
      d_v(0, k) = 2.0 * err * inv_n;
    }
    value.Backward(v_tape, d_v, v_grad);
    sa_idx = idx;
  } else {
    std::vector<Eigen::MatrixXd> state_blocks;
    for (int w : units) {
      const Window& win = windows[w];
      const Episode& ep = buffer.episodes[win.episode];
      const int base = data.episode_offset[win.episode] + win.start;
      std::vector<int> idx(win.length);
      std::iota(idx.begin(), idx.end(), base);
      const Eigen::MatrixXd x = data.obs.middleCols(base, win.length);

      nets::Tape tape;
      const Eigen::VectorXd p_state =
          policy.recurrent() ? Eigen::VectorXd(ep.policy_states.col(win.start))
                             : Eigen::VectorXd();
      const Eigen::MatrixXd out = policy.body().Forward(x, p_state, &tape);
      Eigen::MatrixXd d_out = Eigen::MatrixXd::Zero(out.rows(), out.cols());
      PolicyLossGrad(policy, out, idx, data, advantages.normalized, config, discrete,
                     inv_n, d_out, p_grad, mb);
      policy.body().Backward(tape, d_out, p_grad);
      state_blocks.push_back(policy.body().StatesBefore(tape));

      nets::Tape v_tape;
      const Eigen::VectorXd v_state =
          value.recurrent() ? Eigen::VectorXd(ep.value_states.col(win.start))
                            : Eigen::VectorXd();
      const Eigen::MatrixXd v = value.Forward(x, v_state, &v_tape);
      Eigen::MatrixXd d_v(1, v.cols());
      for (int k = 0; k < win.length; ++k) {
        const double err = v(0, k) - advantages.targets(base + k);
        mb.value += err * err * inv_n;
        d_v(0, k) = 2.0 * err * inv_n;
      }
      value.Backward(v_tape, d_v, v_grad);
      sa_idx.insert(sa_idx.end(), idx.begin(), idx.end());
    }
    if (policy.recurrent()) {
      sa_states.resize(policy.body().state_dim(), n);
      int col = 0;
      for (const auto& block : state_blocks) {
        sa_states.middleCols(col, block.cols()) = block;
        col += static_cast<int>(block.cols());
      }
    }
  }

  if (use_sa) {
    const Eigen::MatrixXd& source = sa->on_true_state ? data.truth : data.obs;
    mb.sa += SaPenalty(policy, Gather(source, sa_idx), sa_states, *sa, rng, p_grad);
  }

  return mb;
}

}  // namespace

PpoLoss PpoObjective(const nets::PolicyNet& policy, const nets::SequenceModel& value,
                     const RolloutBuffer& buffer, const Advantages& advantages,
                     const PpoConfig& config, const SaRegConfig* sa, Rng& rng,
                     Eigen::VectorXd* policy_grad, Eigen::VectorXd* value_grad) {
  buffer.Validate();
  if (buffer.steps() == 0) throw ValidationError("empty buffer");
  const Dataset data = Flatten(buffer);
  const bool recurrent = policy.recurrent() || value.recurrent();
  const std::vector<Window> windows =
      recurrent ? MakeWindows(buffer, config.bptt_window) : std::vector<Window>();
  std::vector<int> units(recurrent ? windows.size() : buffer.steps());
  std::iota(units.begin(), units.end(), 0);
  const LossTotals t = Minibatch(policy, value, buffer, data, windows, recurrent, units,
                                 buffer.steps(), advantages, config, sa, rng, policy_grad,
                                 value_grad);
  PpoLoss out;
  out.surrogate = t.policy;
  out.entropy = t.entropy;
  out.sa_penalty = t.sa;
  out.policy = t.policy - config.entropy_coef * t.entropy + t.sa;
  out.value = t.value;
  return out;
}

UpdateStats PpoUpdate(nets::PolicyNet& policy, nets::SequenceModel& value,
                      PpoOptimizers& optimizers, const RolloutBuffer& buffer,
                      const Advantages& advantages, const PpoConfig& config,
                      const SaRegConfig* sa, Rng& rng) {
  config.Validate();
  buffer.Validate();
  if (buffer.steps() == 0) throw ValidationError("cannot update on an empty buffer");
  if (advantages.normalized.size() != buffer.steps()) {
    throw ValidationError("advantages do not match the buffer");
  }
  const Dataset data = Flatten(buffer);
  const bool recurrent = policy.recurrent() || value.recurrent();

  const std::vector<Window> windows =
      recurrent ? MakeWindows(buffer, config.bptt_window) : std::vector<Window>();
  const int n_units = recurrent ? static_cast<int>(windows.size()) : buffer.steps();
  std::vector<int> order(n_units);
  std::iota(order.begin(), order.end(), 0);

  UpdateStats stats;
  LossTotals totals;
  Eigen::VectorXd p_grad(policy.params().size());
  Eigen::VectorXd v_grad(value.params().size());
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Shuffle(order, rng);
    std::size_t pos = 0;
    while (pos < order.size()) {
      // Next minibatch: units until at least config.minibatch samples.
      std::vector<int> units;
      int n = 0;
      while (pos < order.size() && n < config.minibatch) {
        units.push_back(order[pos++]);
        n += recurrent ? windows[units.back()].length : 1;
      }
      p_grad.setZero();
      v_grad.setZero();
      const LossTotals mb = Minibatch(policy, value, buffer, data, windows, recurrent,
                                      units, n, advantages, config, sa, rng, &p_grad,
                                      &v_grad);
      const double value_loss = mb.value;
      const double p_loss = mb.policy - config.entropy_coef * mb.entropy + mb.sa;
      CheckFinite(p_loss, p_grad, "policy", epoch, stats.minibatches);
      CheckFinite(value_loss, v_grad, "value", epoch, stats.minibatches);
      nets::ClipGradNorm(p_grad, config.max_grad_norm);
      nets::ClipGradNorm(v_grad, config.max_grad_norm);
      optimizers.policy.Step(policy.params().values(), p_grad);
      optimizers.value.Step(value.params().values(), v_grad);

      totals.policy += mb.policy;
      totals.entropy += mb.entropy;
      totals.sa += mb.sa;
      totals.kl += mb.kl;
      totals.clipped += mb.clipped;
      totals.value += value_loss;
      ++stats.minibatches;
    }
  }
  const double m = stats.minibatches;
  stats.policy_loss = totals.policy / m;
  stats.value_loss = totals.value / m;
  stats.entropy = totals.entropy / m;
  stats.sa_penalty = totals.sa / m;
  stats.approx_kl = totals.kl / m;
  stats.clip_fraction = totals.clipped / m;
  return stats;
}

}  // namespace atla::policy_opt
