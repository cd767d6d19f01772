#include "atla/policy_opt/trainer.h"

#include <cmath>
#include <sstream>

#include "atla/common/error.h"
#include "atla/common/json_util.h"
#include "atla/common/parallel.h"
#include "atla/common/stats.h"
#include "atla/nets/feedforward.h"
#include "atla/nets/lstm.h"

namespace atla::policy_opt {

void NetConfig::Validate() const {
  if (arch != "mlp" && arch != "lstm") {
    throw ValidationError("unknown architecture '" + arch + "' (expected mlp or lstm)");
  }
  for (int h : hidden) {
    if (h < 1) throw ValidationError("hidden layer sizes must be >= 1");
  }
  if (lstm_hidden < 1 || embed < 0) {
    throw ValidationError("lstm_hidden must be >= 1 and embed >= 0");
  }
  if (!std::isfinite(init_log_std)) throw ValidationError("init_log_std must be finite");
}

nlohmann::json ToJson(const NetConfig& c) {
  return {{"arch", c.arch},
          {"hidden", c.hidden},
          {"lstm_hidden", c.lstm_hidden},
          {"embed", c.embed},
          {"init_log_std", c.init_log_std}};
}

NetConfig NetConfigFromJson(const nlohmann::json& doc, NetConfig c) {
  JsonReader r(doc, "net");
  r.Read("arch", c.arch);
  r.Read("hidden", c.hidden);
  r.Read("lstm_hidden", c.lstm_hidden);
  r.Read("embed", c.embed);
  r.Read("init_log_std", c.init_log_std);
  r.Finish();
  c.Validate();
  return c;
}

namespace {

std::unique_ptr<nets::SequenceModel> MakeBody(const NetConfig& c, int in, int out,
                                              double gain, Rng& rng) {
  c.Validate();
  if (c.arch == "lstm") {
    return std::make_unique<nets::LstmNet>(in, c.embed, c.lstm_hidden, out, gain, rng);
  }
  std::vector<int> sizes = {in};
  sizes.insert(sizes.end(), c.hidden.begin(), c.hidden.end());
  sizes.push_back(out);
  return std::make_unique<nets::FeedForwardNet>(sizes, nets::Activation::kTanh, gain, rng);
}

}  // namespace

nets::PolicyNet MakePolicy(const NetConfig& config, int obs_dim, const ActionSpec& actions,
                           Rng& rng) {
  const int out = actions.discrete ? actions.n : actions.dim;
  if (out < 1) throw ValidationError("action space is empty");
  return nets::PolicyNet(MakeBody(config, obs_dim, out, 0.01, rng),
                         actions.discrete ? nets::HeadKind::kCategorical
                                          : nets::HeadKind::kGaussian,
                         config.init_log_std);
}

std::unique_ptr<nets::SequenceModel> MakeValue(const NetConfig& config, int obs_dim,
                                               Rng& rng) {
  return MakeBody(config, obs_dim, 1, 1.0, rng);
}

void TrainConfig::Validate() const {
  ppo.Validate();
  net.Validate();
  if (sa) sa->Validate();
  if (iterations < 0) throw ValidationError("iterations must be >= 0");
  if (rollout_workers < 1 || threads < 1 || rollout_workers > ppo.steps_per_batch) {
    throw ValidationError("need 1 <= rollout_workers <= steps_per_batch and threads >= 1");
  }
}

nlohmann::json ToJson(const TrainConfig& c) {
  return {{"ppo", ToJson(c.ppo)},
          {"net", ToJson(c.net)},
          {"sa_reg", c.sa ? ToJson(*c.sa) : nlohmann::json(nullptr)},
          {"iterations", c.iterations},
          {"rollout_workers", c.rollout_workers},
          {"threads", c.threads}};
}

TrainConfig TrainConfigFromJson(const nlohmann::json& doc, TrainConfig c) {
  JsonReader r(doc, "train");
  if (const auto* v = r.Get("ppo")) c.ppo = PpoConfigFromJson(*v, c.ppo);
  if (const auto* v = r.Get("net")) c.net = NetConfigFromJson(*v, c.net);
  if (const auto* v = r.Get("sa_reg")) {
    if (v->is_null()) {
      c.sa.reset();
    } else {
      c.sa = SaRegConfigFromJson(*v, c.sa.value_or(SaRegConfig{}));
    }
  }
  r.Read("iterations", c.iterations);
  r.Read("rollout_workers", c.rollout_workers);
  r.Read("threads", c.threads);
  r.Finish();
  c.Validate();
  return c;
}

std::string CurveCsv(const std::vector<IterationStats>& curve) {
  std::ostringstream os;
  os << "iteration,env_steps,mean_return,policy_loss,value_loss,entropy,sa_penalty\n";
  for (const auto& s : curve) {
    os << s.iteration << ',' << s.env_steps << ',' << FormatDouble(s.mean_return) << ','
       << FormatDouble(s.policy_loss) << ',' << FormatDouble(s.value_loss) << ','
       << FormatDouble(s.entropy) << ',' << FormatDouble(s.sa_penalty) << '\n';
  }
  return os.str();
}

PpoTrainer::PpoTrainer(nets::PolicyNet policy, std::unique_ptr<nets::SequenceModel> value,
                       TrainConfig config, std::uint64_t seed, std::string stream)
    : policy_(std::move(policy)),
      value_(std::move(value)),
      config_(std::move(config)),
      seed_(seed),
      stream_(std::move(stream)) {
  config_.Validate();
  if (value_ == nullptr || value_->output_dim() != 1) {
    throw ValidationError("value network must have a single output");
  }
  if (value_->input_dim() != policy_.input_dim()) {
    throw ValidationError("policy and value networks disagree on the input size");
  }
  optimizers_.policy = nets::Adam(policy_.params().size(), config_.ppo.policy_lr);
  optimizers_.value = nets::Adam(value_->params().size(), config_.ppo.value_lr);
}

PpoTrainer PpoTrainer::Create(int obs_dim, const ActionSpec& actions, TrainConfig config,
                              std::uint64_t seed, std::string stream) {
  Rng rng = MakeRng(seed, stream + "/init");
  nets::PolicyNet policy = MakePolicy(config.net, obs_dim, actions, rng);
  auto value = MakeValue(config.net, obs_dim, rng);
  return PpoTrainer(std::move(policy), std::move(value), std::move(config), seed,
                    std::move(stream));
}

PpoTrainer::PpoTrainer(const PpoTrainer& o)
    : policy_(o.policy_),
      value_(o.value_->Clone()),
      config_(o.config_),
      seed_(o.seed_),
      stream_(o.stream_),
      optimizers_(o.optimizers_),
      iteration_(o.iteration_),
      env_steps_(o.env_steps_),
      curve_(o.curve_) {}

IterationStats PpoTrainer::RunIteration(const Environment& env) {
  const std::uint64_t root = DeriveSeed(seed_, stream_, iteration_);
  const int workers = config_.rollout_workers;
  const int batch = config_.ppo.steps_per_batch;

  // Snapshot, collect, barrier, update.
  std::vector<RolloutBuffer> parts(workers);
  ParallelFor(workers, config_.threads, [&](int w) {
    auto local = env.Clone();
    Rng env_rng = MakeRng(root, "env", w);
    Rng act_rng = MakeRng(root, "act", w);
    const int steps = batch / workers + (w < batch % workers ? 1 : 0);
    parts[w] = CollectEpisodes(*local, policy_, *value_, steps, env_rng, act_rng);
  });
  RolloutBuffer buffer;
  buffer.discrete = parts[0].discrete;
  for (auto& p : parts) {
    for (auto& e : p.episodes) buffer.episodes.push_back(std::move(e));
  }

  if (config_.ppo.anneal_lr && config_.iterations > 0) {
    const double frac =
        std::max(0.0, 1.0 - static_cast<double>(iteration_) / config_.iterations);
    optimizers_.policy.set_learning_rate(config_.ppo.policy_lr * frac);
    optimizers_.value.set_learning_rate(config_.ppo.value_lr * frac);
  }
  const Advantages adv = ComputeGae(buffer, config_.ppo.gamma, config_.ppo.lambda);
  Rng update_rng = MakeRng(root, "update");
  const UpdateStats u = PpoUpdate(policy_, *value_, optimizers_, buffer, adv, config_.ppo,
                                  config_.sa ? &*config_.sa : nullptr, update_rng);

  env_steps_ += buffer.steps();
  IterationStats s;
  s.iteration = iteration_;
  s.env_steps = env_steps_;
  const std::vector<double> returns = buffer.Returns();
  s.mean_return = returns.empty() ? std::nan("") : Mean(returns);
  s.episodes = static_cast<int>(returns.size());
  s.policy_loss = u.policy_loss;
  s.value_loss = u.value_loss;
  s.entropy = u.entropy;
  s.sa_penalty = u.sa_penalty;
  curve_.push_back(s);
  ++iteration_;
  return s;
}

std::vector<IterationStats> PpoTrainer::Train(const Environment& env, int iterations) {
  std::vector<IterationStats> out;
  for (int i = 0; i < iterations; ++i) out.push_back(RunIteration(env));
  return out;
}

}  // namespace atla::policy_opt
