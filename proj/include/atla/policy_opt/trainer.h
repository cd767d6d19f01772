#ifndef ATLA_POLICY_OPT_TRAINER_H_
#define ATLA_POLICY_OPT_TRAINER_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "atla/common/environment.h"
#include "atla/nets/model.h"
#include "atla/nets/policy.h"
#include "atla/policy_opt/ppo.h"
#include "atla/policy_opt/sa_regularizer.h"
#include "json.hpp"

namespace atla::policy_opt {

// Architecture shared by the policy and the (independent) value network.
struct NetConfig {
  std::string arch = "mlp";  // "mlp" or "lstm"
  std::vector<int> hidden = {64, 64};
  int lstm_hidden = 32;
  int embed = 16;  // tanh embedding in front of the LSTM, 0 for none
  double init_log_std = 0.0;

  void Validate() const;
};

nlohmann::json ToJson(const NetConfig& config);
NetConfig NetConfigFromJson(const nlohmann::json& doc, NetConfig defaults = {});

nets::PolicyNet MakePolicy(const NetConfig& config, int obs_dim, const ActionSpec& actions,
                           Rng& rng);
std::unique_ptr<nets::SequenceModel> MakeValue(const NetConfig& config, int obs_dim,
                                               Rng& rng);

struct TrainConfig {
  PpoConfig ppo;
  NetConfig net;
  std::optional<SaRegConfig> sa;
  int iterations = 100;
  // Each iteration's batch is split over this many independently seeded
  // collectors; the split fixes the result, `threads` only the speed.
  int rollout_workers = 4;
  int threads = 1;

  void Validate() const;
};

nlohmann::json ToJson(const TrainConfig& config);
TrainConfig TrainConfigFromJson(const nlohmann::json& doc, TrainConfig defaults = {});

struct IterationStats {
  int iteration = 0;
  std::int64_t env_steps = 0;  // cumulative
  double mean_return = 0.0;    // over the episodes collected this iteration
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double sa_penalty = 0.0;
  int episodes = 0;
};

// Learning curve with a header row and full-precision floats.
std::string CurveCsv(const std::vector<IterationStats>& curve);

// Collect-then-update PPO loop for one player. All randomness of iteration i
// derives from DeriveSeed(seed, stream, i).
class PpoTrainer {
 public:
  PpoTrainer(nets::PolicyNet policy, std::unique_ptr<nets::SequenceModel> value,
             TrainConfig config, std::uint64_t seed, std::string stream);
  // Fresh networks initialized from the "<stream>/init" generator.
  static PpoTrainer Create(int obs_dim, const ActionSpec& actions, TrainConfig config,
                           std::uint64_t seed, std::string stream);

  PpoTrainer(const PpoTrainer& other);
  PpoTrainer(PpoTrainer&&) = default;

  // One iteration on clones of `env`; the networks only see env.Observe().
  IterationStats RunIteration(const Environment& env);
  std::vector<IterationStats> Train(const Environment& env, int iterations);

  const nets::PolicyNet& policy() const { return policy_; }
  nets::PolicyNet& mutable_policy() { return policy_; }
  const nets::SequenceModel& value() const { return *value_; }
  const TrainConfig& config() const { return config_; }
  int iteration() const { return iteration_; }
  std::int64_t env_steps() const { return env_steps_; }
  const std::vector<IterationStats>& curve() const { return curve_; }

 private:
  nets::PolicyNet policy_;
  std::unique_ptr<nets::SequenceModel> value_;
  TrainConfig config_;
  std::uint64_t seed_;
  std::string stream_;
  PpoOptimizers optimizers_;
  int iteration_ = 0;
  std::int64_t env_steps_ = 0;
  std::vector<IterationStats> curve_;
};

}  // namespace atla::policy_opt

#endif  // ATLA_POLICY_OPT_TRAINER_H_
