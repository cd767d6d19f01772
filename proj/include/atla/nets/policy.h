#ifndef ATLA_NETS_POLICY_H_
#define ATLA_NETS_POLICY_H_

#include <memory>
#include <string>

#include "atla/common/environment.h"
#include "atla/nets/model.h"

namespace atla::nets {

enum class HeadKind { kCategorical, kGaussian };

std::string HeadName(HeadKind head);
HeadKind ParseHead(const std::string& name);

// A body network followed by an action distribution. The body emits logits
// (categorical) or the mean (Gaussian); the Gaussian log-std is a
// state-independent parameter segment "head/log_std" appended to the body's
// parameter vector and clamped to [-10, 2] when used.
class PolicyNet {
 public:
  PolicyNet(std::unique_ptr<SequenceModel> body, HeadKind head,
            double initial_log_std = 0.0);
  PolicyNet(const PolicyNet& other);
  PolicyNet& operator=(const PolicyNet& other);
  PolicyNet(PolicyNet&&) = default;
  PolicyNet& operator=(PolicyNet&&) = default;

  HeadKind head() const { return head_; }
  SequenceModel& body() { return *body_; }
  const SequenceModel& body() const { return *body_; }
  ParamVector& params() { return body_->params(); }
  const ParamVector& params() const { return body_->params(); }
  int action_dim() const { return body_->output_dim(); }
  int input_dim() const { return body_->input_dim(); }
  bool recurrent() const { return body_->recurrent(); }
  Eigen::VectorXd InitialState() const { return body_->InitialState(); }
  ActionSpec action_spec() const;

  // Clamped log-std (Gaussian heads only).
  Eigen::VectorXd LogStd() const;

  // Distribution queries on one column of body output.
  double LogProb(const Eigen::VectorXd& out, const EnvAction& action) const;
  double Entropy(const Eigen::VectorXd& out) const;
  double Kl(const Eigen::VectorXd& out_p, const Eigen::VectorXd& out_q) const;
  EnvAction Sample(const Eigen::VectorXd& out, Rng& rng) const;
  EnvAction Mode(const Eigen::VectorXd& out) const;

  // Gradient accumulators: add scale * d(quantity)/d(out) into *d_out and the
  // log-std part (Gaussian) into *param_grad.
  void AddLogProbGrad(const Eigen::VectorXd& out, const EnvAction& action,
                      double scale, Eigen::Ref<Eigen::VectorXd> d_out,
                      Eigen::VectorXd* param_grad) const;
  void AddEntropyGrad(const Eigen::VectorXd& out, double scale,
                      Eigen::Ref<Eigen::VectorXd> d_out,
                      Eigen::VectorXd* param_grad) const;
  // Both arguments come from this policy, so the log-std is shared.
  void AddKlGrad(const Eigen::VectorXd& out_p, const Eigen::VectorXd& out_q,
                 double scale, Eigen::Ref<Eigen::VectorXd> d_p,
                 Eigen::Ref<Eigen::VectorXd> d_q, Eigen::VectorXd* param_grad) const;

  struct Decision {
    EnvAction action;
    double log_prob = 0.0;
  };
  // One environment step: advances *state and samples (or takes the mode).
  Decision Act(const Eigen::VectorXd& observation, Eigen::VectorXd* state,
               Rng& rng, bool greedy) const;

 private:
  std::unique_ptr<SequenceModel> body_;
  HeadKind head_;
  int log_std_segment_ = -1;
};

// Action as a column: the index for discrete actions, the vector otherwise.
Eigen::VectorXd ActionToVector(const EnvAction& action, bool discrete);
EnvAction ActionFromVector(const Eigen::VectorXd& column, bool discrete);

// Version-tagged checkpoints; doubles round-trip exactly.
inline constexpr int kCheckpointVersion = 1;
nlohmann::json PolicyToJson(const PolicyNet& policy);
PolicyNet PolicyFromJson(const nlohmann::json& doc);
nlohmann::json ValueToJson(const SequenceModel& value);
std::unique_ptr<SequenceModel> ValueFromJson(const nlohmann::json& doc);

void WriteJsonFile(const std::string& path, const nlohmann::json& doc);
nlohmann::json ReadJsonFile(const std::string& path);

}  // namespace atla::nets

#endif  // ATLA_NETS_POLICY_H_
