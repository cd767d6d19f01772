#include "atla/nets/policy.h"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "atla/common/error.h"
#include "atla/nets/heads.h"

namespace atla::nets {

std::string HeadName(HeadKind head) {
  return head == HeadKind::kCategorical ? "categorical" : "gaussian";
}

HeadKind ParseHead(const std::string& name) {
  if (name == "categorical") return HeadKind::kCategorical;
  if (name == "gaussian") return HeadKind::kGaussian;
  throw ValidationError("unknown policy head '" + name + "'");
}

PolicyNet::PolicyNet(std::unique_ptr<SequenceModel> body, HeadKind head,
                     double initial_log_std)
    : body_(std::move(body)), head_(head) {
  if (!body_) throw ValidationError("policy needs a body network");
  if (head_ == HeadKind::kGaussian) {
    log_std_segment_ = params().Find("head/log_std");
    if (log_std_segment_ < 0) {
      log_std_segment_ = params().Add("head/log_std", action_dim(), 1);
      params().Block(log_std_segment_).setConstant(initial_log_std);
    }
  }
}

PolicyNet::PolicyNet(const PolicyNet& other)
    : body_(other.body_->Clone()),
      head_(other.head_),
      log_std_segment_(other.log_std_segment_) {}

PolicyNet& PolicyNet::operator=(const PolicyNet& other) {
  if (this != &other) {
    body_ = other.body_->Clone();
    head_ = other.head_;
    log_std_segment_ = other.log_std_segment_;
  }
  return *this;
}

ActionSpec PolicyNet::action_spec() const {
  if (head_ == HeadKind::kCategorical) return {true, action_dim(), 0};
  return {false, 0, action_dim()};
}

Eigen::VectorXd PolicyNet::LogStd() const {
  return params().Block(log_std_segment_).col(0).cwiseMax(gaussian::kMinLogStd)
      .cwiseMin(gaussian::kMaxLogStd);
}

double PolicyNet::LogProb(const Eigen::VectorXd& out, const EnvAction& action) const {
  if (head_ == HeadKind::kCategorical) return categorical::LogProb(out, action.index);
  return gaussian::LogProb(out, LogStd(), action.vector);
}

double PolicyNet::Entropy(const Eigen::VectorXd& out) const {
  if (head_ == HeadKind::kCategorical) return categorical::Entropy(out);
  return gaussian::Entropy(LogStd());
}

double PolicyNet::Kl(const Eigen::VectorXd& out_p, const Eigen::VectorXd& out_q) const {
  if (head_ == HeadKind::kCategorical) return categorical::Kl(out_p, out_q);
  const Eigen::VectorXd ls = LogStd();
  return gaussian::Kl(out_p, ls, out_q, ls);
}

EnvAction PolicyNet::Sample(const Eigen::VectorXd& out, Rng& rng) const {
  if (head_ == HeadKind::kCategorical) return {categorical::Sample(out, rng), {}};
  return {-1, gaussian::Sample(out, LogStd(), rng)};
}

EnvAction PolicyNet::Mode(const Eigen::VectorXd& out) const {
  if (head_ == HeadKind::kCategorical) return {categorical::Mode(out), {}};
  return {-1, out};
}

namespace {

// Zeroes log-std gradient entries where the clamp is active.
void AddLogStdGrad(const ParamVector& params, int segment, const Eigen::VectorXd& grad,
                   double scale, Eigen::VectorXd* param_grad) {
  if (param_grad == nullptr) return;
  const auto raw = params.Block(segment).col(0);
  auto g = params.Block(segment, *param_grad).col(0);
  for (Eigen::Index i = 0; i < grad.size(); ++i) {
    if (raw(i) >= gaussian::kMinLogStd && raw(i) <= gaussian::kMaxLogStd) {
      g(i) += scale * grad(i);
    }
  }
}

}  // namespace

void PolicyNet::AddLogProbGrad(const Eigen::VectorXd& out, const EnvAction& action,
                               double scale, Eigen::Ref<Eigen::VectorXd> d_out,
                               Eigen::VectorXd* param_grad) const {
  if (head_ == HeadKind::kCategorical) {
    d_out += scale * categorical::LogProbGrad(out, action.index);
    return;
  }
  Eigen::VectorXd d_mean, d_log_std;
  gaussian::LogProbGrad(out, LogStd(), action.vector, &d_mean, &d_log_std);
  d_out += scale * d_mean;
  AddLogStdGrad(params(), log_std_segment_, d_log_std, scale, param_grad);
}

void PolicyNet::AddEntropyGrad(const Eigen::VectorXd& out, double scale,
                               Eigen::Ref<Eigen::VectorXd> d_out,
                               Eigen::VectorXd* param_grad) const {
  if (head_ == HeadKind::kCategorical) {
    d_out += scale * categorical::EntropyGrad(out);
    return;
  }
  AddLogStdGrad(params(), log_std_segment_, Eigen::VectorXd::Ones(action_dim()),
                scale, param_grad);
}

void PolicyNet::AddKlGrad(const Eigen::VectorXd& out_p, const Eigen::VectorXd& out_q,
                          double scale, Eigen::Ref<Eigen::VectorXd> d_p,
                          Eigen::Ref<Eigen::VectorXd> d_q,
                          Eigen::VectorXd* param_grad) const {
  if (head_ == HeadKind::kCategorical) {
    d_p += scale * categorical::KlGradP(out_p, out_q);
    d_q += scale * categorical::KlGradQ(out_p, out_q);
    return;
  }
  const Eigen::VectorXd ls = LogStd();
  Eigen::VectorXd dpm, dpl, dqm, dql;
  gaussian::KlGrad(out_p, ls, out_q, ls, &dpm, &dpl, &dqm, &dql);
  d_p += scale * dpm;
  d_q += scale * dqm;
  AddLogStdGrad(params(), log_std_segment_, dpl + dql, scale, param_grad);
}

PolicyNet::Decision PolicyNet::Act(const Eigen::VectorXd& observation,
                                   Eigen::VectorXd* state, Rng& rng,
                                   bool greedy) const {
  Eigen::VectorXd scratch;
  const Eigen::VectorXd out = body_->Step(observation, state ? state : &scratch);
  Decision d;
  d.action = greedy ? Mode(out) : Sample(out, rng);
  d.log_prob = LogProb(out, d.action);
  return d;
}

Eigen::VectorXd ActionToVector(const EnvAction& action, bool discrete) {
  if (discrete) return Eigen::VectorXd::Constant(1, action.index);
  return action.vector;
}

EnvAction ActionFromVector(const Eigen::VectorXd& column, bool discrete) {
  if (discrete) return {static_cast<int>(column(0)), {}};
  return {-1, column};
}

namespace {

void CheckFormat(const nlohmann::json& doc, const std::string& format) {
  if (!doc.is_object() || doc.value("format", "") != format) {
    throw ValidationError("not a " + format + " checkpoint");
  }
  if (doc.value("version", -1) != kCheckpointVersion) {
    throw ValidationError("unsupported " + format + " checkpoint version " +
                          doc.value("version", nlohmann::json(-1)).dump());
  }
}

}  // namespace

nlohmann::json PolicyToJson(const PolicyNet& policy) {
  return {{"format", "atla-policy"},
          {"version", kCheckpointVersion},
          {"head", HeadName(policy.head())},
          {"model", ModelToJson(policy.body())}};
}

PolicyNet PolicyFromJson(const nlohmann::json& doc) {
  CheckFormat(doc, "atla-policy");
  try {
    return PolicyNet(ModelFromJson(doc.at("model")),
                     ParseHead(doc.at("head").get<std::string>()));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed policy checkpoint: ") + e.what());
  }
}

nlohmann::json ValueToJson(const SequenceModel& value) {
  return {{"format", "atla-value"},
          {"version", kCheckpointVersion},
          {"model", ModelToJson(value)}};
}

std::unique_ptr<SequenceModel> ValueFromJson(const nlohmann::json& doc) {
  CheckFormat(doc, "atla-value");
  try {
    return ModelFromJson(doc.at("model"));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed value checkpoint: ") + e.what());
  }
}

void WriteJsonFile(const std::string& path, const nlohmann::json& doc) {
  // Write to a sibling temporary and rename so readers never see a partial
  // file.
  const std::filesystem::path target(path);
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + tmp + "'");
    out << doc.dump(1) << '\n';
    if (!out) throw std::runtime_error("write to '" + tmp + "' failed");
  }
  std::filesystem::rename(tmp, target);
}

nlohmann::json ReadJsonFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("'" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace atla::nets
