#include "atla/attacks/perturbation.h"

#include <cmath>
#include <sstream>

#include "atla/common/error.h"
#include "atla/policy_opt/sa_regularizer.h"

namespace atla::attacks {

void AttackBudget::Validate() const {
  if (!(eps >= 0.0) || !std::isfinite(eps)) {
    throw ValidationError("attack budget eps must be finite and >= 0");
  }
}

Eigen::VectorXd Project(const Eigen::VectorXd& s, const Eigen::VectorXd& delta,
                        const AttackBudget& budget) {
  if (s.size() != delta.size()) {
    throw ValidationError("perturbation size does not match the observation size");
  }
  return (s + delta)
      .array()
      .max(s.array() - budget.eps)
      .min(s.array() + budget.eps)
      .matrix();
}

Eigen::VectorXd RandomPerturber::Perturb(const Eigen::VectorXd& s, const AttackBudget& b,
                                         Rng& rng) {
  Eigen::VectorXd out = s;
  for (Eigen::Index i = 0; i < s.size(); ++i) out(i) += Uniform(rng, -b.eps, b.eps);
  return Project(s, out - s, b);
}

void MadConfig::Validate() const {
  if (steps < 1) throw ValidationError("MAD needs at least one ascent step");
  if (!(step_size > 0.0) || !(init_scale >= 0.0)) {
    throw ValidationError("MAD step size must be > 0 and init scale >= 0");
  }
}

MadPerturber::MadPerturber(const nets::PolicyNet& agent, MadConfig config)
    : agent_(agent), config_(config), state_(agent.InitialState()) {
  config_.Validate();
}

void MadPerturber::Reset() { state_ = agent_.InitialState(); }

Eigen::VectorXd MadPerturber::Perturb(const Eigen::VectorXd& s, const AttackBudget& b,
                                      Rng& rng) {
  const policy_opt::KlAscent ascent{b.eps, config_.steps, config_.step_size * b.eps, 0.0,
                                    config_.init_scale};
  const Eigen::MatrixXd states =
      agent_.recurrent() ? Eigen::MatrixXd(state_) : Eigen::MatrixXd();
  const Eigen::VectorXd s_hat = policy_opt::MaximizeKl(agent_, s, states, ascent, rng);
  if (agent_.recurrent()) agent_.body().Step(s_hat, &state_);
  return s_hat;
}

LearnedPerturber::LearnedPerturber(const nets::PolicyNet& adversary, bool greedy)
    : adversary_(adversary), greedy_(greedy), state_(adversary.InitialState()) {
  if (adversary_.head() != nets::HeadKind::kGaussian ||
      adversary_.action_dim() != adversary_.input_dim()) {
    throw ValidationError("learned adversary must emit one Gaussian component per input");
  }
}

void LearnedPerturber::Reset() { state_ = adversary_.InitialState(); }

Eigen::VectorXd LearnedPerturber::Perturb(const Eigen::VectorXd& s, const AttackBudget& b,
                                          Rng& rng) {
  const auto decision = adversary_.Act(s, &state_, rng, greedy_);
  return Project(s, b.eps * decision.action.vector, b);
}

PerturbedEnv::PerturbedEnv(std::unique_ptr<Environment> inner,
                           std::unique_ptr<Perturber> perturber, AttackBudget budget)
    : inner_(std::move(inner)), perturber_(std::move(perturber)), budget_(budget) {
  budget_.Validate();
  if (inner_ == nullptr || perturber_ == nullptr) {
    throw ValidationError("perturbed environment needs an environment and a perturber");
  }
}

PerturbedEnv::PerturbedEnv(const PerturbedEnv& o)
    : inner_(o.inner_->Clone()),
      perturber_(o.perturber_->Clone()),
      budget_(o.budget_),
      rng_(o.rng_),
      observed_(o.observed_),
      max_deviation_(o.max_deviation_) {}

void PerturbedEnv::Reset(Rng& rng) {
  inner_->Reset(rng);
  perturber_->Reset();
  if (budget_.eps > 0.0) rng_.seed(rng());
  Refresh();
}

StepResult PerturbedEnv::Step(const EnvAction& action, Rng& rng) {
  const StepResult r = inner_->Step(action, rng);
  Refresh();
  return r;
}

void PerturbedEnv::Refresh() {
  const Eigen::VectorXd s = inner_->Observe();
  observed_ = budget_.eps > 0.0 ? perturber_->Perturb(s, budget_, rng_) : s;
  const double deviation =
      observed_.size() == s.size() ? (observed_ - s).cwiseAbs().maxCoeff() : INFINITY;
  if (!observed_.allFinite() || !(deviation <= budget_.eps + 1e-12)) {
    std::ostringstream os;
    os << perturber_->name() << " attack left the budget: deviation " << deviation
       << " > eps " << budget_.eps;
    throw NumericalError(os.str());
  }
  max_deviation_ = std::max(max_deviation_, deviation);
}

PolicyActor::PolicyActor(const nets::PolicyNet& policy, bool greedy)
    : policy_(policy), greedy_(greedy), state_(policy.InitialState()) {}

void PolicyActor::Reset() { state_ = policy_.InitialState(); }

EnvAction PolicyActor::Act(const Eigen::VectorXd& observation, Rng& rng) {
  return policy_.Act(observation, &state_, rng, greedy_).action;
}

AdversaryEnv::AdversaryEnv(std::unique_ptr<Environment> inner, std::unique_ptr<Actor> agent,
                           AttackBudget budget)
    : inner_(std::move(inner)), agent_(std::move(agent)), budget_(budget) {
  budget_.Validate();
  if (inner_ == nullptr || agent_ == nullptr) {
    throw ValidationError("adversary environment needs an environment and an agent");
  }
}

AdversaryEnv::AdversaryEnv(const AdversaryEnv& o)
    : inner_(o.inner_->Clone()), agent_(o.agent_->Clone()), budget_(o.budget_) {}

void AdversaryEnv::Reset(Rng& rng) {
  inner_->Reset(rng);
  agent_->Reset();
}

StepResult AdversaryEnv::Step(const EnvAction& action, Rng& rng) {
  const Eigen::VectorXd s = inner_->Observe();
  if (action.vector.size() != s.size() || !action.vector.allFinite()) {
    throw NumericalError("adversary emitted an invalid perturbation");
  }
  const Eigen::VectorXd s_hat = Project(s, budget_.eps * action.vector, budget_);
  StepResult r = inner_->Step(agent_->Act(s_hat, rng), rng);
  r.reward = -r.reward;
  return r;
}

}  // namespace atla::attacks
