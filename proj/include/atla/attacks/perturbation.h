#ifndef ATLA_ATTACKS_PERTURBATION_H_
#define ATLA_ATTACKS_PERTURBATION_H_

#include <Eigen/Core>
#include <memory>
#include <string>

#include "atla/common/environment.h"
#include "atla/common/rng.h"
#include "atla/nets/policy.h"

namespace atla::attacks {

// l-infinity ball of radius eps around the true observation.
struct AttackBudget {
  double eps = 0.0;
  void Validate() const;
};

// Component-wise clip of s + delta into [s - eps, s + eps].
Eigen::VectorXd Project(const Eigen::VectorXd& s, const Eigen::VectorXd& delta,
                        const AttackBudget& budget);

// Maps the true observation s to the observation the agent receives.
class Perturber {
 public:
  virtual ~Perturber() = default;
  virtual std::string name() const = 0;
  virtual void Reset() {}
  virtual Eigen::VectorXd Perturb(const Eigen::VectorXd& s, const AttackBudget& budget,
                                  Rng& rng) = 0;
  virtual std::unique_ptr<Perturber> Clone() const = 0;
};

class NoPerturber : public Perturber {
 public:
  std::string name() const override { return "none"; }
  Eigen::VectorXd Perturb(const Eigen::VectorXd& s, const AttackBudget&, Rng&) override {
    return s;
  }
  std::unique_ptr<Perturber> Clone() const override {
    return std::make_unique<NoPerturber>(*this);
  }
};

// s + U(-eps, eps) per component.
class RandomPerturber : public Perturber {
 public:
  std::string name() const override { return "random"; }
  Eigen::VectorXd Perturb(const Eigen::VectorXd& s, const AttackBudget& budget,
                          Rng& rng) override;
  std::unique_ptr<Perturber> Clone() const override {
    return std::make_unique<RandomPerturber>(*this);
  }
};

struct MadConfig {
  int steps = 10;
  double step_size = 0.25;   // multiple of eps
  double init_scale = 0.1;   // random start within init_scale * eps
  void Validate() const;
};

// Projected sign-gradient ascent on KL(pi(.|s) || pi(.|s_hat)). Needs the
// agent's network; for recurrent agents it tracks the agent's state on the
// perturbed observations it has been shown.
class MadPerturber : public Perturber {
 public:
  MadPerturber(const nets::PolicyNet& agent, MadConfig config);
  std::string name() const override { return "mad"; }
  void Reset() override;
  Eigen::VectorXd Perturb(const Eigen::VectorXd& s, const AttackBudget& budget,
                          Rng& rng) override;
  std::unique_ptr<Perturber> Clone() const override {
    return std::make_unique<MadPerturber>(*this);
  }

 private:
  nets::PolicyNet agent_;
  MadConfig config_;
  Eigen::VectorXd state_;
};

// Learned adversary nu(delta | s): s_hat = Project(s, eps * delta). The
// network sees only the true observation; with greedy it emits the mean.
class LearnedPerturber : public Perturber {
 public:
  LearnedPerturber(const nets::PolicyNet& adversary, bool greedy);
  std::string name() const override { return "optimal"; }
  void Reset() override;
  Eigen::VectorXd Perturb(const Eigen::VectorXd& s, const AttackBudget& budget,
                          Rng& rng) override;
  std::unique_ptr<Perturber> Clone() const override {
    return std::make_unique<LearnedPerturber>(*this);
  }
  const nets::PolicyNet& adversary() const { return adversary_; }

 private:
  nets::PolicyNet adversary_;
  bool greedy_;
  Eigen::VectorXd state_;
};

// Environment whose Observe() is the perturbed s_hat and whose TrueState()
// is the inner observation s. Every s_hat is checked against the budget.
// With eps = 0 the perturber is bypassed and no randomness is consumed.
class PerturbedEnv : public Environment {
 public:
  PerturbedEnv(std::unique_ptr<Environment> inner, std::unique_ptr<Perturber> perturber,
               AttackBudget budget);
  PerturbedEnv(const PerturbedEnv& other);

  int observation_dim() const override { return inner_->observation_dim(); }
  ActionSpec action_spec() const override { return inner_->action_spec(); }
  void Reset(Rng& rng) override;
  Eigen::VectorXd Observe() const override { return observed_; }
  Eigen::VectorXd TrueState() const override { return inner_->Observe(); }
  StepResult Step(const EnvAction& action, Rng& rng) override;
  std::unique_ptr<Environment> Clone() const override {
    return std::make_unique<PerturbedEnv>(*this);
  }

  const Environment& inner() const { return *inner_; }
  const AttackBudget& budget() const { return budget_; }
  // Largest ||s_hat - s||_inf seen since construction.
  double max_deviation() const { return max_deviation_; }

 private:
  void Refresh();

  std::unique_ptr<Environment> inner_;
  std::unique_ptr<Perturber> perturber_;
  AttackBudget budget_;
  Rng rng_;
  Eigen::VectorXd observed_;
  double max_deviation_ = 0.0;
};

// Black-box agent: maps observations to actions, nothing else.
class Actor {
 public:
  virtual ~Actor() = default;
  virtual void Reset() = 0;
  virtual EnvAction Act(const Eigen::VectorXd& observation, Rng& rng) = 0;
  virtual std::unique_ptr<Actor> Clone() const = 0;
};

class PolicyActor : public Actor {
 public:
  PolicyActor(const nets::PolicyNet& policy, bool greedy);
  void Reset() override;
  EnvAction Act(const Eigen::VectorXd& observation, Rng& rng) override;
  std::unique_ptr<Actor> Clone() const override {
    return std::make_unique<PolicyActor>(*this);
  }

 private:
  nets::PolicyNet policy_;
  bool greedy_;
  Eigen::VectorXd state_;
};

// The adversary's view of an attack: observation = true s, action = delta
// (one component per observation dimension, scaled by eps), reward = -r.
// The frozen agent acts on Project(s, eps * delta).
class AdversaryEnv : public Environment {
 public:
  AdversaryEnv(std::unique_ptr<Environment> inner, std::unique_ptr<Actor> agent,
               AttackBudget budget);
  AdversaryEnv(const AdversaryEnv& other);

  int observation_dim() const override { return inner_->observation_dim(); }
  ActionSpec action_spec() const override {
    return {false, 0, inner_->observation_dim()};
  }
  void Reset(Rng& rng) override;
  Eigen::VectorXd Observe() const override { return inner_->Observe(); }
  Eigen::VectorXd TrueState() const override { return inner_->Observe(); }
  StepResult Step(const EnvAction& action, Rng& rng) override;
  std::unique_ptr<Environment> Clone() const override {
    return std::make_unique<AdversaryEnv>(*this);
  }

 private:
  std::unique_ptr<Environment> inner_;
  std::unique_ptr<Actor> agent_;
  AttackBudget budget_;
};

}  // namespace atla::attacks

#endif  // ATLA_ATTACKS_PERTURBATION_H_
