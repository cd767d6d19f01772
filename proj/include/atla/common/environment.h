#ifndef ATLA_COMMON_ENVIRONMENT_H_
#define ATLA_COMMON_ENVIRONMENT_H_

#include <Eigen/Core>
#include <memory>

#include "atla/common/rng.h"

namespace atla {

struct ActionSpec {
  bool discrete = true;
  int n = 0;    // number of actions when discrete
  int dim = 0;  // vector size when continuous
};

struct EnvAction {
  int index = -1;          // discrete action
  Eigen::VectorXd vector;  // continuous action
};

struct StepResult {
  double reward = 0.0;
  bool terminal = false;   // absorbing state reached
  bool truncated = false;  // horizon reached
  bool done() const { return terminal || truncated; }
};

// Episodic environment. Observe() is what a learner consumes; TrueState() is
// the unperturbed environment state encoding. Wrappers that perturb
// observations make the two differ.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual int observation_dim() const = 0;
  virtual ActionSpec action_spec() const = 0;
  virtual void Reset(Rng& rng) = 0;
  virtual Eigen::VectorXd Observe() const = 0;
  virtual Eigen::VectorXd TrueState() const = 0;
  virtual StepResult Step(const EnvAction& action, Rng& rng) = 0;
  virtual std::unique_ptr<Environment> Clone() const = 0;
};

}  // namespace atla

#endif  // ATLA_COMMON_ENVIRONMENT_H_
