#ifndef ATLA_NETS_MODEL_H_
#define ATLA_NETS_MODEL_H_

#include <Eigen/Core>
#include <memory>
#include <string>
#include <vector>

#include "atla/common/rng.h"
#include "atla/nets/param_vector.h"
#include "json.hpp"

namespace atla::nets {

// Intermediate values recorded by a forward pass; only meaningful to the
// model that produced it.
struct Tape {
  bool sequential = false;  // columns are time steps of one sequence
  std::vector<Eigen::MatrixXd> values;
};

// A network mapping one input column to one output column. Recurrent models
// carry a state vector between columns.
//
// Forward() runs columns as one sequence starting from `state` (zero when
// empty); for stateless models this is an ordinary batch. ForwardSteps()
// runs every column as an independent single step from its own state, so
// gradients never flow between columns.
//
// Parameters may carry extra segments appended after construction (for
// example a policy head's log-std); models ignore them, and Backward()
// leaves their gradient entries untouched.
class SequenceModel {
 public:
  virtual ~SequenceModel() = default;

  virtual std::string kind() const = 0;
  virtual int input_dim() const = 0;
  virtual int output_dim() const = 0;
  virtual int state_dim() const { return 0; }
  bool recurrent() const { return state_dim() > 0; }

  ParamVector& params() { return params_; }
  const ParamVector& params() const { return params_; }

  virtual Eigen::MatrixXd Forward(const Eigen::MatrixXd& inputs,
                                  const Eigen::VectorXd& state,
                                  Tape* tape) const = 0;
  virtual Eigen::MatrixXd ForwardSteps(const Eigen::MatrixXd& inputs,
                                       const Eigen::MatrixXd& states,
                                       Tape* tape) const = 0;

  // Reverse pass for the scalar loss whose gradient wrt the outputs is
  // d_outputs. Adds dL/dparams into *param_grad (skipped when null) and
  // returns dL/dinputs.
  virtual Eigen::MatrixXd Backward(const Tape& tape,
                                   const Eigen::MatrixXd& d_outputs,
                                   Eigen::VectorXd* param_grad) const = 0;

  // State entering each column of the recorded pass (state_dim x T), and the
  // state after the last column.
  virtual Eigen::MatrixXd StatesBefore(const Tape& tape) const;
  virtual Eigen::VectorXd FinalState(const Tape& tape) const;

  // Single step that advances *state in place.
  Eigen::VectorXd Step(const Eigen::VectorXd& input, Eigen::VectorXd* state) const;

  Eigen::VectorXd InitialState() const {
    return Eigen::VectorXd::Zero(state_dim());
  }

  // Architecture description sufficient to rebuild the model.
  virtual nlohmann::json Architecture() const = 0;
  virtual std::unique_ptr<SequenceModel> Clone() const = 0;

 protected:
  void CheckInputs(const Eigen::MatrixXd& inputs) const;
  ParamVector params_;
};

// Orthogonal matrix (rows x cols) scaled by gain, from the QR decomposition
// of a Gaussian matrix.
Eigen::MatrixXd OrthogonalInit(int rows, int cols, double gain, Rng& rng);

// Rebuilds any model from Architecture() plus a parameter document.
std::unique_ptr<SequenceModel> ModelFromJson(const nlohmann::json& doc);
nlohmann::json ModelToJson(const SequenceModel& model);

}  // namespace atla::nets

#endif  // ATLA_NETS_MODEL_H_
