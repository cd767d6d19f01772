#ifndef ATLA_NETS_FEEDFORWARD_H_
#define ATLA_NETS_FEEDFORWARD_H_

#include <vector>

#include "atla/nets/model.h"

namespace atla::nets {

enum class Activation { kTanh, kIdentity };

std::string ActivationName(Activation activation);
Activation ParseActivation(const std::string& name);

// Fully connected net: sizes = {input, hidden..., output}. The activation is
// applied after every layer except the last.
class FeedForwardNet : public SequenceModel {
 public:
  // All parameters zero.
  FeedForwardNet(std::vector<int> sizes, Activation activation);
  // Orthogonal weights (hidden gain 1, output layer scaled by output_gain),
  // zero biases.
  FeedForwardNet(std::vector<int> sizes, Activation activation,
                 double output_gain, Rng& rng);

  std::string kind() const override { return "mlp"; }
  int input_dim() const override { return sizes_.front(); }
  int output_dim() const override { return sizes_.back(); }
  const std::vector<int>& sizes() const { return sizes_; }
  Activation activation() const { return activation_; }

  Eigen::MatrixXd Forward(const Eigen::MatrixXd& inputs,
                          const Eigen::VectorXd& state,
                          Tape* tape) const override;
  Eigen::MatrixXd ForwardSteps(const Eigen::MatrixXd& inputs,
                               const Eigen::MatrixXd& states,
                               Tape* tape) const override;
  Eigen::MatrixXd Backward(const Tape& tape, const Eigen::MatrixXd& d_outputs,
                           Eigen::VectorXd* param_grad) const override;

  // Weight and bias segment indices of layer l.
  int weight_segment(int layer) const { return 2 * layer; }
  int bias_segment(int layer) const { return 2 * layer + 1; }
  int num_layers() const { return static_cast<int>(sizes_.size()) - 1; }

  nlohmann::json Architecture() const override;
  std::unique_ptr<SequenceModel> Clone() const override;

 private:
  std::vector<int> sizes_;
  Activation activation_;
};

}  // namespace atla::nets

#endif  // ATLA_NETS_FEEDFORWARD_H_
