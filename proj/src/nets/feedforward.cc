#include "atla/nets/feedforward.h"

#include "atla/common/error.h"

namespace atla::nets {

std::string ActivationName(Activation activation) {
  return activation == Activation::kTanh ? "tanh" : "identity";
}

Activation ParseActivation(const std::string& name) {
  if (name == "tanh") return Activation::kTanh;
  if (name == "identity") return Activation::kIdentity;
  throw ValidationError("unknown activation '" + name + "'");
}

FeedForwardNet::FeedForwardNet(std::vector<int> sizes, Activation activation)
    : sizes_(std::move(sizes)), activation_(activation) {
  if (sizes_.size() < 2) throw ValidationError("need at least input and output sizes");
  for (int n : sizes_) {
    if (n < 1) throw ValidationError("layer sizes must be positive");
  }
  for (int l = 0; l < num_layers(); ++l) {
    params_.Add("layer" + std::to_string(l) + "/w", sizes_[l + 1], sizes_[l]);
    params_.Add("layer" + std::to_string(l) + "/b", sizes_[l + 1], 1);
  }
}

FeedForwardNet::FeedForwardNet(std::vector<int> sizes, Activation activation,
                               double output_gain, Rng& rng)
    : FeedForwardNet(std::move(sizes), activation) {
  for (int l = 0; l < num_layers(); ++l) {
    const double gain = l + 1 == num_layers() ? output_gain : 1.0;
    params_.Block(weight_segment(l)) =
        OrthogonalInit(sizes_[l + 1], sizes_[l], gain, rng);
  }
}

Eigen::MatrixXd FeedForwardNet::Forward(const Eigen::MatrixXd& inputs,
                                        const Eigen::VectorXd& /*state*/,
                                        Tape* tape) const {
  CheckInputs(inputs);
  if (tape != nullptr) {
    tape->sequential = false;
    tape->values.clear();
    tape->values.push_back(inputs);
  }
  Eigen::MatrixXd x = inputs;
  for (int l = 0; l < num_layers(); ++l) {
    Eigen::MatrixXd z = params_.Block(weight_segment(l)) * x;
    z.colwise() += params_.Block(bias_segment(l)).col(0);
    if (l + 1 < num_layers() && activation_ == Activation::kTanh) {
      z = z.array().tanh();
    }
    x = std::move(z);
    if (tape != nullptr) tape->values.push_back(x);
  }
  return x;
}

Eigen::MatrixXd FeedForwardNet::ForwardSteps(const Eigen::MatrixXd& inputs,
                                             const Eigen::MatrixXd& /*states*/,
                                             Tape* tape) const {
  return Forward(inputs, Eigen::VectorXd(), tape);
}

Eigen::MatrixXd FeedForwardNet::Backward(const Tape& tape,
                                         const Eigen::MatrixXd& d_outputs,
                                         Eigen::VectorXd* param_grad) const {
  if (static_cast<int>(tape.values.size()) != num_layers() + 1 ||
      d_outputs.rows() != output_dim() ||
      d_outputs.cols() != tape.values.back().cols()) {
    throw ValidationError("tape and output gradient shapes do not match");
  }
  if (param_grad != nullptr && param_grad->size() != params_.size()) {
    throw ValidationError("gradient vector size does not match parameters");
  }
  Eigen::MatrixXd delta = d_outputs;  // dL/dz of the current layer
  for (int l = num_layers() - 1; l >= 0; --l) {
    const Eigen::MatrixXd& x = tape.values[l];
    if (param_grad != nullptr) {
      params_.Block(weight_segment(l), *param_grad).noalias() += delta * x.transpose();
      params_.Block(bias_segment(l), *param_grad).col(0) += delta.rowwise().sum();
    }
    Eigen::MatrixXd dx = params_.Block(weight_segment(l)).transpose() * delta;
    if (l > 0 && activation_ == Activation::kTanh) {
      dx.array() *= 1.0 - x.array().square();
    }
    delta = std::move(dx);
  }
  return delta;
}

nlohmann::json FeedForwardNet::Architecture() const {
  return {{"kind", kind()}, {"sizes", sizes_}, {"activation", ActivationName(activation_)}};
}

std::unique_ptr<SequenceModel> FeedForwardNet::Clone() const {
  return std::make_unique<FeedForwardNet>(*this);
}

}  // namespace atla::nets
