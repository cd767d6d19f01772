#ifndef ATLA_NETS_LSTM_H_
#define ATLA_NETS_LSTM_H_

#include "atla/nets/model.h"

namespace atla::nets {

// Sequence encoder: optional tanh input embedding, a four-gate LSTM cell and
// a linear read-out of the hidden state. State vector is [h; c].
//
//   z = Wx e + Wh h_prev + b,   gates (i, f, g, o) = z split in four
//   c = sigma(f) * c_prev + sigma(i) * tanh(g)
//   h = sigma(o) * tanh(c),     y = Wy h + by
class LstmNet : public SequenceModel {
 public:
  // embed_dim == 0 feeds inputs straight into the cell. All parameters zero.
  LstmNet(int input_dim, int embed_dim, int hidden_dim, int output_dim);
  LstmNet(int input_dim, int embed_dim, int hidden_dim, int output_dim,
          double output_gain, Rng& rng);

  std::string kind() const override { return "lstm"; }
  int input_dim() const override { return input_dim_; }
  int output_dim() const override { return output_dim_; }
  int state_dim() const override { return 2 * hidden_dim_; }
  int embed_dim() const { return embed_dim_; }
  int hidden_dim() const { return hidden_dim_; }

  Eigen::MatrixXd Forward(const Eigen::MatrixXd& inputs,
                          const Eigen::VectorXd& state,
                          Tape* tape) const override;
  Eigen::MatrixXd ForwardSteps(const Eigen::MatrixXd& inputs,
                               const Eigen::MatrixXd& states,
                               Tape* tape) const override;
  Eigen::MatrixXd Backward(const Tape& tape, const Eigen::MatrixXd& d_outputs,
                           Eigen::VectorXd* param_grad) const override;
  Eigen::MatrixXd StatesBefore(const Tape& tape) const override;
  Eigen::VectorXd FinalState(const Tape& tape) const override;

  nlohmann::json Architecture() const override;
  std::unique_ptr<SequenceModel> Clone() const override;

 private:
  Eigen::MatrixXd Run(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& states,
                      bool sequential, Tape* tape) const;

  int input_dim_;
  int embed_dim_;
  int hidden_dim_;
  int output_dim_;
  int seg_embed_w_ = -1, seg_embed_b_ = -1;
  int seg_wx_ = -1, seg_wh_ = -1, seg_b_ = -1;
  int seg_out_w_ = -1, seg_out_b_ = -1;
};

}  // namespace atla::nets

#endif  // ATLA_NETS_LSTM_H_
