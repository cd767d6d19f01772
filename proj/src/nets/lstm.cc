#include "atla/nets/lstm.h"

#include "atla/common/error.h"

namespace atla::nets {
namespace {

// Tape slots.
enum : int {
  kInputs = 0,
  kEmbedded,
  kHPrev,
  kCPrev,
  kGates,  // sigma(i), sigma(f), tanh(g), sigma(o)
  kCell,
  kTanhCell,
  kHidden,
  kNumSlots
};

Eigen::ArrayXd Sigmoid(const Eigen::ArrayXd& z) { return 1.0 / (1.0 + (-z).exp()); }

}  // namespace

LstmNet::LstmNet(int input_dim, int embed_dim, int hidden_dim, int output_dim)
    : input_dim_(input_dim),
      embed_dim_(embed_dim),
      hidden_dim_(hidden_dim),
      output_dim_(output_dim) {
  if (input_dim < 1 || embed_dim < 0 || hidden_dim < 1 || output_dim < 1) {
    throw ValidationError("invalid LSTM dimensions");
  }
  const int cell_in = embed_dim > 0 ? embed_dim : input_dim;
  if (embed_dim > 0) {
    seg_embed_w_ = params_.Add("embed/w", embed_dim, input_dim);
    seg_embed_b_ = params_.Add("embed/b", embed_dim, 1);
  }
  seg_wx_ = params_.Add("cell/wx", 4 * hidden_dim, cell_in);
  seg_wh_ = params_.Add("cell/wh", 4 * hidden_dim, hidden_dim);
  seg_b_ = params_.Add("cell/b", 4 * hidden_dim, 1);
  seg_out_w_ = params_.Add("out/w", output_dim, hidden_dim);
  seg_out_b_ = params_.Add("out/b", output_dim, 1);
}

LstmNet::LstmNet(int input_dim, int embed_dim, int hidden_dim, int output_dim,
                 double output_gain, Rng& rng)
    : LstmNet(input_dim, embed_dim, hidden_dim, output_dim) {
  if (embed_dim > 0) {
    params_.Block(seg_embed_w_) = OrthogonalInit(embed_dim, input_dim, 1.0, rng);
  }
  const int cell_in = embed_dim > 0 ? embed_dim : input_dim;
  for (int gate = 0; gate < 4; ++gate) {
    params_.Block(seg_wx_).middleRows(gate * hidden_dim, hidden_dim) =
        OrthogonalInit(hidden_dim, cell_in, 1.0, rng);
    params_.Block(seg_wh_).middleRows(gate * hidden_dim, hidden_dim) =
        OrthogonalInit(hidden_dim, hidden_dim, 1.0, rng);
  }
  params_.Block(seg_out_w_) = OrthogonalInit(output_dim, hidden_dim, output_gain, rng);
}

Eigen::MatrixXd LstmNet::Forward(const Eigen::MatrixXd& inputs,
                                 const Eigen::VectorXd& state, Tape* tape) const {
  CheckInputs(inputs);
  Eigen::MatrixXd start = state.size() == 0 ? Eigen::VectorXd::Zero(state_dim())
                                            : Eigen::VectorXd(state);
  if (start.rows() != state_dim()) throw ValidationError("LSTM state has wrong size");
  return Run(inputs, start, /*sequential=*/true, tape);
}

Eigen::MatrixXd LstmNet::ForwardSteps(const Eigen::MatrixXd& inputs,
                                      const Eigen::MatrixXd& states,
                                      Tape* tape) const {
  CheckInputs(inputs);
  if (states.rows() != state_dim() || states.cols() != inputs.cols()) {
    throw ValidationError("LSTM step states have wrong shape");
  }
  return Run(inputs, states, /*sequential=*/false, tape);
}

Eigen::MatrixXd LstmNet::Run(const Eigen::MatrixXd& inputs,
                             const Eigen::MatrixXd& states, bool sequential,
                             Tape* tape) const {
  const int t_len = static_cast<int>(inputs.cols());
  const int h = hidden_dim_;
  Eigen::MatrixXd embedded;
  if (embed_dim_ > 0) {
    embedded = params_.Block(seg_embed_w_) * inputs;
    embedded.colwise() += params_.Block(seg_embed_b_).col(0);
    embedded = embedded.array().tanh();
  } else {
    embedded = inputs;
  }
  Eigen::MatrixXd pre = params_.Block(seg_wx_) * embedded;
  pre.colwise() += params_.Block(seg_b_).col(0);

  Eigen::MatrixXd h_prev(h, t_len), c_prev(h, t_len), gates(4 * h, t_len);
  Eigen::MatrixXd cell(h, t_len), tanh_cell(h, t_len), hidden(h, t_len);
  const auto wh = params_.Block(seg_wh_);
  Eigen::VectorXd h_cur = states.col(0).head(h);
  Eigen::VectorXd c_cur = states.col(0).tail(h);
  for (int t = 0; t < t_len; ++t) {
    if (!sequential) {
      h_cur = states.col(t).head(h);
      c_cur = states.col(t).tail(h);
    }
    h_prev.col(t) = h_cur;
    c_prev.col(t) = c_cur;
    const Eigen::VectorXd z = pre.col(t) + wh * h_cur;
    const Eigen::ArrayXd i = Sigmoid(z.segment(0, h).array());
    const Eigen::ArrayXd f = Sigmoid(z.segment(h, h).array());
    const Eigen::ArrayXd g = z.segment(2 * h, h).array().tanh();
    const Eigen::ArrayXd o = Sigmoid(z.segment(3 * h, h).array());
    gates.col(t) << i.matrix(), f.matrix(), g.matrix(), o.matrix();
    c_cur = (f * c_cur.array() + i * g).matrix();
    tanh_cell.col(t) = c_cur.array().tanh().matrix();
    h_cur = (o * tanh_cell.col(t).array()).matrix();
    cell.col(t) = c_cur;
    hidden.col(t) = h_cur;
  }
  Eigen::MatrixXd out = params_.Block(seg_out_w_) * hidden;
  out.colwise() += params_.Block(seg_out_b_).col(0);

  if (tape != nullptr) {
    tape->sequential = sequential;
    tape->values.assign(kNumSlots, Eigen::MatrixXd());
    tape->values[kInputs] = inputs;
    tape->values[kEmbedded] = std::move(embedded);
    tape->values[kHPrev] = std::move(h_prev);
    tape->values[kCPrev] = std::move(c_prev);
    tape->values[kGates] = std::move(gates);
    tape->values[kCell] = std::move(cell);
    tape->values[kTanhCell] = std::move(tanh_cell);
    tape->values[kHidden] = std::move(hidden);
  }
  return out;
}

Eigen::MatrixXd LstmNet::Backward(const Tape& tape, const Eigen::MatrixXd& d_outputs,
                                  Eigen::VectorXd* param_grad) const {
  if (static_cast<int>(tape.values.size()) != kNumSlots ||
      d_outputs.rows() != output_dim_ ||
      d_outputs.cols() != tape.values[kInputs].cols()) {
    throw ValidationError("tape and output gradient shapes do not match");
  }
  if (param_grad != nullptr && param_grad->size() != params_.size()) {
    throw ValidationError("gradient vector size does not match parameters");
  }
  const int t_len = static_cast<int>(d_outputs.cols());
  const int h = hidden_dim_;
  const auto& gates = tape.values[kGates];
  const auto& c_prev = tape.values[kCPrev];
  const auto& tanh_cell = tape.values[kTanhCell];

  const Eigen::MatrixXd d_hidden = params_.Block(seg_out_w_).transpose() * d_outputs;
  Eigen::MatrixXd d_pre(4 * h, t_len);
  const auto wh = params_.Block(seg_wh_);
  Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(h);
  Eigen::VectorXd dc_next = Eigen::VectorXd::Zero(h);
  for (int t = t_len - 1; t >= 0; --t) {
    const Eigen::ArrayXd i = gates.col(t).segment(0, h).array();
    const Eigen::ArrayXd f = gates.col(t).segment(h, h).array();
    const Eigen::ArrayXd g = gates.col(t).segment(2 * h, h).array();
    const Eigen::ArrayXd o = gates.col(t).segment(3 * h, h).array();
    const Eigen::ArrayXd tc = tanh_cell.col(t).array();
    Eigen::ArrayXd dh = d_hidden.col(t).array();
    Eigen::ArrayXd dc = Eigen::ArrayXd::Zero(h);
    if (tape.sequential) {
      dh += dh_next.array();
      dc += dc_next.array();
    }
    dc += dh * o * (1.0 - tc.square());
    auto dz = d_pre.col(t);
    dz.segment(0, h) = (dc * g * i * (1.0 - i)).matrix();
    dz.segment(h, h) = (dc * c_prev.col(t).array() * f * (1.0 - f)).matrix();
    dz.segment(2 * h, h) = (dc * i * (1.0 - g.square())).matrix();
    dz.segment(3 * h, h) = (dh * tc * o * (1.0 - o)).matrix();
    dh_next = wh.transpose() * dz;
    dc_next = (dc * f).matrix();
  }

  const auto& embedded = tape.values[kEmbedded];
  if (param_grad != nullptr) {
    params_.Block(seg_out_w_, *param_grad).noalias() +=
        d_outputs * tape.values[kHidden].transpose();
    params_.Block(seg_out_b_, *param_grad).col(0) += d_outputs.rowwise().sum();
    params_.Block(seg_wx_, *param_grad).noalias() += d_pre * embedded.transpose();
    params_.Block(seg_wh_, *param_grad).noalias() +=
        d_pre * tape.values[kHPrev].transpose();
    params_.Block(seg_b_, *param_grad).col(0) += d_pre.rowwise().sum();
  }
  Eigen::MatrixXd d_embedded = params_.Block(seg_wx_).transpose() * d_pre;
  if (embed_dim_ == 0) return d_embedded;
  d_embedded.array() *= 1.0 - embedded.array().square();
  if (param_grad != nullptr) {
    params_.Block(seg_embed_w_, *param_grad).noalias() +=
        d_embedded * tape.values[kInputs].transpose();
    params_.Block(seg_embed_b_, *param_grad).col(0) += d_embedded.rowwise().sum();
  }
  return params_.Block(seg_embed_w_).transpose() * d_embedded;
}

Eigen::MatrixXd LstmNet::StatesBefore(const Tape& tape) const {
  const int t_len = static_cast<int>(tape.values.at(kHPrev).cols());
  Eigen::MatrixXd states(state_dim(), t_len);
  states.topRows(hidden_dim_) = tape.values[kHPrev];
  states.bottomRows(hidden_dim_) = tape.values[kCPrev];
  return states;
}

Eigen::VectorXd LstmNet::FinalState(const Tape& tape) const {
  Eigen::VectorXd state(state_dim());
  const int last = static_cast<int>(tape.values.at(kHidden).cols()) - 1;
  state << tape.values[kHidden].col(last), tape.values[kCell].col(last);
  return state;
}

nlohmann::json LstmNet::Architecture() const {
  return {{"kind", kind()},
          {"input_dim", input_dim_},
          {"embed_dim", embed_dim_},
          {"hidden_dim", hidden_dim_},
          {"output_dim", output_dim_}};
}

std::unique_ptr<SequenceModel> LstmNet::Clone() const {
  return std::make_unique<LstmNet>(*this);
}

}  // namespace atla::nets
