#include "atla/nets/model.h"

#include <Eigen/QR>

#include "atla/common/error.h"
#include "atla/nets/feedforward.h"
#include "atla/nets/lstm.h"

namespace atla::nets {

// Every model stores its input matrix as tape.values[0].
Eigen::MatrixXd SequenceModel::StatesBefore(const Tape& tape) const {
  return Eigen::MatrixXd(0, tape.values.at(0).cols());
}

Eigen::VectorXd SequenceModel::FinalState(const Tape&) const {
  return Eigen::VectorXd();
}

Eigen::VectorXd SequenceModel::Step(const Eigen::VectorXd& input,
                                    Eigen::VectorXd* state) const {
  if (!recurrent()) return Forward(input, Eigen::VectorXd(), nullptr).col(0);
  Tape tape;
  const Eigen::VectorXd out = Forward(input, *state, &tape).col(0);
  *state = FinalState(tape);
  return out;
}

void SequenceModel::CheckInputs(const Eigen::MatrixXd& inputs) const {
  if (inputs.rows() != input_dim()) {
    throw ValidationError("input has " + std::to_string(inputs.rows()) +
                          " rows, model expects " + std::to_string(input_dim()));
  }
  if (inputs.cols() < 1) throw ValidationError("empty input sequence");
}

Eigen::MatrixXd OrthogonalInit(int rows, int cols, double gain, Rng& rng) {
  const int big = std::max(rows, cols);
  const int small = std::min(rows, cols);
  Eigen::MatrixXd a(big, small);
  for (int j = 0; j < small; ++j)
    for (int i = 0; i < big; ++i) a(i, j) = StandardNormal(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(big, small);
  // Fix column signs so the result is uniformly distributed.
  const Eigen::MatrixXd r = qr.matrixQR().topRows(small).triangularView<Eigen::Upper>();
  for (int j = 0; j < small; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  if (rows < cols) return gain * q.transpose();
  return gain * q;
}

nlohmann::json ModelToJson(const SequenceModel& model) {
  return {{"architecture", model.Architecture()}, {"params", ToJson(model.params())}};
}

std::unique_ptr<SequenceModel> ModelFromJson(const nlohmann::json& doc) {
  std::unique_ptr<SequenceModel> model;
  try {
    const auto& arch = doc.at("architecture");
    const std::string kind = arch.at("kind").get<std::string>();
    if (kind == "mlp") {
      model = std::make_unique<FeedForwardNet>(
          arch.at("sizes").get<std::vector<int>>(),
          ParseActivation(arch.at("activation").get<std::string>()));
    } else if (kind == "lstm") {
      model = std::make_unique<LstmNet>(
          arch.at("input_dim").get<int>(), arch.at("embed_dim").get<int>(),
          arch.at("hidden_dim").get<int>(), arch.at("output_dim").get<int>());
    } else {
      throw ValidationError("unknown model kind '" + kind + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed model document: ") + e.what());
  }
  ParamVector loaded = ParamVectorFromJson(doc.at("params"));
  const auto& expected = model->params().segments();
  if (loaded.segments().size() < expected.size() ||
      !std::equal(expected.begin(), expected.end(), loaded.segments().begin())) {
    throw ValidationError("parameter segments do not match the architecture");
  }
  model->params() = std::move(loaded);
  return model;
}

}  // namespace atla::nets
