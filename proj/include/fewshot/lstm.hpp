#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "fewshot/ingest.hpp"
#include "fewshot/optim.hpp"

namespace fewshot {

inline constexpr int kLstmHiddenDim = 4;
inline constexpr Eigen::Index kWindowLength = 2;

// Single-layer many-to-one LSTM with a softmax head over the four classes.
// Gate rows are stacked [input, forget, output, candidate], each hidden_dim tall.
struct LstmParams {
  int input_dim = 0;
  int hidden_dim = kLstmHiddenDim;
  Eigen::MatrixXd w_input;      // 4H x d
  Eigen::MatrixXd w_recurrent;  // 4H x H
  Eigen::VectorXd b_gates;      // 4H
  Eigen::MatrixXd w_out;        // 4 x H
  Eigen::VectorXd b_out;        // 4

  static LstmParams zeros(int input_dim, int hidden_dim = kLstmHiddenDim);
  static LstmParams random(int input_dim, Rng& rng, int hidden_dim = kLstmHiddenDim);

  ParamBlocks blocks();
  ConstParamBlocks blocks() const;
};

// Class probabilities for one 2 x d window. The optional mask multiplies the
// final hidden state (inverted dropout); pass nothing at inference.
Eigen::VectorXd lstm_forward(const LstmParams& params, const Eigen::MatrixXd& window,
                             const std::optional<Eigen::VectorXd>& dropout_mask = std::nullopt);

// Index (1..4) of the most probable class, ties to the lower class.
int lstm_predict(const LstmParams& params, const Eigen::MatrixXd& window);

// Mean cross-entropy over a batch and its gradient. `masks` is either empty
// (no dropout) or H x B.
double lstm_loss_and_gradient(const LstmParams& params, const std::vector<const Eigen::MatrixXd*>& windows,
                              const std::vector<int>& labels, const Eigen::MatrixXd& masks,
                              LstmParams* gradient);

double lstm_mean_loss(const LstmParams& params, const std::vector<WindowSample>& samples);

struct LstmTrainResult {
  LstmParams params;
  std::vector<double> loss_trace;  // mean minibatch loss per epoch
};

LstmTrainResult lstm_train(const std::vector<WindowSample>& samples, const TrainConfig& config);

}  // namespace fewshot
