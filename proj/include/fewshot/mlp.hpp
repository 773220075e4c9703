#pragma once

#include <vector>

#include <Eigen/Dense>

#include "fewshot/optim.hpp"

namespace fewshot {

inline constexpr int kMlpHiddenWidth = 256;

// Two ReLU hidden layers and a four-class softmax head.
struct MlpParams {
  Eigen::MatrixXd w1;  // H x p
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;  // H x H
  Eigen::VectorXd b2;
  Eigen::MatrixXd w3;  // 4 x H
  Eigen::VectorXd b3;

  Eigen::Index input_dim() const { return w1.cols(); }
  Eigen::Index hidden_width() const { return w1.rows(); }

  static MlpParams zeros(Eigen::Index input_dim, Eigen::Index hidden = kMlpHiddenWidth);
  static MlpParams random(Eigen::Index input_dim, Rng& rng, Eigen::Index hidden = kMlpHiddenWidth);

  ParamBlocks blocks();
  ConstParamBlocks blocks() const;
};

Eigen::VectorXd mlp_predict(const MlpParams& params, const Eigen::VectorXd& x);

// Mean cross-entropy over the columns of X (p x B). `masks1`/`masks2` are
// H x B inverted-dropout masks or empty. Labels are 1..4.
double mlp_loss_and_gradient(const MlpParams& params, const Eigen::MatrixXd& X, const std::vector<int>& labels,
                             const Eigen::MatrixXd& masks1, const Eigen::MatrixXd& masks2, MlpParams* gradient);

struct MlpTrainResult {
  MlpParams params;
  std::vector<double> loss_trace;
};

// Rows of X are flattened windows.
MlpTrainResult mlp_train(const Eigen::MatrixXd& X, const std::vector<int>& labels, const TrainConfig& config,
                         Eigen::Index hidden = kMlpHiddenWidth);

}  // namespace fewshot
