#pragma once

#include <vector>

#include <Eigen/Dense>

#include "fewshot/optim.hpp"

namespace fewshot {

// Multinomial logistic regression. Targets are 0-based class indices.
struct SoftmaxRegressionParams {
  Eigen::MatrixXd weights;  // classes x features
  Eigen::VectorXd bias;     // classes

  int classes() const { return static_cast<int>(bias.size()); }

  ParamBlocks blocks();
  ConstParamBlocks blocks() const;
};

struct SoftmaxOptions {
  int classes = 2;
  double l2 = 1e-4;  // on weights only
  int max_iter = 1000;
  double tol = 1e-6;  // on the gradient norm
};

struct SoftmaxTrainResult {
  SoftmaxRegressionParams params;
  std::vector<double> loss_trace;  // objective after each accepted step, starting at the initial point
  bool converged = false;
};

// Regularized mean cross-entropy: mean_i -log p(y_i|x_i) + l2/2 ||W||^2.
double softmax_objective(const SoftmaxRegressionParams& params, const Eigen::MatrixXd& X,
                         const std::vector<int>& targets, double l2, SoftmaxRegressionParams* gradient);

// Full-batch gradient descent with Armijo backtracking from zero weights.
SoftmaxTrainResult softmax_train(const Eigen::MatrixXd& X, const std::vector<int>& targets,
                                 const SoftmaxOptions& options);

Eigen::VectorXd softmax_predict(const SoftmaxRegressionParams& params, const Eigen::VectorXd& x);

// Most probable 0-based class, ties to the lower index.
int softmax_argmax(const SoftmaxRegressionParams& params, const Eigen::VectorXd& x);

}  // namespace fewshot
