#include "fewshot/softmax_regression.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace fewshot {

ParamBlocks SoftmaxRegressionParams::blocks() { return {block(weights), block(bias)}; }
ConstParamBlocks SoftmaxRegressionParams::blocks() const { return {block(weights), block(bias)}; }

double softmax_objective(const SoftmaxRegressionParams& p, const Eigen::MatrixXd& X,
                         const std::vector<int>& targets, double l2, SoftmaxRegressionParams* gradient) {
  const Eigen::Index n = X.rows();
  Eigen::MatrixXd logits = p.weights * X.transpose();
  logits.colwise() += p.bias;
  Eigen::MatrixXd probs = softmax_columns(logits);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = targets[static_cast<std::size_t>(i)];
    loss += cross_entropy(probs(y, i));
    probs(y, i) -= 1.0;
  }
  loss = loss / static_cast<double>(n) + 0.5 * l2 * p.weights.squaredNorm();
  if (gradient != nullptr) {
    probs /= static_cast<double>(n);
    gradient->weights = probs * X + l2 * p.weights;
    gradient->bias = probs.rowwise().sum();
  }
  return loss;
}

SoftmaxTrainResult softmax_train(const Eigen::MatrixXd& X, const std::vector<int>& targets,
                                 const SoftmaxOptions& options) {
  if (X.rows() == 0) throw std::invalid_argument("softmax_train: empty input");
  if (static_cast<std::size_t>(X.rows()) != targets.size()) throw std::invalid_argument("softmax_train: target count mismatch");
  if (options.classes < 1) throw std::invalid_argument("softmax_train: classes must be >= 1");
  if (!X.allFinite()) throw std::invalid_argument("softmax_train: non-finite input");
  for (int y : targets) {
    if (y < 0 || y >= options.classes) {
      throw std::invalid_argument("softmax_train: target " + std::to_string(y) + " outside [0, " +
                                  std::to_string(options.classes) + ")");
    }
  }

  SoftmaxTrainResult result;
  auto& p = result.params;
  p.weights = Eigen::MatrixXd::Zero(options.classes, X.cols());
  p.bias = Eigen::VectorXd::Zero(options.classes);

  constexpr double kArmijo = 1e-4;
  constexpr double kMinStep = 1e-16;
  double step = 1.0;
  SoftmaxRegressionParams grad;
  double loss = softmax_objective(p, X, targets, options.l2, &grad);
  result.loss_trace.push_back(loss);
  for (int iter = 0; iter < options.max_iter; ++iter) {
    const double g2 = grad.weights.squaredNorm() + grad.bias.squaredNorm();
    if (std::sqrt(g2) < options.tol) {
      result.converged = true;
      break;
    }
    step = std::min(1e6, step * 2.0);
    SoftmaxRegressionParams trial;
    double trial_loss = 0.0;
    while (true) {
      trial.weights = p.weights - step * grad.weights;
      trial.bias = p.bias - step * grad.bias;
      trial_loss = softmax_objective(trial, X, targets, options.l2, nullptr);
      if (trial_loss <= loss - kArmijo * step * g2) break;
      step *= 0.5;
      if (step < kMinStep) break;
    }
    if (step < kMinStep) {
      result.converged = true;  // no descent possible at machine precision
      break;
    }
    p = std::move(trial);
    loss = softmax_objective(p, X, targets, options.l2, &grad);
    result.loss_trace.push_back(loss);
  }
  return result;
}

Eigen::VectorXd softmax_predict(const SoftmaxRegressionParams& params, const Eigen::VectorXd& x) {
  if (x.size() != params.weights.cols()) throw std::invalid_argument("softmax_predict: dimension mismatch");
  Eigen::MatrixXd logits = params.weights * x + params.bias;
  return softmax_columns(logits).col(0);
}

int softmax_argmax(const SoftmaxRegressionParams& params, const Eigen::VectorXd& x) {
  const Eigen::VectorXd probs = softmax_predict(params, x);
  Eigen::Index best = 0;
  for (Eigen::Index c = 1; c < probs.size(); ++c)
    if (probs[c] > probs[best]) best = c;
  return static_cast<int>(best);
}

}  // namespace fewshot
