#include "fewshot/gradcheck.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace fewshot {

double max_relative_gradient_error(const ParamBlocks& params, const ConstParamBlocks& analytic,
                                   const std::function<double()>& loss, double eps) {
  if (params.size() != analytic.size()) throw std::invalid_argument("grad_check: block count mismatch");
  double worst = 0.0;
  for (std::size_t b = 0; b < params.size(); ++b) {
    if (params[b].size() != analytic[b].size()) throw std::invalid_argument("grad_check: block size mismatch");
    for (std::size_t i = 0; i < params[b].size(); ++i) {
      const double ga = analytic[b][i];
      if (!std::isfinite(ga)) throw std::runtime_error("grad_check: non-finite analytic gradient");
      double& theta = params[b][i];
      const double saved = theta;
      theta = saved + eps;
      const double up = loss();
      theta = saved - eps;
      const double down = loss();
      theta = saved;
      const double gn = (up - down) / (2.0 * eps);
      if (!std::isfinite(gn)) throw std::runtime_error("grad_check: non-finite numeric gradient");
      worst = std::max(worst, std::abs(ga - gn) / (std::abs(ga) + std::abs(gn) + 1e-12));
    }
  }
  return worst;
}

double grad_check(LstmParams params, const WindowSample& sample, double eps) {
  const std::vector<const Eigen::MatrixXd*> windows{&sample.x};
  const std::vector<int> labels{sample.y};
  LstmParams grad;
  lstm_loss_and_gradient(params, windows, labels, {}, &grad);
  return max_relative_gradient_error(params.blocks(), std::as_const(grad).blocks(),
                                     [&] { return lstm_loss_and_gradient(params, windows, labels, {}, nullptr); },
                                     eps);
}

double grad_check(MlpParams params, const Eigen::VectorXd& x, int label, double eps) {
  const Eigen::MatrixXd X = x;
  const std::vector<int> labels{label};
  MlpParams grad;
  mlp_loss_and_gradient(params, X, labels, {}, {}, &grad);
  return max_relative_gradient_error(params.blocks(), std::as_const(grad).blocks(),
                                     [&] { return mlp_loss_and_gradient(params, X, labels, {}, {}, nullptr); },
                                     eps);
}

double grad_check(SoftmaxRegressionParams params, const Eigen::MatrixXd& X, const std::vector<int>& targets,
                  double l2, double eps) {
  SoftmaxRegressionParams grad;
  softmax_objective(params, X, targets, l2, &grad);
  return max_relative_gradient_error(params.blocks(), std::as_const(grad).blocks(),
                                     [&] { return softmax_objective(params, X, targets, l2, nullptr); }, eps);
}

}  // namespace fewshot
