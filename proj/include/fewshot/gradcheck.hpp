#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "fewshot/ingest.hpp"
#include "fewshot/lstm.hpp"
#include "fewshot/mlp.hpp"
#include "fewshot/optim.hpp"
#include "fewshot/softmax_regression.hpp"

namespace fewshot {

inline constexpr double kGradCheckEpsilon = 1e-5;

// Compares `analytic` against central differences of `loss` obtained by
// nudging each entry of `params` in place (restored afterwards). Returns
// max |g_a - g_n| / (|g_a| + |g_n| + 1e-12).
double max_relative_gradient_error(const ParamBlocks& params, const ConstParamBlocks& analytic,
                                   const std::function<double()>& loss, double eps = kGradCheckEpsilon);

// Per-family checks; dropout is disabled.
double grad_check(LstmParams params, const WindowSample& sample, double eps = kGradCheckEpsilon);
double grad_check(MlpParams params, const Eigen::VectorXd& x, int label, double eps = kGradCheckEpsilon);
double grad_check(SoftmaxRegressionParams params, const Eigen::MatrixXd& X, const std::vector<int>& targets,
                  double l2, double eps = kGradCheckEpsilon);

}  // namespace fewshot
