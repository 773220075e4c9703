#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace fewshot {

inline constexpr double kGmmVarianceFloor = 1e-6;

// Diagonal-covariance Gaussian mixture. Rows of `means`/`variances` are components.
struct GmmParams {
  Eigen::VectorXd weights;
  Eigen::MatrixXd means;
  Eigen::MatrixXd variances;

  int k() const { return static_cast<int>(weights.size()); }
  Eigen::Index dim() const { return means.cols(); }
};

struct GmmOptions {
  int k = 2;
  int max_iter = 200;
  double tol = 1e-6;
  std::uint64_t seed = 0;
};

struct GmmFit {
  GmmParams params;
  std::vector<double> log_likelihood_trace;  // one entry per evaluated parameter set
  int iterations = 0;
  bool converged = false;
};

// EM from farthest-point seeding. Rows of X are observations.
GmmFit gmm_fit(const Eigen::MatrixXd& X, const GmmOptions& options);

// Per-component log(π_k N(x | μ_k, Σ_k)).
Eigen::VectorXd gmm_log_joint(const GmmParams& params, const Eigen::VectorXd& x);

Eigen::VectorXd gmm_posterior(const GmmParams& params, const Eigen::VectorXd& x);

// Hard assignment; ties go to the lower component id.
std::vector<int> gmm_assign(const GmmParams& params, const Eigen::MatrixXd& X);

double gmm_log_likelihood(const GmmParams& params, const Eigen::MatrixXd& X);

}  // namespace fewshot
