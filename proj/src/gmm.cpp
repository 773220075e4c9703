#include "fewshot/gmm.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "fewshot/rng.hpp"

namespace fewshot {
namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr double kMinComponentMass = 1e-10;

void check_finite(const Eigen::MatrixXd& X, const char* where) {
  if (!X.allFinite()) throw std::invalid_argument(std::string(where) + ": non-finite input");
}

void check_dim(const GmmParams& params, Eigen::Index p) {
  if (params.dim() != p) {
    throw std::invalid_argument("gmm: dimension mismatch (model " + std::to_string(params.dim()) +
                                ", input " + std::to_string(p) + ")");
  }
}

double log_sum_exp(const Eigen::VectorXd& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

// log-normalizers per component: log π_k - ½ Σ_j (log 2π + log σ²_kj)
Eigen::VectorXd component_constants(const GmmParams& params) {
  const auto p = static_cast<double>(params.dim());
  Eigen::VectorXd c(params.k());
  for (int j = 0; j < params.k(); ++j) {
    c[j] = std::log(params.weights[j]) - 0.5 * (p * kLog2Pi + params.variances.row(j).array().log().sum());
  }
  return c;
}

Eigen::VectorXd log_joint_with(const GmmParams& params, const Eigen::VectorXd& constants,
                               const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  Eigen::VectorXd out(params.k());
  for (int j = 0; j < params.k(); ++j) {
    const double maha =
        ((x - params.means.row(j)).array().square() / params.variances.row(j).array()).sum();
    out[j] = constants[j] - 0.5 * maha;
  }
  return out;
}

// Farthest-point seeding: one uniformly drawn point, then repeatedly the point
// farthest from every center chosen so far (ties to the lowest row).
Eigen::MatrixXd seed_means(const Eigen::MatrixXd& X, int k, Rng& rng) {
  const Eigen::Index n = X.rows();
  Eigen::MatrixXd centers(k, X.cols());
  centers.row(0) = X.row(static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::size_t>(n))));
  Eigen::VectorXd nearest = (X.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < n; ++i) {
      if (nearest[i] > nearest[best]) best = i;
    }
    centers.row(c) = X.row(best);
    nearest = nearest.cwiseMin((X.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }
  return centers;
}

}  // namespace

Eigen::VectorXd gmm_log_joint(const GmmParams& params, const Eigen::VectorXd& x) {
  check_dim(params, x.size());
  if (!x.allFinite()) throw std::invalid_argument("gmm_log_joint: non-finite input");
  return log_joint_with(params, component_constants(params), x.transpose());
}

Eigen::VectorXd gmm_posterior(const GmmParams& params, const Eigen::VectorXd& x) {
  const Eigen::VectorXd lj = gmm_log_joint(params, x);
  const double lse = log_sum_exp(lj);
  Eigen::VectorXd r = (lj.array() - lse).exp();
  return r / r.sum();
}

std::vector<int> gmm_assign(const GmmParams& params, const Eigen::MatrixXd& X) {
  check_dim(params, X.cols());
  check_finite(X, "gmm_assign");
  const Eigen::VectorXd constants = component_constants(params);
  std::vector<int> out(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const Eigen::VectorXd lj = log_joint_with(params, constants, X.row(i));
    int best = 0;
    for (int j = 1; j < params.k(); ++j) {
      if (lj[j] > lj[best]) best = j;
    }
    out[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

double gmm_log_likelihood(const GmmParams& params, const Eigen::MatrixXd& X) {
  check_dim(params, X.cols());
  check_finite(X, "gmm_log_likelihood");
  const Eigen::VectorXd constants = component_constants(params);
  double total = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) total += log_sum_exp(log_joint_with(params, constants, X.row(i)));
  return total;
}

GmmFit gmm_fit(const Eigen::MatrixXd& X, const GmmOptions& options) {
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  const int k = options.k;
  if (k < 1) throw std::invalid_argument("gmm_fit: k must be >= 1");
  if (p < 1) throw std::invalid_argument("gmm_fit: points must have dimension >= 1");
  if (n < k) {
    throw std::invalid_argument("gmm_fit: need at least k=" + std::to_string(k) + " points, got " +
                                std::to_string(n));
  }
  check_finite(X, "gmm_fit");

  Rng rng(options.seed);
  GmmFit fit;
  GmmParams& g = fit.params;
  g.means = seed_means(X, k, rng);
  const Eigen::RowVectorXd mean = X.colwise().mean();
  const Eigen::RowVectorXd var =
      ((X.rowwise() - mean).array().square().colwise().sum() / static_cast<double>(n))
          .max(kGmmVarianceFloor)
          .matrix();
  g.variances = var.replicate(k, 1);
  g.weights = Eigen::VectorXd::Constant(k, 1.0 / k);

  Eigen::MatrixXd resp(n, k);
  for (int iter = 0;; ++iter) {
    // E-step, also yields the log-likelihood of the current parameters.
    const Eigen::VectorXd constants = component_constants(g);
    double ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::VectorXd lj = log_joint_with(g, constants, X.row(i));
      const double lse = log_sum_exp(lj);
      ll += lse;
      resp.row(i) = (lj.array() - lse).exp().transpose();
    }
    fit.log_likelihood_trace.push_back(ll);
    const std::size_t m = fit.log_likelihood_trace.size();
    if (m >= 2 && ll - fit.log_likelihood_trace[m - 2] < options.tol) {
      fit.converged = true;
      break;
    }
    if (iter >= options.max_iter) break;

    // M-step with variance floor.
    fit.iterations = iter + 1;
    for (int j = 0; j < k; ++j) {
      const double nk = resp.col(j).sum();
      if (nk < kMinComponentMass) {
        g.weights[j] = kMinComponentMass / static_cast<double>(n);
        continue;  // keep the previous mean and variance of a vanished component
      }
      g.weights[j] = nk / static_cast<double>(n);
      const Eigen::RowVectorXd mu = (resp.col(j).transpose() * X) / nk;
      const Eigen::RowVectorXd sq =
          (resp.col(j).transpose() * (X.rowwise() - mu).array().square().matrix()) / nk;
      g.means.row(j) = mu;
      g.variances.row(j) = sq.array().max(kGmmVarianceFloor).matrix();
    }
    g.weights /= g.weights.sum();
  }
  return fit;
}

}  // namespace fewshot
