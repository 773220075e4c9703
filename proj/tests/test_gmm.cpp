#include <cmath>
#include <numbers>

#include "doctest.h"
#include "fewshot/gmm.hpp"
#include "fewshot/rng.hpp"
#include "test_support.hpp"

using namespace fewshot;

namespace {

// Direct evaluation of the diagonal Gaussian mixture density, no log-sum-exp.
double oracle_density(const GmmParams& p, const Eigen::VectorXd& x) {
  double total = 0.0;
  for (int c = 0; c < p.k(); ++c) {
    double dens = p.weights[c];
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      const double v = p.variances(c, j);
      const double d = x[j] - p.means(c, j);
      dens *= std::exp(-0.5 * d * d / v) / std::sqrt(2.0 * std::numbers::pi * v);
    }
    total += dens;
  }
  return total;
}

GmmParams two_component(double a, double b, Eigen::Index p = 1) {
  GmmParams g;
  g.weights = Eigen::VectorXd::Constant(2, 0.5);
  g.means = Eigen::MatrixXd(2, p);
  g.means.row(0).setConstant(a);
  g.means.row(1).setConstant(b);
  g.variances = Eigen::MatrixXd::Ones(2, p);
  return g;
}

Eigen::MatrixXd bimodal(int n_each, std::uint64_t seed, std::vector<int>* truth = nullptr) {
  Rng rng(seed);
  Eigen::MatrixXd X(2 * n_each, 1);
  for (int i = 0; i < 2 * n_each; ++i) {
    const bool hi = i % 2 == 1;
    X(i, 0) = (hi ? 5.0 : -5.0) + standard_normal(rng);
    if (truth) truth->push_back(hi ? 1 : 0);
  }
  return X;
}

}  // namespace

TEST_CASE("gmm_fit recovers separated means") {
  const auto X = bimodal(100, 17);
  const auto fit = gmm_fit(X, {.k = 2, .max_iter = 200, .tol = 1e-6, .seed = 5});
  const double lo = std::min(fit.params.means(0, 0), fit.params.means(1, 0));
  const double hi = std::max(fit.params.means(0, 0), fit.params.means(1, 0));
  CHECK(std::abs(lo + 5.0) < 0.3);
  CHECK(std::abs(hi - 5.0) < 0.3);
  CHECK(fit.params.weights.sum() == doctest::Approx(1.0));
  CHECK(fit.converged);
}

TEST_CASE("gmm_fit with one component is the closed-form estimate") {
  Rng rng(2);
  const auto X = fewshot::testing::random_matrix(50, 3, rng, 2.0);
  const auto fit = gmm_fit(X, {.k = 1, .seed = 0});
  const Eigen::RowVectorXd mean = X.colwise().mean();
  const Eigen::RowVectorXd var = (X.rowwise() - mean).array().square().colwise().mean();
  CHECK((fit.params.means.row(0) - mean).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((fit.params.variances.row(0) - var).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(fit.params.weights[0] == doctest::Approx(1.0));
}

TEST_CASE("gmm_fit on identical points engages the variance floor") {
  const Eigen::MatrixXd X = Eigen::MatrixXd::Constant(10, 2, 3.25);
  const auto fit = gmm_fit(X, {.k = 2, .seed = 9});
  CHECK(fit.params.variances.allFinite());
  CHECK(fit.params.means.allFinite());
  CHECK(fit.params.weights.allFinite());
  CHECK(fit.params.variances.minCoeff() >= kGmmVarianceFloor);
  CHECK(std::isfinite(gmm_log_likelihood(fit.params, X)));
}

TEST_CASE("gmm_fit errors") {
  CHECK_THROWS_AS(gmm_fit(Eigen::MatrixXd::Zero(1, 2), {.k = 2}), std::invalid_argument);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(5, 2);
  bad(3, 1) = std::nan("");
  CHECK_THROWS_AS(gmm_fit(bad, {.k = 2}), std::invalid_argument);
  bad(3, 1) = INFINITY;
  CHECK_THROWS_AS(gmm_fit(bad, {.k = 2}), std::invalid_argument);
}

TEST_CASE("EM log-likelihood trace is nondecreasing") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    Rng rng(1000 + seed);
    const Eigen::Index p = 1 + static_cast<Eigen::Index>(seed % 5);
    const int n = 30 + static_cast<int>(seed * 7);
    Eigen::MatrixXd X = fewshot::testing::random_matrix(n, p, rng);
    for (int i = 0; i < n / 3; ++i) X.row(i).array() += 3.0;
    const int k = 2 + static_cast<int>(seed % 3);
    const auto fit = gmm_fit(X, {.k = k, .max_iter = 100, .tol = 0.0, .seed = seed});
    REQUIRE(fit.log_likelihood_trace.size() >= 2);
    for (std::size_t i = 1; i < fit.log_likelihood_trace.size(); ++i)
      CHECK(fit.log_likelihood_trace[i] >= fit.log_likelihood_trace[i - 1] - 1e-9);
    // The trace value agrees with direct evaluation of the returned model.
    const double final_ll = gmm_log_likelihood(fit.params, X);
    CHECK(final_ll >= fit.log_likelihood_trace.back() - 1e-9);
  }
}

TEST_CASE("gmm_fit is deterministic") {
  Rng rng(4);
  const auto X = fewshot::testing::random_matrix(80, 4, rng);
  const auto a = gmm_fit(X, {.k = 3, .seed = 77});
  const auto b = gmm_fit(X, {.k = 3, .seed = 77});
  CHECK(a.params.means == b.params.means);
  CHECK(a.params.variances == b.params.variances);
  CHECK(a.params.weights == b.params.weights);
  CHECK(a.log_likelihood_trace == b.log_likelihood_trace);
}

TEST_CASE("gmm_posterior") {
  const auto g = two_component(-5.0, 5.0);
  Eigen::VectorXd x(1);
  x << -5.0;
  const auto r = gmm_posterior(g, x);
  // Oracle: ratio of component densities.
  const double d0 = std::exp(-0.0), d1 = std::exp(-0.5 * 100.0);
  CHECK(r[0] == doctest::Approx(d0 / (d0 + d1)).epsilon(1e-12));
  CHECK(r[0] > 0.99);

  x << 0.0;
  const auto mid = gmm_posterior(g, x);
  CHECK(std::abs(mid[0] - 0.5) < 1e-6);
  CHECK(std::abs(mid[1] - 0.5) < 1e-6);

  GmmParams one;
  one.weights = Eigen::VectorXd::Ones(1);
  one.means = Eigen::MatrixXd::Zero(1, 1);
  one.variances = Eigen::MatrixXd::Ones(1, 1);
  x << 123.0;
  CHECK(gmm_posterior(one, x)[0] == 1.0);

  CHECK_THROWS_AS(gmm_posterior(g, Eigen::VectorXd::Zero(2)), std::invalid_argument);

  SUBCASE("far from both components stays normalized") {
    x << 1e4;
    const auto far = gmm_posterior(g, x);
    CHECK(far.allFinite());
    CHECK(far.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(far[1] == doctest::Approx(1.0));
  }
}

TEST_CASE("posteriors sum to one and follow component relabeling") {
  Rng rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    GmmParams g;
    const int k = 2 + trial % 3;
    const Eigen::Index p = 3;
    g.weights = Eigen::VectorXd(k);
    for (int c = 0; c < k; ++c) g.weights[c] = 0.1 + uniform01(rng);
    g.weights /= g.weights.sum();
    g.means = fewshot::testing::random_matrix(k, p, rng, 3.0);
    g.variances = fewshot::testing::random_matrix(k, p, rng).array().square() + 0.1;

    const Eigen::VectorXd x = fewshot::testing::random_matrix(p, 1, rng, 3.0);
    const auto r = gmm_posterior(g, x);
    CHECK(r.minCoeff() >= 0.0);
    CHECK(std::abs(r.sum() - 1.0) < 1e-9);

    // Oracle posterior via direct density products.
    const double total = oracle_density(g, x);
    for (int c = 0; c < k; ++c) {
      GmmParams single = g;
      single.weights.setZero();
      single.weights[c] = g.weights[c];
      CHECK(r[c] == doctest::Approx(oracle_density(single, x) / total).epsilon(1e-9));
    }

    // Reverse the component order; responsibilities reverse with it.
    GmmParams rev = g;
    rev.weights = g.weights.reverse();
    rev.means = g.means.colwise().reverse();
    rev.variances = g.variances.colwise().reverse();
    const auto rr = gmm_posterior(rev, x);
    for (int c = 0; c < k; ++c) CHECK(rr[c] == doctest::Approx(r[k - 1 - c]).epsilon(1e-12));
  }
}

TEST_CASE("gmm_assign") {
  std::vector<int> truth;
  const auto X = bimodal(150, 23, &truth);
  const auto fit = gmm_fit(X, {.k = 2, .seed = 3});
  const auto ids = gmm_assign(fit.params, X);
  // Components may come back in either order.
  int same = 0;
  for (std::size_t i = 0; i < ids.size(); ++i) same += ids[i] == truth[i];
  const int matched = std::max(same, static_cast<int>(ids.size()) - same);
  CHECK(matched > 0.95 * static_cast<double>(ids.size()));

  GmmParams one;
  one.weights = Eigen::VectorXd::Ones(1);
  one.means = Eigen::MatrixXd::Zero(1, 2);
  one.variances = Eigen::MatrixXd::Ones(1, 2);
  CHECK(gmm_assign(one, Eigen::MatrixXd::Constant(1, 2, 4.0)) == std::vector<int>{0});

  const auto g = two_component(-1.0, 1.0);
  CHECK(gmm_assign(g, Eigen::MatrixXd::Zero(1, 1)) == std::vector<int>{0});
  const auto twins = two_component(2.0, 2.0);
  CHECK(gmm_assign(twins, Eigen::MatrixXd::Constant(3, 1, 7.0)) == std::vector<int>{0, 0, 0});
}

TEST_CASE("gmm_log_likelihood") {
  GmmParams one;
  const Eigen::Index p = 4;
  one.weights = Eigen::VectorXd::Ones(1);
  one.means = Eigen::MatrixXd::Constant(1, p, 1.5);
  one.variances = Eigen::MatrixXd::Ones(1, p);
  CHECK(gmm_log_likelihood(one, one.means) ==
        doctest::Approx(-0.5 * static_cast<double>(p) * std::log(2.0 * std::numbers::pi)));

  Rng rng(6);
  const auto g = two_component(-1.0, 2.0, 2);
  const auto X = fewshot::testing::random_matrix(20, 2, rng);
  double oracle = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) oracle += std::log(oracle_density(g, X.row(i).transpose()));
  CHECK(gmm_log_likelihood(g, X) == doctest::Approx(oracle).epsilon(1e-12));

  Eigen::MatrixXd with_outlier(X.rows() + 1, 2);
  with_outlier << X, Eigen::RowVector2d(40.0, -40.0);
  const double avg = gmm_log_likelihood(g, X) / static_cast<double>(X.rows());
  const double avg_out = gmm_log_likelihood(g, with_outlier) / static_cast<double>(with_outlier.rows());
  CHECK(avg_out < avg);

  Eigen::MatrixXd bad = X;
  bad(0, 0) = std::nan("");
  CHECK_THROWS_AS(gmm_log_likelihood(g, bad), std::invalid_argument);
}
