#include "fewshot/adaboost.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

namespace fewshot {
namespace {

struct StumpFit {
  DecisionStump stump;
  double error = 0.0;
  bool found = false;
};

int heaviest(const std::array<double, kNumClasses>& w) {
  int best = 0;
  for (int c = 1; c < kNumClasses; ++c)
    if (w[c] > w[best]) best = c;
  return best + 1;
}

// Exhaustive search over midpoints between consecutive distinct values of every feature.
StumpFit best_stump(const Eigen::MatrixXd& X, const std::vector<int>& labels, const std::vector<double>& weights,
                    const std::vector<std::vector<Eigen::Index>>& sorted) {
  std::array<double, kNumClasses> total{};
  for (std::size_t i = 0; i < labels.size(); ++i) total[labels[i] - 1] += weights[i];
  const double total_weight = std::accumulate(total.begin(), total.end(), 0.0);

  StumpFit best;
  for (Eigen::Index f = 0; f < X.cols(); ++f) {
    const auto& order = sorted[static_cast<std::size_t>(f)];
    std::array<double, kNumClasses> left{};
    for (std::size_t pos = 0; pos + 1 < order.size(); ++pos) {
      const Eigen::Index i = order[pos];
      left[labels[static_cast<std::size_t>(i)] - 1] += weights[static_cast<std::size_t>(i)];
      const double here = X(i, f);
      const double next = X(order[pos + 1], f);
      if (!(next > here)) continue;
      std::array<double, kNumClasses> right{};
      for (int c = 0; c < kNumClasses; ++c) right[c] = total[c] - left[c];
      const int lc = heaviest(left);
      const int rc = heaviest(right);
      const double error = std::max(0.0, total_weight - left[lc - 1] - right[rc - 1]);
      if (!best.found || error < best.error) {
        best.found = true;
        best.error = error;
        best.stump = {f, here + 0.5 * (next - here), lc, rc};
      }
    }
  }
  return best;
}

}  // namespace

AdaBoostModel adaboost_train(const Eigen::MatrixXd& X, const std::vector<int>& labels, int n_estimators) {
  if (static_cast<std::size_t>(X.rows()) != labels.size()) throw std::invalid_argument("adaboost_train: label count mismatch");
  if (n_estimators < 1) throw std::invalid_argument("adaboost_train: n_estimators must be >= 1");
  std::set<int> present;
  for (int y : labels) {
    if (!is_valid_label(y)) throw std::invalid_argument("adaboost_train: label outside {1..4}");
    present.insert(y);
  }
  if (present.size() < 2) throw std::invalid_argument("adaboost_train: need at least two classes");

  AdaBoostModel model;
  model.n_classes = static_cast<int>(present.size());
  const double k = model.n_classes;
  const auto n = labels.size();

  std::array<double, kNumClasses> counts{};
  for (int y : labels) counts[y - 1] += 1.0;
  model.prior_class = heaviest(counts);

  std::vector<std::vector<Eigen::Index>> sorted(static_cast<std::size_t>(X.cols()));
  for (Eigen::Index f = 0; f < X.cols(); ++f) {
    auto& order = sorted[static_cast<std::size_t>(f)];
    order.resize(n);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return X(a, f) < X(b, f); });
  }

  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  constexpr double kPerfectError = 1e-10;
  for (int m = 0; m < n_estimators; ++m) {
    const StumpFit fit = best_stump(X, labels, w, sorted);
    if (!fit.found || fit.error >= 1.0 - 1.0 / k) break;
    const double err = std::max(fit.error, kPerfectError);
    const double alpha = std::log((1.0 - err) / err) + std::log(k - 1.0);
    model.stumps.push_back(fit.stump);
    model.alphas.push_back(alpha);
    model.weighted_errors.push_back(fit.error);
    if (fit.error <= kPerfectError) break;

    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (fit.stump.predict(X.row(static_cast<Eigen::Index>(i)).transpose()) != labels[i]) w[i] *= std::exp(alpha);
      sum += w[i];
    }
    for (auto& wi : w) wi /= sum;
  }
  return model;
}

std::array<double, kNumClasses> adaboost_votes(const AdaBoostModel& model, const Eigen::VectorXd& x) {
  std::array<double, kNumClasses> votes{};
  for (std::size_t m = 0; m < model.stumps.size(); ++m) votes[model.stumps[m].predict(x) - 1] += model.alphas[m];
  return votes;
}

int adaboost_predict(const AdaBoostModel& model, const Eigen::VectorXd& x) {
  if (model.stumps.empty()) return model.prior_class;
  return heaviest(adaboost_votes(model, x));
}

}  // namespace fewshot
