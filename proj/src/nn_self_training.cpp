#include "fewshot/self_training.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace fewshot {

Neighbor nearest_neighbor(const std::vector<Eigen::VectorXd>& pool, const Eigen::VectorXd& x) {
  if (pool.empty()) throw std::invalid_argument("nearest_neighbor: empty pool");
  Neighbor best{0, std::numeric_limits<double>::infinity()};
  double best_sq = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const double sq = (pool[i] - x).squaredNorm();
    if (sq < best_sq) {
      best_sq = sq;
      best.index = i;
    }
  }
  best.distance = std::sqrt(best_sq);
  return best;
}

double min_pairwise_distance(const std::vector<Eigen::VectorXd>& pool) {
  double best_sq = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pool.size(); ++i)
    for (std::size_t j = i + 1; j < pool.size(); ++j) best_sq = std::min(best_sq, (pool[i] - pool[j]).squaredNorm());
  return std::sqrt(best_sq);
}

NnSsState ss_init(const std::vector<WindowSample>& source_windows) {
  NnSsState state;
  for (const auto& w : source_windows) {
    if (!is_valid_label(w.y)) throw std::invalid_argument("ss_init: label outside {1..4}");
    state.pools[static_cast<std::size_t>(w.y - 1)].push_back(flatten_window(w.x));
  }
  std::string missing;
  for (int c = 0; c < kNumClasses; ++c) {
    if (state.pools[static_cast<std::size_t>(c)].empty()) missing += (missing.empty() ? "" : ", ") + std::to_string(c + 1);
  }
  if (!missing.empty()) throw std::invalid_argument("ss_init: source lacks classes {" + missing + "}");
  for (int c = 0; c < kNumClasses; ++c) {
    state.min_intra_distance[static_cast<std::size_t>(c)] = min_pairwise_distance(state.pools[static_cast<std::size_t>(c)]);
  }
  return state;
}

std::vector<int> ss_classify_stream(NnSsState& state, const std::vector<TestWindow>& test_windows) {
  std::vector<int> out;
  out.reserve(test_windows.size());
  for (const auto& w : test_windows) {
    const Eigen::VectorXd x = flatten_window(w.x);
    std::size_t best_class = 0;
    double best_distance = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < state.pools.size(); ++c) {
      const Neighbor nb = nearest_neighbor(state.pools[c], x);
      if (nb.distance < best_distance) {
        best_distance = nb.distance;
        best_class = c;
      }
    }
    out.push_back(static_cast<int>(best_class) + 1);
    if (best_distance < state.min_intra_distance[best_class]) {
      // Distances from the new member to the pool are all >= its nearest one.
      state.pools[best_class].push_back(x);
      state.min_intra_distance[best_class] = std::min(state.min_intra_distance[best_class], best_distance);
    }
  }
  return out;
}

}  // namespace fewshot
