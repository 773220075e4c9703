#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "fewshot/ingest.hpp"

namespace fewshot {

// Four one-class 1-NN pools that grow with confidently matched test points.
struct NnSsState {
  std::array<std::vector<Eigen::VectorXd>, kNumClasses> pools;  // index 0 = class 1
  std::array<double, kNumClasses> min_intra_distance{};         // +inf for singleton pools
};

struct Neighbor {
  std::size_t index = 0;
  double distance = 0.0;
};

// Exact Euclidean nearest member; ties to the lower index.
Neighbor nearest_neighbor(const std::vector<Eigen::VectorXd>& pool, const Eigen::VectorXd& x);

// Minimum pairwise distance within a pool, +inf below two members.
double min_pairwise_distance(const std::vector<Eigen::VectorXd>& pool);

// Groups flattened source windows by class. Every class must be present.
NnSsState ss_init(const std::vector<WindowSample>& source_windows);

// Classifies the stream in order. A point whose nearest distance is below the
// winning pool's minimum intra-class distance joins that pool.
std::vector<int> ss_classify_stream(NnSsState& state, const std::vector<TestWindow>& test_windows);

}  // namespace fewshot
