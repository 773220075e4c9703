#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "fewshot/rng.hpp"

namespace fewshot {

// Views over every trainable tensor of a model, in a fixed order.
using ParamBlocks = std::vector<std::span<double>>;
using ConstParamBlocks = std::vector<std::span<const double>>;

inline std::span<double> block(Eigen::MatrixXd& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
inline std::span<double> block(Eigen::VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
inline std::span<const double> block(const Eigen::MatrixXd& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}
inline std::span<const double> block(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

struct TrainConfig {
  int epochs = 100;
  double dropout = 0.2;
  double learning_rate = 1e-3;
  int batch_size = 32;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::filesystem::path trace_path;  // per-epoch loss CSV when non-empty

  void validate() const;
};

struct AdamState {
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_blocks(const ConstParamBlocks& blocks, const TrainConfig& config);
};

void adam_step(AdamState& state, double learning_rate, const ParamBlocks& params,
               const ConstParamBlocks& grads);

// Column-wise softmax of a (classes x batch) logit matrix.
Eigen::MatrixXd softmax_columns(const Eigen::MatrixXd& logits);

// Inverted-dropout keep mask: entries are 0 or 1/(1-rate).
Eigen::MatrixXd dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, Rng& rng);

// Uniform(-s, s) with s = 1/sqrt(fan_in).
void init_uniform(Eigen::MatrixXd& m, Eigen::Index fan_in, Rng& rng);
void init_uniform(Eigen::VectorXd& v, Eigen::Index fan_in, Rng& rng);

// -log p clamped away from zero.
double cross_entropy(double probability_of_target);

void write_loss_trace(const std::filesystem::path& path, const std::vector<double>& trace);

}  // namespace fewshot
