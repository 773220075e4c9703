#include "fewshot/optim.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace fewshot {

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw std::invalid_argument("TrainConfig: dropout must be in [0, 1)");
  if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
}

AdamState AdamState::for_blocks(const ConstParamBlocks& blocks, const TrainConfig& config) {
  AdamState s;
  s.beta1 = config.beta1;
  s.beta2 = config.beta2;
  s.epsilon = config.epsilon;
  for (const auto& b : blocks) {
    s.first_moment.emplace_back(b.size(), 0.0);
    s.second_moment.emplace_back(b.size(), 0.0);
  }
  return s;
}

void adam_step(AdamState& state, double learning_rate, const ParamBlocks& params,
               const ConstParamBlocks& grads) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size()) {
    throw std::invalid_argument("adam_step: block count mismatch");
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t b = 0; b < params.size(); ++b) {
    auto& m = state.first_moment[b];
    auto& v = state.second_moment[b];
    for (std::size_t i = 0; i < params[b].size(); ++i) {
      const double g = grads[b][i];
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
      params[b][i] -= learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + state.epsilon);
    }
  }
}

Eigen::MatrixXd softmax_columns(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    const double m = logits.col(c).maxCoeff();
    out.col(c) = (logits.col(c).array() - m).exp().matrix();
    out.col(c) /= out.col(c).sum();
  }
  return out;
}

Eigen::MatrixXd dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, Rng& rng) {
  Eigen::MatrixXd mask(rows, cols);
  const double keep_scale = 1.0 / (1.0 - rate);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) mask(i, j) = uniform01(rng) < rate ? 0.0 : keep_scale;
  return mask;
}

void init_uniform(Eigen::MatrixXd& m, Eigen::Index fan_in, Rng& rng) {
  const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = uniform(rng, -s, s);
}

void init_uniform(Eigen::VectorXd& v, Eigen::Index fan_in, Rng& rng) {
  const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = uniform(rng, -s, s);
}

double cross_entropy(double probability_of_target) {
  return -std::log(std::max(probability_of_target, std::numeric_limits<double>::min()));
}

void write_loss_trace(const std::filesystem::path& path, const std::vector<double>& trace) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write loss trace: " + path.string());
  out << "epoch,loss\n";
  out.precision(17);
  for (std::size_t i = 0; i < trace.size(); ++i) out << (i + 1) << ',' << trace[i] << '\n';
}

}  // namespace fewshot
