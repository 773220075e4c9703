#pragma once

// Shuffled minibatch Adam loop shared by the LSTM and MLP trainers.

#include <cmath>
#include <numeric>
#include <utility>
#include <stdexcept>
#include <vector>

#include "fewshot/optim.hpp"

namespace fewshot::detail {

// `batch_loss(params, batch_indices, rng, grad)` fills `grad` and returns the
// batch's mean loss.
template <typename Params, typename BatchLoss>
std::vector<double> train_minibatch_adam(Params& params, const Params& zero_grad, std::size_t n,
                                         const TrainConfig& config, Rng& rng, BatchLoss&& batch_loss) {
  AdamState adam = AdamState::for_blocks(std::as_const(params).blocks(), config);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> trace;
  trace.reserve(static_cast<std::size_t>(config.epochs));
  const auto batch = static_cast<std::size_t>(config.batch_size);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_in_place(order, rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t stop = std::min(n, start + batch);
      const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                         order.begin() + static_cast<std::ptrdiff_t>(stop));
      Params grad = zero_grad;
      const double loss = batch_loss(params, idx, rng, grad);
      if (!std::isfinite(loss)) throw std::runtime_error("training diverged: non-finite loss");
      epoch_loss += loss * static_cast<double>(idx.size());
      adam_step(adam, config.learning_rate, params.blocks(), std::as_const(grad).blocks());
    }
    trace.push_back(epoch_loss / static_cast<double>(n));
  }
  if (!config.trace_path.empty()) write_loss_trace(config.trace_path, trace);
  return trace;
}

}  // namespace fewshot::detail
