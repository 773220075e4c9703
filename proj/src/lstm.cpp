#include "fewshot/lstm.hpp"

#include <stdexcept>
#include <string>

#include "minibatch.hpp"

namespace fewshot {
namespace {

Eigen::ArrayXXd sigmoid(const Eigen::MatrixXd& z) { return 1.0 / (1.0 + (-z.array()).exp()); }

void check_window(const LstmParams& params, const Eigen::MatrixXd& window) {
  if (window.rows() != kWindowLength || window.cols() != params.input_dim) {
    throw std::invalid_argument("lstm: expected a " + std::to_string(kWindowLength) + "x" +
                                std::to_string(params.input_dim) + " window, got " +
                                std::to_string(window.rows()) + "x" + std::to_string(window.cols()));
  }
  if (!window.allFinite()) throw std::invalid_argument("lstm: non-finite input");
}

// Activations of one timestep for a batch; every matrix is H x B.
struct Step {
  Eigen::MatrixXd input, forget, output, candidate, cell, cell_tanh, hidden;
};

struct Forward {
  std::vector<Eigen::MatrixXd> inputs;  // per timestep, d x B
  std::vector<Step> steps;
  Eigen::MatrixXd head_input;           // masked final hidden state
  Eigen::MatrixXd probs;                // 4 x B
};

Forward run_forward(const LstmParams& p, const std::vector<const Eigen::MatrixXd*>& windows,
                    const Eigen::MatrixXd& masks) {
  const auto batch = static_cast<Eigen::Index>(windows.size());
  const Eigen::Index h = p.hidden_dim;
  Forward f;
  for (Eigen::Index t = 0; t < kWindowLength; ++t) {
    Eigen::MatrixXd x(p.input_dim, batch);
    for (Eigen::Index b = 0; b < batch; ++b) x.col(b) = windows[static_cast<std::size_t>(b)]->row(t).transpose();
    f.inputs.push_back(std::move(x));
  }
  Eigen::MatrixXd h_prev = Eigen::MatrixXd::Zero(h, batch);
  Eigen::MatrixXd c_prev = Eigen::MatrixXd::Zero(h, batch);
  for (Eigen::Index t = 0; t < kWindowLength; ++t) {
    Eigen::MatrixXd z = p.w_input * f.inputs[static_cast<std::size_t>(t)] + p.w_recurrent * h_prev;
    z.colwise() += p.b_gates;
    Step s;
    s.input = sigmoid(z.topRows(h)).matrix();
    s.forget = sigmoid(z.middleRows(h, h)).matrix();
    s.output = sigmoid(z.middleRows(2 * h, h)).matrix();
    s.candidate = z.bottomRows(h).array().tanh().matrix();
    s.cell = (s.forget.array() * c_prev.array() + s.input.array() * s.candidate.array()).matrix();
    s.cell_tanh = s.cell.array().tanh().matrix();
    s.hidden = (s.output.array() * s.cell_tanh.array()).matrix();
    h_prev = s.hidden;
    c_prev = s.cell;
    f.steps.push_back(std::move(s));
  }
  f.head_input = masks.size() == 0 ? h_prev : (h_prev.array() * masks.array()).matrix();
  Eigen::MatrixXd logits = p.w_out * f.head_input;
  logits.colwise() += p.b_out;
  f.probs = softmax_columns(logits);
  return f;
}

}  // namespace

LstmParams LstmParams::zeros(int input_dim, int hidden_dim) {
  if (input_dim < 1 || hidden_dim < 1) throw std::invalid_argument("LstmParams: dimensions must be >= 1");
  LstmParams p;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  p.w_input = Eigen::MatrixXd::Zero(4 * hidden_dim, input_dim);
  p.w_recurrent = Eigen::MatrixXd::Zero(4 * hidden_dim, hidden_dim);
  p.b_gates = Eigen::VectorXd::Zero(4 * hidden_dim);
  p.w_out = Eigen::MatrixXd::Zero(kNumClasses, hidden_dim);
  p.b_out = Eigen::VectorXd::Zero(kNumClasses);
  return p;
}

LstmParams LstmParams::random(int input_dim, Rng& rng, int hidden_dim) {
  LstmParams p = zeros(input_dim, hidden_dim);
  init_uniform(p.w_input, input_dim, rng);
  init_uniform(p.w_recurrent, hidden_dim, rng);
  init_uniform(p.b_gates, hidden_dim, rng);
  // Zero head: every class starts with equal logits.
  return p;
}

ParamBlocks LstmParams::blocks() {
  return {block(w_input), block(w_recurrent), block(b_gates), block(w_out), block(b_out)};
}

ConstParamBlocks LstmParams::blocks() const {
  return {block(w_input), block(w_recurrent), block(b_gates), block(w_out), block(b_out)};
}

Eigen::VectorXd lstm_forward(const LstmParams& params, const Eigen::MatrixXd& window,
                             const std::optional<Eigen::VectorXd>& dropout_mask) {
  check_window(params, window);
  Eigen::MatrixXd masks;
  if (dropout_mask) {
    if (dropout_mask->size() != params.hidden_dim) throw std::invalid_argument("lstm: dropout mask size mismatch");
    masks = *dropout_mask;
  }
  return run_forward(params, {&window}, masks).probs.col(0);
}

int lstm_predict(const LstmParams& params, const Eigen::MatrixXd& window) {
  const Eigen::VectorXd probs = lstm_forward(params, window);
  Eigen::Index best = 0;
  for (Eigen::Index c = 1; c < probs.size(); ++c)
    if (probs[c] > probs[best]) best = c;
  return static_cast<int>(best) + 1;
}

double lstm_loss_and_gradient(const LstmParams& p, const std::vector<const Eigen::MatrixXd*>& windows,
                              const std::vector<int>& labels, const Eigen::MatrixXd& masks,
                              LstmParams* gradient) {
  if (windows.empty() || windows.size() != labels.size()) {
    throw std::invalid_argument("lstm_loss_and_gradient: batch/label size mismatch");
  }
  for (const auto* w : windows) check_window(p, *w);
  const auto batch = static_cast<Eigen::Index>(windows.size());
  const Forward f = run_forward(p, windows, masks);

  double loss = 0.0;
  Eigen::MatrixXd d_logits = f.probs;
  for (Eigen::Index b = 0; b < batch; ++b) {
    const int y = labels[static_cast<std::size_t>(b)] - 1;
    loss += cross_entropy(f.probs(y, b));
    d_logits(y, b) -= 1.0;
  }
  loss /= static_cast<double>(batch);
  if (gradient == nullptr) return loss;

  d_logits /= static_cast<double>(batch);
  LstmParams& g = *gradient;
  g = LstmParams::zeros(p.input_dim, p.hidden_dim);
  g.w_out = d_logits * f.head_input.transpose();
  g.b_out = d_logits.rowwise().sum();

  const Eigen::Index h = p.hidden_dim;
  Eigen::MatrixXd d_hidden = p.w_out.transpose() * d_logits;
  if (masks.size() != 0) d_hidden = (d_hidden.array() * masks.array()).matrix();
  Eigen::MatrixXd d_cell = Eigen::MatrixXd::Zero(h, batch);
  for (Eigen::Index t = kWindowLength - 1; t >= 0; --t) {
    const Step& s = f.steps[static_cast<std::size_t>(t)];
    const Eigen::MatrixXd h_prev = t > 0 ? f.steps[static_cast<std::size_t>(t - 1)].hidden : Eigen::MatrixXd::Zero(h, batch);
    const Eigen::MatrixXd c_prev = t > 0 ? f.steps[static_cast<std::size_t>(t - 1)].cell : Eigen::MatrixXd::Zero(h, batch);

    d_cell.array() += d_hidden.array() * s.output.array() * (1.0 - s.cell_tanh.array().square());
    Eigen::MatrixXd dz(4 * h, batch);
    dz.topRows(h) = (d_cell.array() * s.candidate.array() * s.input.array() * (1.0 - s.input.array())).matrix();
    dz.middleRows(h, h) = (d_cell.array() * c_prev.array() * s.forget.array() * (1.0 - s.forget.array())).matrix();
    dz.middleRows(2 * h, h) =
        (d_hidden.array() * s.cell_tanh.array() * s.output.array() * (1.0 - s.output.array())).matrix();
    dz.bottomRows(h) = (d_cell.array() * s.input.array() * (1.0 - s.candidate.array().square())).matrix();

    g.w_input += dz * f.inputs[static_cast<std::size_t>(t)].transpose();
    g.w_recurrent += dz * h_prev.transpose();
    g.b_gates += dz.rowwise().sum();
    d_hidden = p.w_recurrent.transpose() * dz;
    d_cell = (d_cell.array() * s.forget.array()).matrix();
  }
  return loss;
}

double lstm_mean_loss(const LstmParams& params, const std::vector<WindowSample>& samples) {
  if (samples.empty()) throw std::invalid_argument("lstm_mean_loss: no samples");
  std::vector<const Eigen::MatrixXd*> windows;
  std::vector<int> labels;
  for (const auto& s : samples) {
    windows.push_back(&s.x);
    labels.push_back(s.y);
  }
  return lstm_loss_and_gradient(params, windows, labels, {}, nullptr);
}

LstmTrainResult lstm_train(const std::vector<WindowSample>& samples, const TrainConfig& config) {
  config.validate();
  if (samples.empty()) throw std::invalid_argument("lstm_train: empty training set");
  const auto d = static_cast<int>(samples.front().x.cols());
  for (const auto& s : samples) {
    if (!is_valid_label(s.y)) throw std::invalid_argument("lstm_train: label outside {1..4}");
  }

  Rng rng(config.seed);
  LstmTrainResult result{LstmParams::random(d, rng), {}};
  const LstmParams zero = LstmParams::zeros(d);
  result.loss_trace = detail::train_minibatch_adam(
      result.params, zero, samples.size(), config, rng,
      [&](const LstmParams& params, const std::vector<std::size_t>& idx, Rng& r, LstmParams& grad) {
        std::vector<const Eigen::MatrixXd*> windows;
        std::vector<int> labels;
        windows.reserve(idx.size());
        labels.reserve(idx.size());
        for (auto i : idx) {
          windows.push_back(&samples[i].x);
          labels.push_back(samples[i].y);
        }
        Eigen::MatrixXd masks;
        if (config.dropout > 0.0) {
          masks = dropout_mask(params.hidden_dim, static_cast<Eigen::Index>(idx.size()), config.dropout, r);
        }
        return lstm_loss_and_gradient(params, windows, labels, masks, &grad);
      });
  return result;
}

}  // namespace fewshot
