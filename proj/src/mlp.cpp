#include "fewshot/mlp.hpp"

#include <stdexcept>

#include "fewshot/ingest.hpp"
#include "minibatch.hpp"

namespace fewshot {

MlpParams MlpParams::zeros(Eigen::Index input_dim, Eigen::Index hidden) {
  if (input_dim < 1 || hidden < 1) throw std::invalid_argument("MlpParams: dimensions must be >= 1");
  return {Eigen::MatrixXd::Zero(hidden, input_dim), Eigen::VectorXd::Zero(hidden),
          Eigen::MatrixXd::Zero(hidden, hidden),    Eigen::VectorXd::Zero(hidden),
          Eigen::MatrixXd::Zero(kNumClasses, hidden), Eigen::VectorXd::Zero(kNumClasses)};
}

MlpParams MlpParams::random(Eigen::Index input_dim, Rng& rng, Eigen::Index hidden) {
  MlpParams p = zeros(input_dim, hidden);
  init_uniform(p.w1, input_dim, rng);
  init_uniform(p.b1, input_dim, rng);
  init_uniform(p.w2, hidden, rng);
  init_uniform(p.b2, hidden, rng);
  init_uniform(p.w3, hidden, rng);
  init_uniform(p.b3, hidden, rng);
  return p;
}

ParamBlocks MlpParams::blocks() { return {block(w1), block(b1), block(w2), block(b2), block(w3), block(b3)}; }

ConstParamBlocks MlpParams::blocks() const {
  return {block(w1), block(b1), block(w2), block(b2), block(w3), block(b3)};
}

namespace {

struct MlpForward {
  Eigen::MatrixXd a1, h1, a2, h2, probs;
};

MlpForward forward(const MlpParams& p, const Eigen::MatrixXd& X, const Eigen::MatrixXd& m1,
                   const Eigen::MatrixXd& m2) {
  if (X.rows() != p.input_dim()) throw std::invalid_argument("mlp: input dimension mismatch");
  if (!X.allFinite()) throw std::invalid_argument("mlp: non-finite input");
  MlpForward f;
  f.a1 = p.w1 * X;
  f.a1.colwise() += p.b1;
  f.h1 = f.a1.cwiseMax(0.0);
  if (m1.size() != 0) f.h1 = f.h1.cwiseProduct(m1);
  f.a2 = p.w2 * f.h1;
  f.a2.colwise() += p.b2;
  f.h2 = f.a2.cwiseMax(0.0);
  if (m2.size() != 0) f.h2 = f.h2.cwiseProduct(m2);
  Eigen::MatrixXd logits = p.w3 * f.h2;
  logits.colwise() += p.b3;
  f.probs = softmax_columns(logits);
  return f;
}

Eigen::MatrixXd relu_grad(const Eigen::MatrixXd& pre) { return (pre.array() > 0.0).cast<double>().matrix(); }

}  // namespace

Eigen::VectorXd mlp_predict(const MlpParams& params, const Eigen::VectorXd& x) {
  return forward(params, x, {}, {}).probs.col(0);
}

double mlp_loss_and_gradient(const MlpParams& p, const Eigen::MatrixXd& X, const std::vector<int>& labels,
                             const Eigen::MatrixXd& masks1, const Eigen::MatrixXd& masks2, MlpParams* gradient) {
  if (X.cols() == 0 || static_cast<std::size_t>(X.cols()) != labels.size()) {
    throw std::invalid_argument("mlp_loss_and_gradient: batch/label size mismatch");
  }
  const MlpForward f = forward(p, X, masks1, masks2);
  const auto batch = static_cast<double>(X.cols());
  double loss = 0.0;
  Eigen::MatrixXd d_logits = f.probs;
  for (Eigen::Index b = 0; b < X.cols(); ++b) {
    const int y = labels[static_cast<std::size_t>(b)] - 1;
    loss += cross_entropy(f.probs(y, b));
    d_logits(y, b) -= 1.0;
  }
  loss /= batch;
  if (gradient == nullptr) return loss;

  d_logits /= batch;
  MlpParams& g = *gradient;
  g.w3 = d_logits * f.h2.transpose();
  g.b3 = d_logits.rowwise().sum();
  Eigen::MatrixXd d_h2 = p.w3.transpose() * d_logits;
  if (masks2.size() != 0) d_h2 = d_h2.cwiseProduct(masks2);
  const Eigen::MatrixXd d_a2 = d_h2.cwiseProduct(relu_grad(f.a2));
  g.w2 = d_a2 * f.h1.transpose();
  g.b2 = d_a2.rowwise().sum();
  Eigen::MatrixXd d_h1 = p.w2.transpose() * d_a2;
  if (masks1.size() != 0) d_h1 = d_h1.cwiseProduct(masks1);
  const Eigen::MatrixXd d_a1 = d_h1.cwiseProduct(relu_grad(f.a1));
  g.w1 = d_a1 * X.transpose();
  g.b1 = d_a1.rowwise().sum();
  return loss;
}

MlpTrainResult mlp_train(const Eigen::MatrixXd& X, const std::vector<int>& labels, const TrainConfig& config,
                         Eigen::Index hidden) {
  config.validate();
  if (X.rows() == 0) throw std::invalid_argument("mlp_train: empty training set");
  if (static_cast<std::size_t>(X.rows()) != labels.size()) throw std::invalid_argument("mlp_train: label count mismatch");
  for (int y : labels)
    if (!is_valid_label(y)) throw std::invalid_argument("mlp_train: label outside {1..4}");

  Rng rng(config.seed);
  MlpTrainResult result{MlpParams::random(X.cols(), rng, hidden), {}};
  const MlpParams zero = MlpParams::zeros(X.cols(), hidden);
  result.loss_trace = detail::train_minibatch_adam(
      result.params, zero, static_cast<std::size_t>(X.rows()), config, rng,
      [&](const MlpParams& params, const std::vector<std::size_t>& idx, Rng& r, MlpParams& grad) {
        const auto b = static_cast<Eigen::Index>(idx.size());
        Eigen::MatrixXd batch(X.cols(), b);
        std::vector<int> y;
        y.reserve(idx.size());
        for (Eigen::Index j = 0; j < b; ++j) {
          batch.col(j) = X.row(static_cast<Eigen::Index>(idx[static_cast<std::size_t>(j)])).transpose();
          y.push_back(labels[idx[static_cast<std::size_t>(j)]]);
        }
        Eigen::MatrixXd m1;
        Eigen::MatrixXd m2;
        if (config.dropout > 0.0) {
          m1 = dropout_mask(hidden, b, config.dropout, r);
          m2 = dropout_mask(hidden, b, config.dropout, r);
        }
        return mlp_loss_and_gradient(params, batch, y, m1, m2, &grad);
      });
  return result;
}

}  // namespace fewshot
