#include "fewshot/pipeline.hpp"

#include <stdexcept>
#include <string>

#include "fewshot/log.hpp"
#include "fewshot/rng.hpp"

namespace fewshot {

std::uint64_t gmm_seed(std::uint64_t seed) { return derive_seed(seed, 0); }

std::uint64_t expert_seed(std::uint64_t seed, int cluster, ExpertStage stage) {
  return derive_seed(seed, static_cast<std::uint64_t>(stage) * 1000 + static_cast<std::uint64_t>(cluster));
}

Eigen::VectorXd GateModel::probabilities(const Eigen::VectorXd& flat_window) const {
  if (constant_cluster) {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(n_clusters);
    p[*constant_cluster] = 1.0;
    return p;
  }
  return softmax_predict(params, flat_window);
}

int GateModel::route(const Eigen::VectorXd& flat_window) const {
  if (constant_cluster) return *constant_cluster;
  return softmax_argmax(params, flat_window);
}

std::vector<std::vector<WindowSample>> group_by_cluster(const std::vector<WindowSample>& windows,
                                                        const std::vector<int>& assignments, int k) {
  if (windows.size() != assignments.size()) throw std::invalid_argument("group_by_cluster: size mismatch");
  std::vector<std::vector<WindowSample>> groups(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < windows.size(); ++i) groups.at(static_cast<std::size_t>(assignments[i])).push_back(windows[i]);
  return groups;
}

SourceFit fit_source(const std::vector<WindowSample>& source, const PipelineConfig& config, std::uint64_t seed) {
  if (config.k < 1) throw std::invalid_argument("fit_source: k must be >= 1");
  if (source.size() < static_cast<std::size_t>(config.k)) {
    throw std::invalid_argument("fit_source: need at least k=" + std::to_string(config.k) + " source windows");
  }
  SourceFit fit;
  const Eigen::MatrixXd X = flatten_windows(source);
  fit.gmm = gmm_fit(X, {config.k, config.gmm_max_iter, config.gmm_tol, gmm_seed(seed)}).params;
  fit.assignments = gmm_assign(fit.gmm, X);

  const auto groups = group_by_cluster(source, fit.assignments, config.k);
  for (int c = 0; c < config.k; ++c) {
    const auto& members = groups[static_cast<std::size_t>(c)];
    if (members.empty()) {
      throw std::runtime_error("fit_source: cluster " + std::to_string(c) +
                               " received no source windows; try another seed");
    }
    ClusterExpert expert;
    expert.cluster_id = c;
    expert.source_count = members.size();
    for (const auto& w : members) ++expert.source_label_histogram[static_cast<std::size_t>(w.y - 1)];
    TrainConfig tc = config.train;
    tc.seed = expert_seed(seed, c, ExpertStage::kSource);
    expert.expert_before = lstm_train(members, tc).params;
    fit.experts.push_back(std::move(expert));
  }
  return fit;
}

int route_shot(const std::vector<Eigen::VectorXd>& expert_probabilities,
               const std::vector<LabelHistogram>& histograms, int label) {
  if (expert_probabilities.empty() || expert_probabilities.size() != histograms.size()) {
    throw std::invalid_argument("route_shot: expert/histogram count mismatch");
  }
  if (!is_valid_label(label)) throw std::invalid_argument("route_shot: label outside {1..4}");
  const Eigen::Index y = label - 1;

  bool some_expert_correct = false;
  for (const auto& p : expert_probabilities) {
    Eigen::Index top = 0;
    for (Eigen::Index c = 1; c < p.size(); ++c)
      if (p[c] > p[top]) top = c;
    some_expert_correct = some_expert_correct || top == y;
  }

  int best = 0;
  if (some_expert_correct) {
    for (std::size_t k = 1; k < expert_probabilities.size(); ++k)
      if (expert_probabilities[k][y] > expert_probabilities[static_cast<std::size_t>(best)][y]) best = static_cast<int>(k);
  } else {
    for (std::size_t k = 1; k < histograms.size(); ++k)
      if (histograms[k][static_cast<std::size_t>(y)] > histograms[static_cast<std::size_t>(best)][static_cast<std::size_t>(y)])
        best = static_cast<int>(k);
  }
  return best;
}

std::vector<int> route_few_shot(const std::vector<ClusterExpert>& experts, const std::vector<WindowSample>& shots) {
  std::vector<LabelHistogram> histograms;
  for (const auto& e : experts) histograms.push_back(e.source_label_histogram);
  std::vector<int> out;
  out.reserve(shots.size());
  for (const auto& shot : shots) {
    std::vector<Eigen::VectorXd> probs;
    for (const auto& e : experts) probs.push_back(lstm_forward(e.expert_before, shot.x));
    out.push_back(route_shot(probs, histograms, shot.y));
  }
  return out;
}

void adapt_experts(std::vector<ClusterExpert>& experts,
                   const std::vector<std::vector<WindowSample>>& source_by_cluster,
                   const std::vector<WindowSample>& shots, const std::vector<int>& assignments,
                   const PipelineConfig& config, std::uint64_t seed) {
  if (shots.size() != assignments.size()) throw std::invalid_argument("adapt_experts: every shot needs a cluster");
  if (source_by_cluster.size() != experts.size()) throw std::invalid_argument("adapt_experts: cluster count mismatch");
  for (auto& expert : experts) {
    const auto c = static_cast<std::size_t>(expert.cluster_id);
    std::vector<WindowSample> training = source_by_cluster[c];
    for (std::size_t s = 0; s < shots.size(); ++s)
      if (assignments[s] == expert.cluster_id) training.push_back(shots[s]);
    expert.adapted_count = training.size();
    TrainConfig tc = config.train;
    tc.seed = expert_seed(seed, expert.cluster_id, ExpertStage::kAdapted);
    expert.expert_after = lstm_train(training, tc).params;
  }
}

GateModel fit_gate(const std::vector<WindowSample>& shots, const std::vector<int>& assignments, int n_clusters,
                   const PipelineConfig& config) {
  if (shots.empty()) throw std::invalid_argument("fit_gate: no shots");
  if (shots.size() != assignments.size()) throw std::invalid_argument("fit_gate: every shot needs a cluster");
  GateModel gate;
  gate.n_clusters = n_clusters;
  bool single = true;
  for (int a : assignments) single = single && a == assignments.front();
  if (single) {
    gate.constant_cluster = assignments.front();
    return gate;
  }
  gate.params = softmax_train(flatten_windows(shots), assignments,
                              {n_clusters, config.gate_l2, config.gate_max_iter, config.gate_tol})
                    .params;
  return gate;
}

HierarchicalModel fit_hierarchical(const std::vector<WindowSample>& source, const std::vector<WindowSample>& shots,
                                   const PipelineConfig& config, std::uint64_t seed) {
  SourceFit sf = fit_source(source, config, seed);
  HierarchicalModel model;
  model.seed = seed;
  model.gmm = std::move(sf.gmm);
  model.experts = std::move(sf.experts);
  const auto groups = group_by_cluster(source, sf.assignments, config.k);
  if (shots.empty()) {
    log_warn("fit_hierarchical: no target shots; experts retrain on source only and the gate is constant");
    adapt_experts(model.experts, groups, shots, {}, config, seed);
    model.gate.n_clusters = config.k;
    model.gate.constant_cluster = 0;
    return model;
  }
  model.shot_assignments = route_few_shot(model.experts, shots);
  adapt_experts(model.experts, groups, shots, model.shot_assignments, config, seed);
  model.gate = fit_gate(shots, model.shot_assignments, config.k, config);
  return model;
}

int predict(const HierarchicalModel& model, const Eigen::MatrixXd& window) {
  const int cluster = model.gate.route(flatten_window(window));
  return lstm_predict(model.experts.at(static_cast<std::size_t>(cluster)).expert_after, window);
}

std::vector<int> predict_all(const HierarchicalModel& model, const std::vector<TestWindow>& windows) {
  std::vector<int> out;
  out.reserve(windows.size());
  for (const auto& w : windows) out.push_back(predict(model, w.x));
  return out;
}

double shot_accuracy(const HierarchicalModel& model, const std::vector<WindowSample>& shots) {
  if (shots.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& s : shots) hits += predict(model, s.x) == s.y ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(shots.size());
}

SelectedFit fit_selected(const std::vector<WindowSample>& source, const std::vector<WindowSample>& shots,
                         const PipelineConfig& config, const SelectionOptions& selection, std::uint64_t seed,
                         const TestEvaluator& evaluator) {
  if (selection.runs < 1) throw std::invalid_argument("fit_selected: runs must be >= 1");
  if (selection.evals < 0) throw std::invalid_argument("fit_selected: evals must be >= 0");
  if (selection.evals > 0 && !evaluator) throw std::invalid_argument("fit_selected: evaluations need an evaluator");

  SelectedFit out;
  auto& report = out.report;
  std::optional<HierarchicalModel> best;
  for (int r = 0; r < selection.runs; ++r) {
    const std::uint64_t run_seed = seed + static_cast<std::uint64_t>(r);
    HierarchicalModel model = fit_hierarchical(source, shots, config, run_seed);
    const double acc = shot_accuracy(model, shots);
    report.run_seeds.push_back(run_seed);
    report.shot_accuracies.push_back(acc);
    if (!best || acc > report.shot_accuracies[static_cast<std::size_t>(report.selected_run)]) {
      report.selected_run = r;
      best = std::move(model);
    }
  }
  out.model = std::move(*best);

  for (int e = 0; e < selection.evals; ++e) {
    if (selection.eval_mode == EvalMode::kFixed) {
      report.eval_seeds.push_back(out.model.seed);
      report.test_accuracies.push_back(evaluator(out.model));
    } else {
      const std::uint64_t eval_seed = seed + static_cast<std::uint64_t>(selection.runs + e);
      report.eval_seeds.push_back(eval_seed);
      report.test_accuracies.push_back(evaluator(fit_hierarchical(source, shots, config, eval_seed)));
    }
  }
  if (!report.test_accuracies.empty()) {
    double sum = 0.0;
    for (double a : report.test_accuracies) sum += a;
    report.mean_test_accuracy = sum / static_cast<double>(report.test_accuracies.size());
  }
  return out;
}

ObjectiveValues evaluate_objective(const HierarchicalModel& model, const std::vector<WindowSample>& source,
                                   const std::vector<WindowSample>& shots) {
  if (shots.size() != model.shot_assignments.size()) {
    throw std::invalid_argument("evaluate_objective: shots do not match the model's routed shots");
  }
  ObjectiveValues v;
  const std::vector<int> source_clusters = source.empty() ? std::vector<int>{}
                                                          : gmm_assign(model.gmm, flatten_windows(source));
  double adapted_sum = 0.0;
  for (std::size_t i = 0; i < source.size(); ++i) {
    const auto& e = model.experts.at(static_cast<std::size_t>(source_clusters[i]));
    const int y = source[i].y - 1;
    v.source_experts += cross_entropy(lstm_forward(e.expert_before, source[i].x)[y]);
    adapted_sum += cross_entropy(lstm_forward(e.expert_after, source[i].x)[y]);
  }
  if (!source.empty()) v.source_experts /= static_cast<double>(source.size());

  for (std::size_t s = 0; s < shots.size(); ++s) {
    const int cluster = model.shot_assignments[s];
    v.gate += cross_entropy(model.gate.probabilities(flatten_window(shots[s].x))[cluster]);
    const auto& e = model.experts.at(static_cast<std::size_t>(cluster));
    adapted_sum += cross_entropy(lstm_forward(e.expert_after, shots[s].x)[shots[s].y - 1]);
  }
  if (!shots.empty()) v.gate /= static_cast<double>(shots.size());
  const std::size_t total = source.size() + shots.size();
  if (total > 0) v.adapted_experts = adapted_sum / static_cast<double>(total);
  return v;
}

}  // namespace fewshot
