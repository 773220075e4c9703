#pragma once

// Cluster-expert domain adaptation:
//   1. cluster flattened source windows with a GMM,
//   2. train one LSTM expert per cluster on its source windows,
//   3. route each labeled target shot to the expert that best predicts its label,
//   4. retrain a fresh expert per cluster on its source windows plus routed shots,
//   5. fit a softmax gate from shot features to routed cluster ids,
//   6. predict by gating a window to a cluster and running that cluster's adapted expert.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fewshot/gmm.hpp"
#include "fewshot/ingest.hpp"
#include "fewshot/lstm.hpp"
#include "fewshot/optim.hpp"
#include "fewshot/softmax_regression.hpp"

namespace fewshot {

using LabelHistogram = std::array<std::size_t, kNumClasses>;  // index 0 = class 1

struct ClusterExpert {
  int cluster_id = 0;
  LstmParams expert_before;  // source windows of the cluster only
  LstmParams expert_after;   // source windows plus routed shots
  LabelHistogram source_label_histogram{};
  std::size_t source_count = 0;
  std::size_t adapted_count = 0;  // training-set size of expert_after
};

struct GateModel {
  int n_clusters = 0;
  std::optional<int> constant_cluster;  // set when every shot routed to one cluster
  SoftmaxRegressionParams params;       // unused for a constant gate

  Eigen::VectorXd probabilities(const Eigen::VectorXd& flat_window) const;
  int route(const Eigen::VectorXd& flat_window) const;
};

struct PipelineConfig {
  int k = 2;
  TrainConfig train;  // seed is overridden per expert
  int gmm_max_iter = 200;
  double gmm_tol = 1e-6;
  double gate_l2 = 1e-4;
  int gate_max_iter = 1000;
  double gate_tol = 1e-6;
};

// Windows are expected in the representation the model was trained on
// (standardized with `stats` when present).
struct HierarchicalModel {
  GmmParams gmm;
  std::vector<ClusterExpert> experts;
  GateModel gate;
  std::optional<StandardizationStats> stats;
  std::vector<int> shot_assignments;  // parallel to the shots used for fitting
  std::uint64_t seed = 0;
};

enum class ExpertStage : std::uint64_t { kSource = 1, kAdapted = 2 };

// Seed derivations used by a fit with base seed `seed`.
std::uint64_t gmm_seed(std::uint64_t seed);
std::uint64_t expert_seed(std::uint64_t seed, int cluster, ExpertStage stage);

struct SourceFit {
  GmmParams gmm;
  std::vector<int> assignments;  // cluster id per source window
  std::vector<ClusterExpert> experts;
};

SourceFit fit_source(const std::vector<WindowSample>& source, const PipelineConfig& config, std::uint64_t seed);

// Routing of one shot from each expert's class probabilities:
// the expert with the highest probability on `label` when some expert ranks
// `label` first, otherwise the cluster whose source histogram holds `label`
// most often. Ties go to the lower cluster id.
int route_shot(const std::vector<Eigen::VectorXd>& expert_probabilities,
               const std::vector<LabelHistogram>& histograms, int label);

std::vector<int> route_few_shot(const std::vector<ClusterExpert>& experts, const std::vector<WindowSample>& shots);

std::vector<std::vector<WindowSample>> group_by_cluster(const std::vector<WindowSample>& windows,
                                                        const std::vector<int>& assignments, int k);

void adapt_experts(std::vector<ClusterExpert>& experts,
                   const std::vector<std::vector<WindowSample>>& source_by_cluster,
                   const std::vector<WindowSample>& shots, const std::vector<int>& assignments,
                   const PipelineConfig& config, std::uint64_t seed);

GateModel fit_gate(const std::vector<WindowSample>& shots, const std::vector<int>& assignments, int n_clusters,
                   const PipelineConfig& config);

HierarchicalModel fit_hierarchical(const std::vector<WindowSample>& source, const std::vector<WindowSample>& shots,
                                   const PipelineConfig& config, std::uint64_t seed);

int predict(const HierarchicalModel& model, const Eigen::MatrixXd& window);
std::vector<int> predict_all(const HierarchicalModel& model, const std::vector<TestWindow>& windows);

double shot_accuracy(const HierarchicalModel& model, const std::vector<WindowSample>& shots);

enum class EvalMode {
  kRefit,  // each evaluation refits with a fresh seed
  kFixed,  // each evaluation scores the selected model
};

struct SelectionOptions {
  int runs = 10;
  int evals = 5;
  EvalMode eval_mode = EvalMode::kRefit;
};

struct SelectionReport {
  std::vector<std::uint64_t> run_seeds;
  std::vector<double> shot_accuracies;
  int selected_run = 0;
  std::vector<std::uint64_t> eval_seeds;
  std::vector<double> test_accuracies;
  double mean_test_accuracy = 0.0;
};

struct SelectedFit {
  HierarchicalModel model;  // the selected run
  SelectionReport report;
};

// Scores a fitted model on held-out data. Supplied by the caller so that test
// labels never enter any fitting stage.
using TestEvaluator = std::function<double(const HierarchicalModel&)>;

SelectedFit fit_selected(const std::vector<WindowSample>& source, const std::vector<WindowSample>& shots,
                         const PipelineConfig& config, const SelectionOptions& selection, std::uint64_t seed,
                         const TestEvaluator& evaluator);

// Staged objectives: source-only experts, gate, adapted experts.
struct ObjectiveValues {
  double source_experts = 0.0;   // mean CE of expert_before over N source windows
  double gate = 0.0;             // mean gate CE over the shots vs routed cluster
  double adapted_experts = 0.0;  // mean CE of expert_after over N + shots
  // The composite objective is the adapted-expert loss, attained after the
  // gate stage, which is itself fitted after the source stage.
  static constexpr std::array<const char*, 3> kStageOrder = {"source_experts", "gate", "adapted_experts"};
  double composite() const { return adapted_experts; }
};

ObjectiveValues evaluate_objective(const HierarchicalModel& model, const std::vector<WindowSample>& source,
                                   const std::vector<WindowSample>& shots);

}  // namespace fewshot
