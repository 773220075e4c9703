#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fewshot/ingest.hpp"
#include "fewshot/optim.hpp"
#include "fewshot/pipeline.hpp"
#include "fewshot/serialize.hpp"

namespace fewshot {

enum class Method { kOurs, kLr, kAdaBoost, kSs, kDnn, kLstm };

std::string method_name(Method m);
Method method_from_name(const std::string& name);
const std::vector<Method>& all_methods();

struct ExperimentConfig {
  std::string name;  // report row label, e.g. "1_{1-5}-2"
  std::vector<std::filesystem::path> source;  // files or directories, pooled
  std::vector<std::filesystem::path> target;  // every file is scored separately
  Method method = Method::kOurs;
  int k = 2;
  std::size_t per_class = 4;
  int runs = 10;
  int evals = 5;
  EvalMode eval_mode = EvalMode::kRefit;
  std::uint64_t seed = 0;
  std::filesystem::path output;
  bool standardize = true;

  std::string label_column = "label";
  std::vector<std::string> ignore_columns;
  std::vector<std::string> drop = default_drop_columns();

  TrainConfig train;
  int adaboost_estimators = 100;
  int dnn_hidden = 256;
  double lr_l2 = 1e-4;
  int lr_max_iter = 1000;
  double gate_l2 = 1e-4;

  PipelineConfig pipeline_config() const;
};

ExperimentConfig experiment_config_from_json(const Json& j);
Json to_json(const ExperimentConfig& c);

struct TargetFileResult {
  std::string target;
  double accuracy = 0.0;
  double macro_accuracy = 0.0;
  std::size_t n_test = 0;
  std::size_t n_shots = 0;
  std::optional<SelectionReport> selection;
};

struct ExperimentResult {
  std::string name;
  std::string method;
  std::vector<TargetFileResult> per_target;
  double pair_mean = 0.0;     // unweighted mean over target files
  double overall_mean = 0.0;  // unweighted mean of per-pair means
  double wall_seconds = 0.0;
  Json config;
};

Json to_json(const ExperimentResult& r);
ExperimentResult experiment_result_from_json(const Json& j);

// Fraction of exact matches.
double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels);

// Mean per-class recall over the classes present in `labels`.
double macro_accuracy(const std::vector<int>& predictions, const std::vector<int>& labels);

// One (method, target file) evaluation. Fitting sees the shots and the
// unlabeled test inputs only; `split.test_labels` is read solely for scoring.
struct CellOutcome {
  std::vector<int> predictions;
  double accuracy = 0.0;
  double macro_accuracy = 0.0;
  Json model;  // serialized fitted model
  std::optional<SelectionReport> selection;
};

CellOutcome run_cell(const ExperimentConfig& config, const std::vector<WindowSample>& source,
                     const FewShotSplit& split, std::uint64_t seed);

// Preprocessed inputs of an experiment.
struct PreparedData {
  std::vector<WindowSample> source_windows;
  std::vector<SequenceDataset> targets;  // harmonized and standardized
  std::optional<StandardizationStats> stats;
};

PreparedData prepare_data(const ExperimentConfig& config, const std::vector<SequenceDataset>& source,
                          const std::vector<SequenceDataset>& target);

ExperimentResult run_experiment(const ExperimentConfig& config, const std::vector<SequenceDataset>& source,
                                const std::vector<SequenceDataset>& target);

// Loads the configured paths and runs.
ExperimentResult run_experiment(const ExperimentConfig& config);

// The cross-dataset grid over root/dataset1, root/dataset2 and root/dataset3, one config per (row, method).
// Rows pair pooled or single source files with every file of another dataset, e.g. "1_{1-5}-2" and "3_{4}-1_{1-5}".
std::vector<ExperimentConfig> cross_dataset_grid(const std::filesystem::path& root, const ExperimentConfig& base,
                                                 const std::vector<Method>& methods);

}  // namespace fewshot
