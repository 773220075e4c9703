#include "fewshot/experiment.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <map>
#include <set>
#include <stdexcept>

#include "fewshot/adaboost.hpp"
#include "fewshot/log.hpp"
#include "fewshot/lstm.hpp"
#include "fewshot/mlp.hpp"
#include "fewshot/rng.hpp"
#include "fewshot/self_training.hpp"
#include "fewshot/softmax_regression.hpp"

namespace fewshot {

std::string method_name(Method m) {
  switch (m) {
    case Method::kOurs: return "ours";
    case Method::kLr: return "lr";
    case Method::kAdaBoost: return "adaboost";
    case Method::kSs: return "ss";
    case Method::kDnn: return "dnn";
    case Method::kLstm: return "lstm";
  }
  throw std::logic_error("unhandled method");
}

Method method_from_name(const std::string& name) {
  for (Method m : all_methods())
    if (method_name(m) == name) return m;
  throw std::invalid_argument("unknown method '" + name + "' (expected ours, lr, adaboost, ss, dnn or lstm)");
}

const std::vector<Method>& all_methods() {
  static const std::vector<Method> kAll = {Method::kLr,  Method::kAdaBoost, Method::kSs,
                                           Method::kDnn, Method::kLstm,     Method::kOurs};
  return kAll;
}

PipelineConfig ExperimentConfig::pipeline_config() const {
  PipelineConfig pc;
  pc.k = k;
  pc.train = train;
  pc.gate_l2 = gate_l2;
  return pc;
}

namespace {

std::vector<std::filesystem::path> paths_from_json(const Json& j) {
  if (j.is_string()) return {j.get<std::string>()};
  std::vector<std::filesystem::path> out;
  for (const auto& p : j) out.emplace_back(p.get<std::string>());
  return out;
}

Json paths_to_json(const std::vector<std::filesystem::path>& paths) {
  Json out = Json::array();
  for (const auto& p : paths) out.push_back(p.string());
  return out;
}

Json selection_to_json(const SelectionReport& r) {
  return {{"run_seeds", r.run_seeds},           {"shot_accuracies", r.shot_accuracies},
          {"selected_run", r.selected_run},     {"eval_seeds", r.eval_seeds},
          {"test_accuracies", r.test_accuracies}, {"mean_test_accuracy", r.mean_test_accuracy}};
}

SelectionReport selection_from_json(const Json& j) {
  SelectionReport r;
  r.run_seeds = j.at("run_seeds").get<std::vector<std::uint64_t>>();
  r.shot_accuracies = j.at("shot_accuracies").get<std::vector<double>>();
  r.selected_run = j.at("selected_run").get<int>();
  r.eval_seeds = j.at("eval_seeds").get<std::vector<std::uint64_t>>();
  r.test_accuracies = j.at("test_accuracies").get<std::vector<double>>();
  r.mean_test_accuracy = j.at("mean_test_accuracy").get<double>();
  return r;
}

std::vector<WindowSample> concat(const std::vector<WindowSample>& a, const std::vector<WindowSample>& b) {
  std::vector<WindowSample> out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

// Reorders the target's columns to the source's order.
SequenceDataset align_columns(const SequenceDataset& ds, const std::vector<std::string>& names) {
  if (ds.feature_names == names) return ds;
  std::vector<Eigen::Index> idx;
  for (const auto& n : names) {
    const auto it = std::find(ds.feature_names.begin(), ds.feature_names.end(), n);
    if (it == ds.feature_names.end()) {
      throw DataError(ds.name + ": missing feature column '" + n + "' present in the source");
    }
    idx.push_back(static_cast<Eigen::Index>(it - ds.feature_names.begin()));
  }
  if (ds.feature_names.size() != names.size()) {
    log_warn(ds.name + ": extra feature columns ignored to match the source layout");
  }
  SequenceDataset out;
  out.name = ds.name;
  out.feature_names = names;
  for (const auto& f : ds.frames) {
    SensorFrame g{f.t, Eigen::VectorXd(static_cast<Eigen::Index>(idx.size())), f.label};
    for (std::size_t j = 0; j < idx.size(); ++j) g.features[static_cast<Eigen::Index>(j)] = f.features[idx[j]];
    out.frames.push_back(std::move(g));
  }
  return out;
}

}  // namespace

ExperimentConfig experiment_config_from_json(const Json& j) {
  ExperimentConfig c;
  c.name = j.value("name", c.name);
  if (j.contains("source")) c.source = paths_from_json(j.at("source"));
  if (j.contains("target")) c.target = paths_from_json(j.at("target"));
  if (j.contains("method")) c.method = method_from_name(j.at("method").get<std::string>());
  c.k = j.value("k", c.k);
  c.per_class = j.value("per_class", c.per_class);
  c.runs = j.value("runs", c.runs);
  c.evals = j.value("evals", c.evals);
  if (j.contains("eval_mode")) {
    const auto mode = j.at("eval_mode").get<std::string>();
    if (mode == "refit") {
      c.eval_mode = EvalMode::kRefit;
    } else if (mode == "fixed") {
      c.eval_mode = EvalMode::kFixed;
    } else {
      throw std::invalid_argument("eval_mode must be 'refit' or 'fixed'");
    }
  }
  c.seed = j.value("seed", c.seed);
  if (j.contains("output")) c.output = j.at("output").get<std::string>();
  c.standardize = j.value("standardize", c.standardize);
  c.label_column = j.value("label_column", c.label_column);
  c.ignore_columns = j.value("ignore_columns", c.ignore_columns);
  c.drop = j.value("drop", c.drop);
  if (j.contains("train")) {
    const auto& t = j.at("train");
    c.train.epochs = t.value("epochs", c.train.epochs);
    c.train.dropout = t.value("dropout", c.train.dropout);
    c.train.learning_rate = t.value("learning_rate", c.train.learning_rate);
    c.train.batch_size = t.value("batch_size", c.train.batch_size);
  }
  c.adaboost_estimators = j.value("adaboost_estimators", c.adaboost_estimators);
  c.dnn_hidden = j.value("dnn_hidden", c.dnn_hidden);
  c.lr_l2 = j.value("lr_l2", c.lr_l2);
  c.lr_max_iter = j.value("lr_max_iter", c.lr_max_iter);
  c.gate_l2 = j.value("gate_l2", c.gate_l2);
  c.train.validate();
  if (c.k < 1) throw std::invalid_argument("k must be >= 1");
  if (c.per_class < 1) throw std::invalid_argument("per_class must be >= 1");
  if (c.runs < 1 || c.evals < 0) throw std::invalid_argument("runs must be >= 1 and evals >= 0");
  return c;
}

Json to_json(const ExperimentConfig& c) {
  return {{"name", c.name},
          {"source", paths_to_json(c.source)},
          {"target", paths_to_json(c.target)},
          {"method", method_name(c.method)},
          {"k", c.k},
          {"per_class", c.per_class},
          {"runs", c.runs},
          {"evals", c.evals},
          {"eval_mode", c.eval_mode == EvalMode::kRefit ? "refit" : "fixed"},
          {"seed", c.seed},
          {"output", c.output.string()},
          {"standardize", c.standardize},
          {"label_column", c.label_column},
          {"ignore_columns", c.ignore_columns},
          {"drop", c.drop},
          {"train",
           {{"epochs", c.train.epochs},
            {"dropout", c.train.dropout},
            {"learning_rate", c.train.learning_rate},
            {"batch_size", c.train.batch_size}}},
          {"adaboost_estimators", c.adaboost_estimators},
          {"dnn_hidden", c.dnn_hidden},
          {"lr_l2", c.lr_l2},
          {"lr_max_iter", c.lr_max_iter},
          {"gate_l2", c.gate_l2}};
}

Json to_json(const ExperimentResult& r) {
  Json rows = Json::array();
  for (const auto& t : r.per_target) {
    Json row = {{"target", t.target},
                {"accuracy", t.accuracy},
                {"macro_accuracy", t.macro_accuracy},
                {"n_test", t.n_test},
                {"n_shots", t.n_shots}};
    if (t.selection) row["selection"] = selection_to_json(*t.selection);
    rows.push_back(std::move(row));
  }
  return {{"name", r.name},           {"method", r.method},           {"per_target", rows},
          {"pair_mean", r.pair_mean}, {"overall_mean", r.overall_mean}, {"wall_seconds", r.wall_seconds},
          {"config", r.config}};
}

ExperimentResult experiment_result_from_json(const Json& j) {
  ExperimentResult r;
  r.name = j.at("name").get<std::string>();
  r.method = j.at("method").get<std::string>();
  for (const auto& row : j.at("per_target")) {
    TargetFileResult t;
    t.target = row.at("target").get<std::string>();
    t.accuracy = row.at("accuracy").get<double>();
    t.macro_accuracy = row.value("macro_accuracy", 0.0);
    t.n_test = row.value("n_test", std::size_t{0});
    t.n_shots = row.value("n_shots", std::size_t{0});
    if (row.contains("selection")) t.selection = selection_from_json(row.at("selection"));
    r.per_target.push_back(std::move(t));
  }
  r.pair_mean = j.at("pair_mean").get<double>();
  r.overall_mean = j.at("overall_mean").get<double>();
  r.wall_seconds = j.value("wall_seconds", 0.0);
  r.config = j.value("config", Json::object());
  return r;
}

double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels) {
  if (predictions.size() != labels.size()) throw std::invalid_argument("accuracy: length mismatch");
  if (labels.empty()) throw std::invalid_argument("accuracy: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += predictions[i] == labels[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

double macro_accuracy(const std::vector<int>& predictions, const std::vector<int>& labels) {
  if (predictions.size() != labels.size()) throw std::invalid_argument("macro_accuracy: length mismatch");
  if (labels.empty()) throw std::invalid_argument("macro_accuracy: empty input");
  std::map<int, std::pair<std::size_t, std::size_t>> per_class;  // hits, total
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto& [hits, total] = per_class[labels[i]];
    hits += predictions[i] == labels[i] ? 1 : 0;
    ++total;
  }
  double sum = 0.0;
  for (const auto& [label, ht] : per_class) sum += static_cast<double>(ht.first) / static_cast<double>(ht.second);
  return sum / static_cast<double>(per_class.size());
}

CellOutcome run_cell(const ExperimentConfig& config, const std::vector<WindowSample>& source,
                     const FewShotSplit& split, std::uint64_t seed) {
  const auto& test = split.test_inputs;
  CellOutcome out;
  auto score = [&split](const std::vector<int>& predictions) { return accuracy(predictions, split.test_labels); };

  TrainConfig train = config.train;
  train.seed = seed;
  switch (config.method) {
    case Method::kOurs: {
      SelectionOptions sel{config.runs, config.evals, config.eval_mode};
      auto fit = fit_selected(source, split.shots, config.pipeline_config(), sel, seed,
                              [&](const HierarchicalModel& m) { return score(predict_all(m, test)); });
      out.predictions = predict_all(fit.model, test);
      out.model = to_json(fit.model);
      out.selection = fit.report;
      break;
    }
    case Method::kLstm: {
      const auto params = lstm_train(concat(source, split.shots), train).params;
      for (const auto& w : test) out.predictions.push_back(lstm_predict(params, w.x));
      out.model = to_json(params);
      break;
    }
    case Method::kDnn: {
      const auto training = concat(source, split.shots);
      const auto params = mlp_train(flatten_windows(training), labels_of(training), train, config.dnn_hidden).params;
      for (const auto& w : test) {
        const Eigen::VectorXd p = mlp_predict(params, flatten_window(w.x));
        Eigen::Index best = 0;
        for (Eigen::Index c = 1; c < p.size(); ++c)
          if (p[c] > p[best]) best = c;
        out.predictions.push_back(static_cast<int>(best) + 1);
      }
      out.model = to_json(params);
      break;
    }
    case Method::kLr: {
      const auto training = concat(source, split.shots);
      std::vector<int> targets;
      for (const auto& w : training) targets.push_back(w.y - 1);
      const auto params =
          softmax_train(flatten_windows(training), targets, {kNumClasses, config.lr_l2, config.lr_max_iter, 1e-6}).params;
      for (const auto& w : test) out.predictions.push_back(softmax_argmax(params, flatten_window(w.x)) + 1);
      out.model = to_json(params);
      break;
    }
    case Method::kAdaBoost: {
      const auto training = concat(source, split.shots);
      const auto model = adaboost_train(flatten_windows(training), labels_of(training), config.adaboost_estimators);
      for (const auto& w : test) out.predictions.push_back(adaboost_predict(model, flatten_window(w.x)));
      out.model = to_json(model);
      break;
    }
    case Method::kSs: {
      NnSsState state = ss_init(source);
      out.predictions = ss_classify_stream(state, test);
      out.model = to_json(state);
      break;
    }
  }
  if (!split.test_labels.empty()) {
    const bool refit_scores = out.selection && !out.selection->test_accuracies.empty();
    out.accuracy = refit_scores ? out.selection->mean_test_accuracy : score(out.predictions);
    out.macro_accuracy = macro_accuracy(out.predictions, split.test_labels);
  }
  return out;
}

PreparedData prepare_data(const ExperimentConfig& config, const std::vector<SequenceDataset>& source,
                          const std::vector<SequenceDataset>& target) {
  if (source.empty()) throw std::invalid_argument("experiment: no source datasets");
  if (target.empty()) throw std::invalid_argument("experiment: no target datasets");
  std::vector<SequenceDataset> src;
  for (const auto& ds : source) src.push_back(harmonize(ds, config.drop));
  const auto names = src.front().feature_names;
  for (auto& ds : src) ds = align_columns(ds, names);
  std::vector<SequenceDataset> tgt;
  for (const auto& ds : target) tgt.push_back(align_columns(harmonize(ds, config.drop), names));

  PreparedData data;
  if (config.standardize) {
    data.stats = fit_standardizer(src);
    for (auto& ds : src) ds = apply_standardizer(ds, *data.stats);
    for (auto& ds : tgt) ds = apply_standardizer(ds, *data.stats);
  }
  // Windows never straddle two files.
  for (const auto& ds : src) {
    const auto w = make_windows(ds);
    data.source_windows.insert(data.source_windows.end(), w.begin(), w.end());
  }
  data.targets = std::move(tgt);
  return data;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const std::vector<SequenceDataset>& source,
                                const std::vector<SequenceDataset>& target) {
  const auto start = std::chrono::steady_clock::now();
  const PreparedData data = prepare_data(config, source, target);

  ExperimentResult result;
  result.name = config.name;
  result.method = method_name(config.method);
  result.config = to_json(config);
  for (std::size_t i = 0; i < data.targets.size(); ++i) {
    const auto windows = make_windows(data.targets[i]);
    const FewShotSplit split = sample_few_shot(windows, config.per_class, derive_seed(config.seed, 10'000 + i));
    if (split.test_inputs.empty()) throw std::runtime_error(data.targets[i].name + ": no test windows left after the few-shot draw");
    const CellOutcome cell = run_cell(config, data.source_windows, split, config.seed);
    TargetFileResult row;
    row.target = data.targets[i].name;
    row.accuracy = cell.accuracy;
    row.macro_accuracy = cell.macro_accuracy;
    row.n_test = split.test_inputs.size();
    row.n_shots = split.shots.size();
    row.selection = cell.selection;
    log_info(result.name + " [" + result.method + "] " + row.target + ": accuracy " + std::to_string(row.accuracy));
    result.per_target.push_back(std::move(row));
  }
  double sum = 0.0;
  for (const auto& r : result.per_target) sum += r.accuracy;
  result.pair_mean = sum / static_cast<double>(result.per_target.size());
  result.overall_mean = result.pair_mean;
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  CsvOptions csv{config.label_column, config.ignore_columns};
  std::vector<SequenceDataset> source;
  for (const auto& p : config.source) {
    auto part = load_csv_path(p, csv);
    source.insert(source.end(), part.begin(), part.end());
  }
  std::vector<SequenceDataset> target;
  for (const auto& p : config.target) {
    auto part = load_csv_path(p, csv);
    target.insert(target.end(), part.begin(), part.end());
  }
  return run_experiment(config, source, target);
}

std::vector<ExperimentConfig> cross_dataset_grid(const std::filesystem::path& root, const ExperimentConfig& base,
                                                 const std::vector<Method>& methods) {
  const std::array<std::filesystem::path, 3> dirs = {root / "dataset1", root / "dataset2", root / "dataset3"};
  std::array<std::vector<std::filesystem::path>, 3> files;
  for (std::size_t i = 0; i < dirs.size(); ++i) files[i] = list_csv_files(dirs[i]);

  auto all_of = [&](std::size_t d) {
    const std::string id = std::to_string(d + 1);
    return files[d].size() == 1 ? id : id + "_{1-" + std::to_string(files[d].size()) + "}";
  };
  struct Row {
    std::string name;
    std::vector<std::filesystem::path> source;
    std::filesystem::path target;
  };
  std::vector<Row> rows;
  auto per_file = [&](std::size_t src, std::size_t tgt) {
    for (std::size_t f = 0; f < files[src].size(); ++f) {
      rows.push_back({std::to_string(src + 1) + "_{" + std::to_string(f + 1) + "}-" + all_of(tgt), {files[src][f]},
                      dirs[tgt]});
    }
  };
  auto pooled = [&](std::size_t src, std::size_t tgt) {
    rows.push_back({all_of(src) + "-" + all_of(tgt), {dirs[src]}, dirs[tgt]});
  };
  pooled(0, 1);
  per_file(0, 2);
  pooled(1, 0);
  pooled(1, 2);
  per_file(2, 0);
  pooled(2, 1);

  std::vector<ExperimentConfig> out;
  for (const auto& row : rows) {
    for (Method m : methods) {
      ExperimentConfig c = base;
      c.name = row.name;
      c.source = row.source;
      c.target = {row.target};
      c.method = m;
      out.push_back(std::move(c));
    }
  }
  return out;
}

}  // namespace fewshot
