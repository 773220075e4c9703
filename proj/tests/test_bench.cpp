#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "fewshot/experiment.hpp"
#include "fewshot/report.hpp"
#include "fewshot/serialize.hpp"
#include "fewshot/synthetic.hpp"
#include "test_support.hpp"

using namespace fewshot;
using fewshot::testing::temp_dir;

namespace {

std::array<double, 4> class_fractions(const SequenceDataset& ds) {
  std::array<double, 4> f{};
  for (const auto& fr : ds.frames) f[static_cast<std::size_t>(fr.label - 1)] += 1.0;
  for (auto& v : f) v /= static_cast<double>(ds.size());
  return f;
}

SyntheticDomainSpec small_spec(std::uint64_t seed, std::size_t length = 240) {
  SyntheticDomainSpec spec;
  spec.feature_dim = 4;
  spec.source.length = length;
  spec.target.length = length;
  spec.class_separation = 2.0;
  spec.seed = seed;
  return spec;
}

ExperimentConfig quick_config(Method m) {
  ExperimentConfig c;
  c.name = "syn";
  c.method = m;
  c.train.epochs = 5;
  c.runs = 2;
  c.evals = 2;
  c.adaboost_estimators = 10;
  c.dnn_hidden = 16;
  c.seed = 3;
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args, const std::filesystem::path& log) {
  const std::string cmd = std::string(FEWSHOT_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("synthetic class priors") {
  SyntheticDomainSpec spec;
  spec.source.priors = {0.111, 0.306, 0.139, 0.444};
  spec.source.length = 2160;
  const auto d = synthesize_domains(spec);
  CHECK(d.source.size() == 2160);
  const auto f = class_fractions(d.source);
  for (int c = 0; c < 4; ++c) CHECK(std::abs(f[c] - spec.source.priors[c]) <= 0.03);

  spec.source.length = 10000;
  spec.source.priors = {0.063, 0.046, 0.040, 0.851};
  const auto big = class_fractions(synthesize_domains(spec).source);
  for (int c = 0; c < 4; ++c) CHECK(std::abs(big[c] - spec.source.priors[c]) <= 0.02);

  const auto sizes = class_block_sizes({0.25, 0.25, 0.25, 0.25}, 10);
  CHECK(sizes[0] + sizes[1] + sizes[2] + sizes[3] == 10);
  for (auto s : sizes) CHECK((s == 2 || s == 3));

  spec.source.priors = {0.5, 0.5, 0.5, 0.0};
  CHECK_THROWS_AS(synthesize_domains(spec), std::invalid_argument);
  spec.source.priors = {0.5, 0.5, 0.0, 0.0};
  spec.source.length = 1;
  CHECK_THROWS_AS(synthesize_domains(spec), std::invalid_argument);
}

TEST_CASE("synthetic domains without shift are indistinguishable") {
  SyntheticDomainSpec spec;
  spec.source.length = 4000;
  spec.target.length = 4000;
  spec.seed = 12;
  const auto d = synthesize_domains(spec);
  for (std::size_t j = 0; j < spec.feature_dim; ++j) {
    double ms = 0, mt = 0, vs = 0;
    for (const auto& f : d.source.frames) ms += f.features[static_cast<Eigen::Index>(j)];
    for (const auto& f : d.target.frames) mt += f.features[static_cast<Eigen::Index>(j)];
    ms /= 4000.0;
    mt /= 4000.0;
    for (const auto& f : d.source.frames) vs += std::pow(f.features[static_cast<Eigen::Index>(j)] - ms, 2);
    const double sigma = std::sqrt(vs / 4000.0);
    CHECK(std::abs(ms - mt) < 0.1 * sigma);
  }
}

TEST_CASE("synthetic sub-groups are recoverable by the mixture") {
  SyntheticDomainSpec spec;
  spec.source.length = 1000;
  spec.subgroup_separation = 5.0;
  spec.seed = 4;
  const auto d = synthesize_domains(spec);
  const auto windows = make_windows(d.source);
  const auto fit = gmm_fit(flatten_windows(windows), {.k = 2, .seed = 1});
  const auto ids = gmm_assign(fit.params, flatten_windows(windows));
  std::size_t same = 0;
  for (std::size_t i = 0; i < ids.size(); ++i) same += ids[i] == d.source_subgroup[windows[i].origin_t];
  const double purity = static_cast<double>(std::max(same, ids.size() - same)) / static_cast<double>(ids.size());
  CHECK(purity > 0.95);
}

TEST_CASE("synthetic generation is reproducible and round-trips") {
  auto spec = small_spec(9);
  spec.shift = {0.5, -0.5, 1.0, 0.0};
  spec.class_layout = ClassLayout::kMirrored;
  const auto a = synthesize_domains(spec);
  const auto b = synthesize_domains(spec);
  for (std::size_t i = 0; i < a.target.size(); ++i) {
    CHECK(a.target.frames[i].features == b.target.frames[i].features);
    CHECK(a.target.frames[i].label == b.target.frames[i].label);
  }

  const auto back = synthetic_spec_from_json(to_json(spec));
  CHECK(back.shift == spec.shift);
  CHECK(back.class_layout == ClassLayout::kMirrored);
  CHECK(back.source.length == spec.source.length);
  const auto c = synthesize_domains(back);
  CHECK(c.source.frames.back().features == a.source.frames.back().features);

  Json j = to_json(spec);
  j["shift"] = 1.5;
  CHECK(synthetic_spec_from_json(j).shift == std::vector<double>(4, 1.5));
  j["class_layout"] = "sideways";
  CHECK_THROWS(synthetic_spec_from_json(j));

  const auto dir = temp_dir("synth_csv");
  write_csv(a.source, dir / "s.csv");
  const auto loaded = load_csv(dir / "s.csv");
  REQUIRE(loaded.size() == a.source.size());
  CHECK(loaded.feature_names == a.source.feature_names);
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    CHECK(loaded.frames[i].label == a.source.frames[i].label);
    CHECK(loaded.frames[i].features == a.source.frames[i].features);
  }
}

TEST_CASE("accuracy") {
  CHECK(accuracy({1, 2, 3, 4}, {1, 2, 3, 4}) == 1.0);
  CHECK(accuracy({1, 2, 3, 4}, {2, 3, 4, 1}) == 0.0);
  CHECK(accuracy({1, 2, 3, 4}, {1, 2, 4, 4}) == 0.75);
  CHECK_THROWS(accuracy({1}, {1, 2}));
  CHECK_THROWS(accuracy({}, {}));

  Rng rng(2);
  std::vector<int> p, y;
  for (int i = 0; i < 50; ++i) {
    p.push_back(1 + static_cast<int>(uniform_index(rng, 4)));
    y.push_back(1 + static_cast<int>(uniform_index(rng, 4)));
  }
  std::vector<std::size_t> order(50);
  std::iota(order.begin(), order.end(), std::size_t{0});
  shuffle_in_place(order, rng);
  std::vector<int> ps, ys;
  for (auto i : order) {
    ps.push_back(p[i]);
    ys.push_back(y[i]);
  }
  CHECK(accuracy(ps, ys) == accuracy(p, y));

  // Per-class recall averaged over classes present in the labels.
  CHECK(macro_accuracy({1, 1, 1, 2}, {1, 1, 1, 1}) == doctest::Approx(0.75));
  CHECK(macro_accuracy({1, 1, 2, 2}, {1, 2, 2, 2}) == doctest::Approx((1.0 + 2.0 / 3.0) / 2.0));
}

TEST_CASE("run_experiment") {
  const auto d = synthesize_domains(small_spec(5));
  auto second = synthesize_domains(small_spec(6)).target;
  second.name = "second";

  SUBCASE("one row per target file and reproducible") {
    const auto cfg = quick_config(Method::kLstm);
    const auto r = run_experiment(cfg, {d.source}, {d.target, second});
    REQUIRE(r.per_target.size() == 2);
    CHECK(r.per_target[1].target == "second");
    CHECK(r.overall_mean == doctest::Approx((r.per_target[0].accuracy + r.per_target[1].accuracy) / 2.0));
    for (const auto& row : r.per_target) {
      CHECK(row.accuracy >= 0.0);
      CHECK(row.accuracy <= 1.0);
      CHECK(row.n_shots == 16);
      CHECK(row.n_test + row.n_shots == d.target.size() - 1);
    }
    const auto again = run_experiment(cfg, {d.source}, {d.target, second});
    auto ja = to_json(r), jb = to_json(again);
    ja.erase("wall_seconds");
    jb.erase("wall_seconds");
    CHECK(ja.dump() == jb.dump());
  }

  SUBCASE("no shift sanity") {
    auto spec = small_spec(7, 600);
    spec.class_separation = 3.0;
    spec.latent_subgroups = 1;
    spec.source.subgroups = 1;
    spec.target.subgroups = 1;
    const auto same = synthesize_domains(spec);
    const auto r = run_experiment(quick_config(Method::kLr), {same.source}, {same.source});
    CHECK(r.overall_mean > 0.9);
  }

  SUBCASE("every method runs") {
    for (Method m : all_methods()) {
      const auto r = run_experiment(quick_config(m), {d.source}, {d.target});
      CHECK(r.method == method_name(m));
      CHECK(r.per_target.size() == 1);
      CHECK(r.per_target[0].selection.has_value() == (m == Method::kOurs));
    }
  }

  SUBCASE("hierarchical rows carry the selection report") {
    auto cfg = quick_config(Method::kOurs);
    cfg.runs = 10;
    cfg.evals = 5;
    cfg.train.epochs = 2;
    const auto r = run_experiment(cfg, {d.source}, {d.target});
    const auto& sel = *r.per_target[0].selection;
    CHECK(sel.shot_accuracies.size() == 10);
    CHECK(sel.test_accuracies.size() == 5);
    CHECK(r.per_target[0].accuracy == sel.mean_test_accuracy);
  }

  SUBCASE("self-training needs every class in the source") {
    auto spec = small_spec(8);
    spec.source.priors = {0.5, 0.5, 0.0, 0.0};
    const auto partial = synthesize_domains(spec);
    CHECK_THROWS(run_experiment(quick_config(Method::kSs), {partial.source}, {partial.target}));
  }

  CHECK_THROWS(method_from_name("svm"));
}

TEST_CASE("test labels never reach a fitted model") {
  const auto d = synthesize_domains(small_spec(11));
  for (Method m : all_methods()) {
    const auto cfg = quick_config(m);
    const auto data = prepare_data(cfg, {d.source}, {d.target});
    const auto split = sample_few_shot(make_windows(data.targets[0]), cfg.per_class, 77);
    auto poisoned = split;
    for (auto& y : poisoned.test_labels) y = 1 + (y % 4);
    const auto clean = run_cell(cfg, data.source_windows, split, cfg.seed);
    const auto dirty = run_cell(cfg, data.source_windows, poisoned, cfg.seed);
    CHECK(clean.model.dump() == dirty.model.dump());
    CHECK(clean.predictions == dirty.predictions);
  }
}

TEST_CASE("experiment config JSON") {
  auto cfg = quick_config(Method::kAdaBoost);
  cfg.source = {"a.csv", "dir"};
  cfg.target = {"t.csv"};
  cfg.eval_mode = EvalMode::kFixed;
  cfg.train.learning_rate = 0.01;
  const auto back = experiment_config_from_json(to_json(cfg));
  CHECK(back.method == Method::kAdaBoost);
  CHECK(back.source == cfg.source);
  CHECK(back.eval_mode == EvalMode::kFixed);
  CHECK(back.train.learning_rate == 0.01);
  CHECK(back.drop == cfg.drop);
  CHECK_THROWS(experiment_config_from_json(Json{{"method", "nope"}}));
  CHECK_THROWS(experiment_config_from_json(Json{{"train", {{"dropout", 1.5}}}}));
  CHECK_THROWS(experiment_config_from_json(Json{{"k", 0}}));
}

TEST_CASE("cross-dataset grid layout") {
  const auto root = fewshot::testing::temp_dir("grid");
  const std::size_t counts[3] = {5, 1, 12};
  for (std::size_t d = 0; d < 3; ++d) {
    const auto dir = root / ("dataset" + std::to_string(d + 1));
    std::filesystem::create_directories(dir);
    for (std::size_t f = 0; f < counts[d]; ++f) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "f%02zu.csv", f);
      fewshot::testing::write_text(dir / buf, "a,label\n0,0\n");
    }
  }
  ExperimentConfig base;
  base.seed = 9;
  const auto& methods = fewshot::all_methods();
  const auto grid = fewshot::cross_dataset_grid(root, base, methods);
  REQUIRE(grid.size() == 21 * methods.size());

  std::vector<std::string> names;
  for (std::size_t i = 0; i < grid.size(); i += methods.size()) names.push_back(grid[i].name);
  CHECK(names.front() == "1_{1-5}-2");
  CHECK(names[1] == "1_{1}-3_{1-12}");
  CHECK(names[5] == "1_{5}-3_{1-12}");
  CHECK(names[6] == "2-1_{1-5}");
  CHECK(names[7] == "2-3_{1-12}");
  CHECK(names[8] == "3_{1}-1_{1-5}");
  CHECK(names[19] == "3_{12}-1_{1-5}");
  CHECK(names.back() == "3_{1-12}-2");

  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(grid[i].method == methods[i % methods.size()]);
    CHECK(grid[i].seed == 9);
    CHECK(grid[i].target.size() == 1);
  }
  CHECK(grid[methods.size()].source.size() == 1);
  CHECK(grid[methods.size()].source[0].filename() == "f00.csv");
  CHECK_THROWS_AS(fewshot::cross_dataset_grid(root / "missing", base, methods), fewshot::DataError);
}

TEST_CASE("report") {
  auto result = [](std::string name, std::string method, double v) {
    ExperimentResult r;
    r.name = std::move(name);
    r.method = std::move(method);
    r.per_target.push_back({"t", v, v, 10, 16, std::nullopt});
    r.pair_mean = r.overall_mean = v;
    return r;
  };

  SUBCASE("stored value renders in percent") {
    const auto text = render_table(build_table({result("1_{1-5}-2", "ours", 0.7985)}));
    CHECK(text.find("| 1_{1-5}-2 | 79.85 |") != std::string::npos);
    CHECK(text.find("| Avg | 79.85 |") != std::string::npos);
    CHECK(text.find("Ours") != std::string::npos);
  }

  SUBCASE("Avg row is the unweighted column mean") {
    const std::vector<ExperimentResult> rs{result("a", "lr", 0.5), result("b", "lr", 0.7), result("c", "lr", 0.9),
                                           result("a", "ours", 0.6)};
    const auto t = build_table(rs);
    CHECK(t.rows.size() == 3);
    CHECK(t.methods == std::vector<std::string>{"lr", "ours"});
    CHECK(*t.column_mean("lr") == doctest::Approx((0.5 + 0.7 + 0.9) / 3.0));
    CHECK(*t.column_mean("ours") == doctest::Approx(0.6));
    const auto text = render_table(t);
    CHECK(text.find("| Avg | 70.00 | 60.00 |") != std::string::npos);
    CHECK(text.find("| b | 70.00 | - |") != std::string::npos);
  }

  SUBCASE("emit and reload") {
    const auto dir = temp_dir("report");
    const std::vector<ExperimentResult> rs{result("x", "lstm", 0.4078), result("x", "ours", 0.6659)};
    emit_report(rs, dir / "out" / "table.md");
    CHECK(std::filesystem::exists(dir / "out" / "table.md"));
    const auto loaded = load_results(dir / "out");
    REQUIRE(loaded.size() == 2);
    CHECK(loaded[1].overall_mean == 0.6659);
    CHECK(slurp(dir / "out" / "table.md").find("| x | 40.78 | 66.59 |") != std::string::npos);
    CHECK_THROWS(emit_report({}, dir / "empty.md"));
    CHECK_THROWS(emit_report(rs, "/proc/forbidden/table.md"));
  }
}

TEST_CASE("model JSON round-trips") {
  Rng rng(3);
  const auto d = synthesize_domains(small_spec(2));
  const auto windows = make_windows(d.source);
  const auto split = sample_few_shot(make_windows(d.target), 4, 1);

  SUBCASE("hierarchical model reproduces predictions bit-exactly") {
    PipelineConfig cfg;
    cfg.train.epochs = 5;
    auto model = fit_hierarchical(windows, split.shots, cfg, 4);
    model.stats = fit_standardizer(d.source);
    const auto text = to_json(model).dump();
    const auto back = hierarchical_from_json(Json::parse(text));
    CHECK(to_json(back).dump() == text);
    CHECK(predict_all(back, split.test_inputs) == predict_all(model, split.test_inputs));
    CHECK(back.shot_assignments == model.shot_assignments);
    CHECK(back.stats->std == model.stats->std);
  }

  SUBCASE("individual model families") {
    const auto lstm = LstmParams::random(3, rng);
    CHECK(to_json(lstm_from_json(to_json(lstm))).dump() == to_json(lstm).dump());
    const auto mlp = MlpParams::random(3, rng, 8);
    CHECK(mlp_from_json(to_json(mlp)).w2 == mlp.w2);
    SoftmaxRegressionParams sm{fewshot::testing::random_matrix(2, 3, rng), Eigen::Vector2d(0.1, 1.0 / 3.0)};
    CHECK(softmax_from_json(to_json(sm)).bias == sm.bias);
    const auto gmm = gmm_fit(flatten_windows(windows), {.k = 2, .seed = 0}).params;
    CHECK(gmm_from_json(to_json(gmm)).variances == gmm.variances);
    const auto ab = adaboost_train(flatten_windows(windows), labels_of(windows), 5);
    const auto ab2 = adaboost_from_json(to_json(ab));
    CHECK(ab2.alphas == ab.alphas);
    CHECK(ab2.stumps.size() == ab.stumps.size());
    auto ss = ss_init(windows);
    ss.min_intra_distance[2] = std::numeric_limits<double>::infinity();
    const auto j = to_json(ss);
    const auto ss2 = ss_state_from_json(j);
    CHECK(std::isinf(ss2.min_intra_distance[2]));
    CHECK(ss2.pools[1].size() == ss.pools[1].size());
  }

  SUBCASE("tensors carry their shape") {
    Eigen::MatrixXd m(2, 3);
    m << 1, 2, 3, 4, 5, 6;
    const auto j = tensor_to_json(m);
    CHECK(j.at("shape") == Json::array({2, 3}));
    CHECK(j.at("data") == Json::array({1.0, 2.0, 3.0, 4.0, 5.0, 6.0}));
    CHECK(tensor_from_json(j) == m);
    Json bad = j;
    bad["shape"] = Json::array({4, 4});
    CHECK_THROWS(tensor_from_json(bad));
  }
}

TEST_CASE("command line") {
  const auto dir = temp_dir("cli");
  auto spec = small_spec(1);
  write_json_file(dir / "spec.json", to_json(spec));
  REQUIRE(run_cli("synth --spec " + (dir / "spec.json").string() + " --out " + (dir / "data").string(), dir / "synth.log") == 0);
  CHECK(std::filesystem::exists(dir / "data" / "source.csv"));
  CHECK(std::filesystem::exists(dir / "data" / "target.csv"));

  const Json config = {{"defaults", {{"source", "data/source.csv"},
                                     {"target", "data/target.csv"},
                                     {"output", (dir / "results").string()},
                                     {"runs", 2},
                                     {"evals", 1},
                                     {"train", {{"epochs", 3}}}}},
                       {"experiments", Json::array({{{"name", "syn-1"}, {"methods", {"lr", "ours"}}}})}};
  write_json_file(dir / "config.json", config);
  REQUIRE(run_cli("run --config " + (dir / "config.json").string(), dir / "run.log") == 0);
  CHECK(std::filesystem::exists(dir / "results" / "000_syn_1__lr.json"));
  CHECK(std::filesystem::exists(dir / "results" / "001_syn_1__ours.json"));

  REQUIRE(run_cli("report --in " + (dir / "results").string() + " --out " + (dir / "table.md").string(), dir / "report.log") == 0);
  const auto table = slurp(dir / "table.md");
  CHECK(table.find("| syn-1 |") != std::string::npos);
  CHECK(table.find("| Avg |") != std::string::npos);

  // Grid configs expand over dataset directories and keep their row order in the report.
  const std::size_t counts[3] = {5, 1, 12};
  for (std::size_t d = 0; d < 3; ++d) {
    const auto sub = dir / "grid" / ("dataset" + std::to_string(d + 1));
    std::filesystem::create_directories(sub);
    for (std::size_t f = 0; f < counts[d]; ++f)
      std::filesystem::copy_file(dir / "data" / "source.csv", sub / ("run" + std::to_string(10 + f) + ".csv"));
  }
  write_json_file(dir / "grid.json", Json{{"grid_root", "grid"},
                                          {"methods", {"lr"}},
                                          {"defaults", {{"output", (dir / "grid_results").string()}}}});
  REQUIRE(run_cli("run --config " + (dir / "grid.json").string(), dir / "grid.log") == 0);
  REQUIRE(run_cli("report --in " + (dir / "grid_results").string() + " --out " + (dir / "grid.md").string(),
                  dir / "grid_report.log") == 0);
  const auto grid_table = slurp(dir / "grid.md");
  const auto first = grid_table.find("| 1_{1-5}-2 |");
  const auto middle = grid_table.find("| 3_{12}-1_{1-5} |");
  const auto last = grid_table.find("| 3_{1-12}-2 |");
  REQUIRE(first != std::string::npos);
  REQUIRE(middle != std::string::npos);
  REQUIRE(last != std::string::npos);
  CHECK(first < middle);
  CHECK(middle < last);

  write_json_file(dir / "bad.json", Json{{"method", "svm"}});
  CHECK(run_cli("run --config " + (dir / "bad.json").string(), dir / "bad.log") != 0);
  CHECK(slurp(dir / "bad.log").find("error:") != std::string::npos);
  CHECK(run_cli("run --config " + (dir / "missing.json").string(), dir / "missing.log") != 0);
  CHECK(run_cli("", dir / "none.log") != 0);
}
