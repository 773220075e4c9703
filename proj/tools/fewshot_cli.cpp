#include <cctype>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fewshot/experiment.hpp"
#include "fewshot/log.hpp"
#include "fewshot/report.hpp"
#include "fewshot/serialize.hpp"
#include "fewshot/synthetic.hpp"

namespace fs = std::filesystem;
using fewshot::Json;

namespace {

// `index` keeps the config order under lexicographic directory listing.
std::string file_stem_for(std::size_t index, const std::string& name, const std::string& method) {
  char prefix[16];
  std::snprintf(prefix, sizeof prefix, "%03zu_", index);
  std::string out = prefix;
  for (char c : name) out += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
  if (name.empty()) out += "experiment";
  return out + "__" + method;
}

// A config file is one experiment object, {"defaults": {...}, "experiments": [...]},
// or {"grid_root": dir, "defaults": {...}, "methods": [...]} for the cross-dataset grid.
// An entry with "methods": [...] expands into one experiment per method.
std::vector<fewshot::ExperimentConfig> expand_configs(const Json& doc, const fs::path& base) {
  if (doc.contains("grid_root")) {
    fs::path root = doc.at("grid_root").get<std::string>();
    if (root.is_relative()) root = base / root;
    std::vector<fewshot::Method> methods = fewshot::all_methods();
    if (doc.contains("methods")) {
      methods.clear();
      for (const auto& m : doc.at("methods")) methods.push_back(fewshot::method_from_name(m.get<std::string>()));
    }
    return fewshot::cross_dataset_grid(root, fewshot::experiment_config_from_json(doc.value("defaults", Json::object())),
                                       methods);
  }
  std::vector<Json> entries;
  if (doc.contains("experiments")) {
    const Json defaults = doc.value("defaults", Json::object());
    for (const auto& e : doc.at("experiments")) {
      Json merged = defaults;
      merged.update(e);
      entries.push_back(std::move(merged));
    }
  } else {
    entries.push_back(doc);
  }
  std::vector<fewshot::ExperimentConfig> out;
  for (auto& e : entries) {
    if (e.contains("methods")) {
      const auto methods = e.at("methods").get<std::vector<std::string>>();
      e.erase("methods");
      for (const auto& m : methods) {
        Json one = e;
        one["method"] = m;
        out.push_back(fewshot::experiment_config_from_json(one));
      }
    } else {
      out.push_back(fewshot::experiment_config_from_json(e));
    }
  }
  return out;
}

// Relative data paths are taken relative to the config file.
void resolve_paths(std::vector<fs::path>& paths, const fs::path& base) {
  for (auto& p : paths)
    if (p.is_relative()) p = base / p;
}

int cmd_run(const fs::path& config_path) {
  const fs::path base = fs::absolute(config_path).parent_path();
  auto configs = expand_configs(fewshot::read_json_file(config_path), base);
  for (auto& cfg : configs) {
    resolve_paths(cfg.source, base);
    resolve_paths(cfg.target, base);
  }
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const auto& cfg = configs[i];
    const auto result = fewshot::run_experiment(cfg);
    fs::path out = cfg.output.empty() ? fs::path("results") : cfg.output;
    if (out.extension() != ".json" || configs.size() > 1) {
      out = (out.extension() == ".json" ? out.parent_path() : out) / (file_stem_for(i, cfg.name, result.method) + ".json");
    }
    fewshot::write_json_file(out, fewshot::to_json(result));
    std::cout << (cfg.name.empty() ? "experiment" : cfg.name) << " [" << result.method << "] mean accuracy "
              << 100.0 * result.overall_mean << "% over " << result.per_target.size() << " target file(s) -> "
              << out.string() << '\n';
  }
  return 0;
}

int cmd_synth(const fs::path& spec_path, const fs::path& out_dir) {
  const auto spec = fewshot::synthetic_spec_from_json(fewshot::read_json_file(spec_path));
  const auto domains = fewshot::synthesize_domains(spec);
  fewshot::write_csv(domains.source, out_dir / "source.csv");
  fewshot::write_csv(domains.target, out_dir / "target.csv");
  std::cout << "wrote " << (out_dir / "source.csv").string() << " (" << domains.source.size() << " frames) and "
            << (out_dir / "target.csv").string() << " (" << domains.target.size() << " frames)\n";
  return 0;
}

int cmd_report(const fs::path& in_dir, const fs::path& out_file) {
  const auto results = fewshot::load_results(in_dir);
  if (results.empty()) throw std::runtime_error("no experiment results found in " + in_dir.string());
  fewshot::emit_report(results, out_file);
  std::cout << fewshot::render_table(fewshot::build_table(results));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Few-shot cluster-expert domain adaptation for sensor time series"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Log progress to stderr");

  fs::path config_path;
  auto* run = app.add_subcommand("run", "Run the experiments described by a JSON config");
  run->add_option("--config", config_path, "Experiment config file")->required()->check(CLI::ExistingFile);

  fs::path spec_path;
  fs::path synth_out;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic source/target pair as CSV");
  synth->add_option("--spec", spec_path, "Synthetic domain spec (JSON)")->required()->check(CLI::ExistingFile);
  synth->add_option("--out", synth_out, "Output directory")->required();

  fs::path report_in;
  fs::path report_out;
  auto* report = app.add_subcommand("report", "Collect result JSON files into an accuracy table");
  report->add_option("--in", report_in, "Directory of result JSON files")->required()->check(CLI::ExistingDirectory);
  report->add_option("--out", report_out, "Table output file (a .json twin is written alongside)")->required();

  CLI11_PARSE(app, argc, argv);
  if (verbose) fewshot::set_log_level(fewshot::LogLevel::kInfo);

  try {
    if (*run) return cmd_run(config_path);
    if (*synth) return cmd_synth(spec_path, synth_out);
    if (*report) return cmd_report(report_in, report_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
