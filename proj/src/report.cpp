#include "fewshot/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fewshot {
namespace {

std::string percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
  return buf;
}

}  // namespace

std::optional<double> AccuracyTable::cell(const std::string& row, const std::string& method) const {
  const auto it = cells.find({row, method});
  if (it == cells.end()) return std::nullopt;
  return it->second;
}

std::optional<double> AccuracyTable::column_mean(const std::string& method) const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& row : rows) {
    if (const auto v = cell(row, method)) {
      sum += *v;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

AccuracyTable build_table(const std::vector<ExperimentResult>& results) {
  AccuracyTable t;
  for (const auto& r : results) {
    if (std::find(t.rows.begin(), t.rows.end(), r.name) == t.rows.end()) t.rows.push_back(r.name);
    t.cells[{r.name, r.method}] = r.overall_mean;
  }
  for (Method m : all_methods()) {
    const auto name = method_name(m);
    const bool used = std::any_of(results.begin(), results.end(), [&](const auto& r) { return r.method == name; });
    if (used) t.methods.push_back(name);
  }
  return t;
}

std::string render_table(const AccuracyTable& table) {
  static const std::map<std::string, std::string> kHeadings = {
      {"lr", "LR"}, {"adaboost", "AB"}, {"ss", "SS"}, {"dnn", "DNN"}, {"lstm", "LSTM"}, {"ours", "Ours"}};
  std::ostringstream out;
  out << "| Source-Target |";
  for (const auto& m : table.methods) out << ' ' << kHeadings.at(m) << " |";
  out << "\n|---|";
  for (std::size_t i = 0; i < table.methods.size(); ++i) out << "---:|";
  out << '\n';
  for (const auto& row : table.rows) {
    out << "| " << row << " |";
    for (const auto& m : table.methods) {
      const auto v = table.cell(row, m);
      out << ' ' << (v ? percent(*v) : "-") << " |";
    }
    out << '\n';
  }
  out << "| Avg |";
  for (const auto& m : table.methods) {
    const auto v = table.column_mean(m);
    out << ' ' << (v ? percent(*v) : "-") << " |";
  }
  out << '\n';
  return out.str();
}

void emit_report(const std::vector<ExperimentResult>& results, const std::filesystem::path& path) {
  if (results.empty()) throw std::invalid_argument("emit_report: no results");
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report: " + path.string());
  out << "Classification accuracy (%)\n\n" << render_table(build_table(results));
  if (!out) throw std::runtime_error("failed writing report: " + path.string());

  Json all = Json::array();
  for (const auto& r : results) all.push_back(to_json(r));
  auto json_path = path;
  json_path.replace_extension(".json");
  write_json_file(json_path, {{"results", all}});
}

std::vector<ExperimentResult> load_results(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<ExperimentResult> out;
  for (const auto& f : files) {
    const Json j = read_json_file(f);
    if (j.contains("results")) {
      for (const auto& r : j.at("results")) out.push_back(experiment_result_from_json(r));
    } else if (j.contains("per_target")) {
      out.push_back(experiment_result_from_json(j));
    }
  }
  return out;
}

}  // namespace fewshot
