#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fewshot/experiment.hpp"

namespace fewshot {

// Rows = experiment names (first-seen order), columns = methods in canonical
// order; cells are overall accuracies in [0, 1].
struct AccuracyTable {
  std::vector<std::string> rows;
  std::vector<std::string> methods;
  std::map<std::pair<std::string, std::string>, double> cells;

  std::optional<double> cell(const std::string& row, const std::string& method) const;
  // Unweighted mean of a method's column over the rows that have it.
  std::optional<double> column_mean(const std::string& method) const;
};

AccuracyTable build_table(const std::vector<ExperimentResult>& results);

// Markdown table in percent with two decimals, plus an Avg row.
std::string render_table(const AccuracyTable& table);

// Writes `path` (the table) and `path` with a .json extension (all results).
void emit_report(const std::vector<ExperimentResult>& results, const std::filesystem::path& path);

// Reads every result JSON in a directory (lexicographic order).
std::vector<ExperimentResult> load_results(const std::filesystem::path& dir);

}  // namespace fewshot
