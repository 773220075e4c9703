#include "fewshot/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "fewshot/log.hpp"
#include "fewshot/rng.hpp"

namespace fewshot {
namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  std::string out(s.substr(b, e - b));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') {
    out = out.substr(1, out.size() - 2);
  }
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string_view rest(line);
  if (!rest.empty() && rest.back() == '\r') rest.remove_suffix(1);
  while (true) {
    const auto comma = rest.find(',');
    cells.push_back(trim(rest.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return cells;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool parse_double(const std::string& cell, double& out) {
  if (cell.empty()) return false;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

}  // namespace

SequenceDataset load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open CSV file: " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw DataError("CSV file has no header: " + path.string());
  const auto header = split_csv_line(line);

  std::ptrdiff_t label_idx = -1;
  std::vector<std::size_t> feature_idx;
  SequenceDataset ds;
  ds.name = path.stem().string();
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == options.label_column) {
      label_idx = static_cast<std::ptrdiff_t>(c);
      continue;
    }
    const bool ignored = std::any_of(options.ignore_columns.begin(), options.ignore_columns.end(),
                                     [&](const std::string& n) { return lower(n) == lower(header[c]); });
    if (ignored) continue;
    feature_idx.push_back(c);
    ds.feature_names.push_back(header[c]);
  }
  if (label_idx < 0) {
    throw DataError("label column '" + options.label_column + "' not found in " + path.string());
  }

  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw DataError(path.string() + ": row " + std::to_string(row) + " has " +
                          std::to_string(cells.size()) + " cells, header has " +
                          std::to_string(header.size()),
                      row);
    }
    SensorFrame frame;
    frame.t = row - 1;
    frame.features.resize(static_cast<Eigen::Index>(feature_idx.size()));
    for (std::size_t j = 0; j < feature_idx.size(); ++j) {
      double v = 0.0;
      if (!parse_double(cells[feature_idx[j]], v)) {
        throw DataError(path.string() + ": row " + std::to_string(row) + " column '" +
                            header[feature_idx[j]] + "' is not numeric: '" +
                            cells[feature_idx[j]] + "'",
                        row);
      }
      frame.features[static_cast<Eigen::Index>(j)] = v;
    }
    double label = 0.0;
    const auto& label_cell = cells[static_cast<std::size_t>(label_idx)];
    if (!parse_double(label_cell, label) || label != std::floor(label) ||
        !is_valid_label(static_cast<int>(label))) {
      throw DataError(path.string() + ": row " + std::to_string(row) +
                          " has label outside {1,2,3,4}: '" + label_cell + "'",
                      row);
    }
    frame.label = static_cast<int>(label);
    ds.frames.push_back(std::move(frame));
  }
  return ds;
}

std::vector<std::filesystem::path> list_csv_files(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw DataError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && lower(entry.path().extension().string()) == ".csv") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end(),
            [](const auto& a, const auto& b) { return a.filename().string() < b.filename().string(); });
  if (files.empty()) throw DataError("no CSV files in directory: " + dir.string());
  return files;
}

std::vector<SequenceDataset> load_csv_dir(const std::filesystem::path& dir,
                                          const CsvOptions& options) {
  const auto files = list_csv_files(dir);
  std::vector<SequenceDataset> out;
  out.reserve(files.size());
  for (const auto& f : files) out.push_back(load_csv(f, options));
  return out;
}

std::vector<SequenceDataset> load_csv_path(const std::filesystem::path& path,
                                           const CsvOptions& options) {
  if (std::filesystem::is_directory(path)) return load_csv_dir(path, options);
  if (!std::filesystem::exists(path)) throw DataError("no such file or directory: " + path.string());
  return {load_csv(path, options)};
}

const std::vector<std::string>& default_drop_columns() {
  static const std::vector<std::string> kDrop = {"humidity", "temperature", "MQ7", "MQ138",
                                                 "MQ137"};
  return kDrop;
}

SequenceDataset harmonize(const SequenceDataset& ds, const std::vector<std::string>& drop) {
  std::vector<bool> keep(ds.feature_names.size(), true);
  for (const auto& name : drop) {
    bool found = false;
    for (std::size_t j = 0; j < ds.feature_names.size(); ++j) {
      if (lower(ds.feature_names[j]) == lower(name)) {
        keep[j] = false;
        found = true;
      }
    }
    if (!found) log_info("harmonize: column '" + name + "' not present in " + ds.name);
  }

  SequenceDataset out;
  out.name = ds.name;
  std::vector<Eigen::Index> kept;
  for (std::size_t j = 0; j < keep.size(); ++j) {
    if (keep[j]) {
      kept.push_back(static_cast<Eigen::Index>(j));
      out.feature_names.push_back(ds.feature_names[j]);
    }
  }
  out.frames.reserve(ds.frames.size());
  for (const auto& f : ds.frames) {
    SensorFrame g{f.t, Eigen::VectorXd(static_cast<Eigen::Index>(kept.size())), f.label};
    for (std::size_t j = 0; j < kept.size(); ++j) g.features[static_cast<Eigen::Index>(j)] = f.features[kept[j]];
    out.frames.push_back(std::move(g));
  }
  return out;
}

SequenceDataset harmonize(const SequenceDataset& ds) { return harmonize(ds, default_drop_columns()); }

StandardizationStats fit_standardizer(const std::vector<SequenceDataset>& parts) {
  std::size_t n = 0;
  Eigen::Index d = -1;
  for (const auto& p : parts) {
    for (const auto& f : p.frames) {
      if (d < 0) d = f.features.size();
      if (f.features.size() != d) throw std::invalid_argument("fit_standardizer: mixed dimensionality");
      ++n;
    }
  }
  if (n == 0) throw std::invalid_argument("fit_standardizer: empty dataset");

  StandardizationStats stats{Eigen::VectorXd::Zero(d), Eigen::VectorXd::Zero(d)};
  for (const auto& p : parts)
    for (const auto& f : p.frames) stats.mean += f.features;
  stats.mean /= static_cast<double>(n);
  for (const auto& p : parts)
    for (const auto& f : p.frames) stats.std += (f.features - stats.mean).cwiseAbs2();
  stats.std = (stats.std / static_cast<double>(n)).cwiseSqrt().cwiseMax(kStdFloor);
  return stats;
}

StandardizationStats fit_standardizer(const SequenceDataset& ds) {
  return fit_standardizer(std::vector<SequenceDataset>{ds});
}

SequenceDataset apply_standardizer(const SequenceDataset& ds, const StandardizationStats& stats) {
  if (static_cast<Eigen::Index>(ds.dim()) != stats.mean.size()) {
    throw std::invalid_argument("apply_standardizer: dataset has " + std::to_string(ds.dim()) +
                                " features, stats have " + std::to_string(stats.mean.size()));
  }
  SequenceDataset out = ds;
  for (auto& f : out.frames) {
    f.features = (f.features - stats.mean).cwiseQuotient(stats.std);
  }
  return out;
}

std::vector<WindowSample> make_windows(const SequenceDataset& ds) {
  if (ds.frames.size() < 2) {
    throw std::invalid_argument("make_windows: need at least 2 frames, got " +
                                std::to_string(ds.frames.size()));
  }
  const auto d = static_cast<Eigen::Index>(ds.frames.front().features.size());
  std::vector<WindowSample> windows;
  windows.reserve(ds.frames.size() - 1);
  for (std::size_t i = 0; i + 1 < ds.frames.size(); ++i) {
    WindowSample w;
    w.x.resize(2, d);
    w.x.row(0) = ds.frames[i].features.transpose();
    w.x.row(1) = ds.frames[i + 1].features.transpose();
    w.y = ds.frames[i + 1].label;
    w.origin_t = ds.frames[i + 1].t;
    windows.push_back(std::move(w));
  }
  return windows;
}

Eigen::VectorXd flatten_window(const Eigen::MatrixXd& window) {
  Eigen::VectorXd v(window.size());
  const Eigen::Index d = window.cols();
  for (Eigen::Index r = 0; r < window.rows(); ++r) v.segment(r * d, d) = window.row(r).transpose();
  return v;
}

namespace {
template <typename W>
Eigen::MatrixXd flatten_rows(const std::vector<W>& windows) {
  if (windows.empty()) return {};
  Eigen::MatrixXd X(static_cast<Eigen::Index>(windows.size()), windows.front().x.size());
  for (std::size_t i = 0; i < windows.size(); ++i) {
    X.row(static_cast<Eigen::Index>(i)) = flatten_window(windows[i].x).transpose();
  }
  return X;
}
}  // namespace

Eigen::MatrixXd flatten_windows(const std::vector<WindowSample>& windows) { return flatten_rows(windows); }
Eigen::MatrixXd flatten_windows(const std::vector<TestWindow>& windows) { return flatten_rows(windows); }

std::vector<int> labels_of(const std::vector<WindowSample>& windows) {
  std::vector<int> y;
  y.reserve(windows.size());
  for (const auto& w : windows) y.push_back(w.y);
  return y;
}

FewShotSplit sample_few_shot(const std::vector<WindowSample>& windows, std::size_t per_class,
                             std::uint64_t seed) {
  if (windows.empty()) throw std::invalid_argument("sample_few_shot: empty window list");
  if (per_class < 1) throw std::invalid_argument("sample_few_shot: per_class must be >= 1");

  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < windows.size(); ++i) by_class[windows[i].y].push_back(i);

  FewShotSplit split;
  split.n_classes = static_cast<int>(by_class.size());
  Rng rng(seed);
  std::vector<bool> is_shot(windows.size(), false);
  for (auto& [label, idx] : by_class) {
    // Partial Fisher-Yates: the first `take` slots are a uniform draw without replacement.
    const std::size_t take = std::min(per_class, idx.size());
    for (std::size_t i = 0; i < take; ++i) {
      std::swap(idx[i], idx[i + uniform_index(rng, idx.size() - i)]);
    }
    if (take < per_class) {
      split.warnings.push_back("class " + std::to_string(label) + " has only " +
                               std::to_string(idx.size()) + " windows; all taken as shots");
      log_warn(split.warnings.back());
    }
    for (std::size_t i = 0; i < take; ++i) {
      is_shot[idx[i]] = true;
      split.shots.push_back(windows[idx[i]]);
    }
  }
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (is_shot[i]) continue;
    split.test_inputs.push_back({windows[i].x, windows[i].origin_t});
    split.test_labels.push_back(windows[i].y);
  }
  return split;
}

}  // namespace fewshot
