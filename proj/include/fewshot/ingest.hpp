#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fewshot {

inline constexpr int kNumClasses = 4;  // excellent, good, acceptable, spoiled

// Class labels are 1-based on every public surface.
inline bool is_valid_label(int label) { return label >= 1 && label <= kNumClasses; }

// Raised for malformed input files; carries the 1-based data row when known.
class DataError : public std::runtime_error {
 public:
  DataError(const std::string& message, std::size_t row = 0)
      : std::runtime_error(message), row_(row) {}
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

struct SensorFrame {
  std::size_t t = 0;
  Eigen::VectorXd features;
  int label = 0;
};

struct SequenceDataset {
  std::string name;
  std::vector<SensorFrame> frames;
  std::vector<std::string> feature_names;

  std::size_t size() const { return frames.size(); }
  std::size_t dim() const { return feature_names.size(); }
};

// Two consecutive frames; the label is the one of the later frame.
struct WindowSample {
  Eigen::MatrixXd x;  // 2 x d, row 0 = t-1, row 1 = t
  int y = 0;
  std::size_t origin_t = 0;
};

// Window without its label, as handed to predictors.
struct TestWindow {
  Eigen::MatrixXd x;
  std::size_t origin_t = 0;
};

struct FewShotSplit {
  std::vector<WindowSample> shots;
  std::vector<TestWindow> test_inputs;
  std::vector<int> test_labels;  // parallel to test_inputs; only for scoring
  int n_classes = 0;             // classes present in the input windows
  std::vector<std::string> warnings;
};

struct StandardizationStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd std;
};

inline constexpr double kStdFloor = 1e-8;

struct CsvOptions {
  std::string label_column = "label";
  std::vector<std::string> ignore_columns;  // non-feature columns, e.g. timestamps
};

SequenceDataset load_csv(const std::filesystem::path& path, const CsvOptions& options = {});

// Every *.csv in a directory, ordered lexicographically by file name.
std::vector<std::filesystem::path> list_csv_files(const std::filesystem::path& dir);

// Loads every *.csv in a directory, ordered lexicographically by file name.
std::vector<SequenceDataset> load_csv_dir(const std::filesystem::path& dir,
                                          const CsvOptions& options = {});

// Files and directories both resolve to a list of datasets.
std::vector<SequenceDataset> load_csv_path(const std::filesystem::path& path,
                                           const CsvOptions& options = {});

const std::vector<std::string>& default_drop_columns();

// Removes the listed columns (case-insensitive). Absent names are skipped.
SequenceDataset harmonize(const SequenceDataset& ds, const std::vector<std::string>& drop);
SequenceDataset harmonize(const SequenceDataset& ds);

StandardizationStats fit_standardizer(const SequenceDataset& ds);
StandardizationStats fit_standardizer(const std::vector<SequenceDataset>& parts);
SequenceDataset apply_standardizer(const SequenceDataset& ds, const StandardizationStats& stats);

std::vector<WindowSample> make_windows(const SequenceDataset& ds);

// Flattens a 2 x d window to [x_{t-1}, x_t].
Eigen::VectorXd flatten_window(const Eigen::MatrixXd& window);

// Rows are flattened windows.
Eigen::MatrixXd flatten_windows(const std::vector<WindowSample>& windows);
Eigen::MatrixXd flatten_windows(const std::vector<TestWindow>& windows);

std::vector<int> labels_of(const std::vector<WindowSample>& windows);

FewShotSplit sample_few_shot(const std::vector<WindowSample>& windows, std::size_t per_class,
                             std::uint64_t seed);

}  // namespace fewshot
