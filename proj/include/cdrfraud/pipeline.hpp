#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "cdrfraud/baselines.hpp"
#include "cdrfraud/boost.hpp"
#include "cdrfraud/forest.hpp"
#include "cdrfraud/metrics.hpp"
#include "cdrfraud/model_io.hpp"
#include "cdrfraud/smote.hpp"

namespace cdrfraud {

/// clean: split first, then scale and oversample the training rows only.
/// paper_faithful: scale and oversample the whole table, then split, so
/// synthetic rows derived from test rows land on both sides.
enum class LeakageMode { clean, paper_faithful };

std::string_view to_string(LeakageMode mode);
LeakageMode parse_leakage_mode(std::string_view text);

struct PipelineConfig {
    std::filesystem::path input;
    std::optional<std::filesystem::path> schema;
    double test_fraction = 0.2;
    /// Drives the split, SMOTE and every learner.
    std::uint64_t seed = 42;
    SmoteConfig smote;
    std::vector<ModelKind> models;
    ForestConfig forest;
    BoostConfig boost;
    KMeansConfig kmeans;
    std::optional<DbscanConfig> dbscan;
    LeakageMode mode = LeakageMode::clean;
    std::filesystem::path out_dir;

    void validate() const;
};

struct ModelRun {
    ModelKind kind = ModelKind::rf;
    EvalReport report;
    double fit_seconds = 0.0;
    std::filesystem::path model_file;
};

struct DataSummary {
    Index rows_loaded = 0;
    Index rows_dropped = 0;
    Index fraud_rows = 0;
    Index train_rows = 0;
    Index test_rows = 0;
    Index test_fraud_rows = 0;
    Index synthetic_rows = 0;
    Index feature_count = 0;
};

struct PipelineResult {
    DataSummary data;
    std::vector<ModelRun> runs;
};

/// load → drop_missing → encode → split/scale/SMOTE (order per mode) → fit →
/// evaluate, writing per model `<kind>.model`, `<kind>.report.json`,
/// `<kind>.report.txt` and `<kind>.roc.csv`, plus `comparison.csv` and
/// `comparison.txt` into out_dir. Errors name the failing stage; files
/// written by a failed run are removed.
PipelineResult run_pipeline(const PipelineConfig& config, std::ostream* log = nullptr);

/// Scores a CSV with a saved model, writing `row_id,score,label` lines.
/// Returns the number of rows scored.
Index predict_file(const std::filesystem::path& model_path, const std::filesystem::path& input,
                   const std::filesystem::path& output);

/// Evaluates a saved model on a labeled CSV; writes `<kind>.report.json`,
/// `<kind>.report.txt` and `<kind>.roc.csv` into out_dir when given.
EvalReport evaluate_file(const std::filesystem::path& model_path, const std::filesystem::path& input,
                         const std::optional<std::filesystem::path>& out_dir);

struct ComparisonRow {
    std::string model;
    EvalReport report;
};

/// One row per model with accuracy, precision, recall, F1 and AUC columns.
std::string comparison_csv(const std::vector<ComparisonRow>& rows);
/// Metrics down the side, models across, percentages at one decimal.
std::string comparison_table(const std::vector<ComparisonRow>& rows);

/// Reads `*.report.json` files (sorted by name) from `dir`.
std::vector<ComparisonRow> read_reports(const std::filesystem::path& dir);
std::vector<ComparisonRow> read_reports(const std::vector<std::filesystem::path>& files);

std::string roc_csv(const std::vector<RocPoint>& points);

}  // namespace cdrfraud
