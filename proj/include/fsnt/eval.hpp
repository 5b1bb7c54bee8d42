#pragma once

// Classification metrics, ROC analysis, timed evaluation of a trained model
// and the CSV/JSON exports behind every comparison table.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fsnt/flowdata.hpp"
#include "fsnt/learn.hpp"

namespace fsnt {

// Rows are the true class, columns the predicted class.
struct ConfusionMatrix {
    std::array<std::array<std::uint64_t, kClassCount>, kClassCount> counts{};

    std::uint64_t total() const noexcept;
    std::uint64_t row_sum(std::size_t c) const noexcept;
    std::uint64_t col_sum(std::size_t c) const noexcept;
    std::uint64_t trace() const noexcept;
};

// Throws LengthMismatch (different or zero lengths).
ConfusionMatrix confusion_matrix(std::span<const ClassLabel> truth, std::span<const ClassLabel> predicted);
// Integer-id form; additionally throws LabelOutOfRange.
ConfusionMatrix confusion_matrix(std::span<const int> truth, std::span<const int> predicted);

struct PerClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::uint64_t support = 0;
};

struct ClassMetrics {
    std::array<PerClassMetrics, kClassCount> classes{};
    double accuracy = 0.0;
};

// A zero denominator gives 0. Throws EmptyMatrix.
ClassMetrics class_metrics(const ConfusionMatrix& cm);

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
};

struct RocCurve {
    std::vector<RocPoint> points;  // (0,0) … (1,1)
    double auc = 0.0;
};

// One-vs-rest sweep over distinct score thresholds; a block of tied scores
// becomes one diagonal segment. Throws LengthMismatch, DegenerateClass.
RocCurve roc_curve(std::span<const ClassLabel> truth, std::span<const Probabilities> scores, ClassLabel positive);
RocCurve binary_roc(std::span<const std::uint8_t> positive, std::span<const double> scores);

enum class AucAverage { Macro, Micro };

// Mean of one-vs-rest AUCs over the classes present in truth. Throws
// DegenerateClass when fewer than two classes are present.
double macro_auc(std::span<const ClassLabel> truth, std::span<const Probabilities> scores);
// AUC of all (record, class) pairs pooled into one binary problem.
double micro_auc(std::span<const ClassLabel> truth, std::span<const Probabilities> scores);

struct EvalOptions {
    std::size_t repeats = 3;
    AucAverage average = AucAverage::Macro;
};

struct EvalReport {
    EstimatorSpec spec;
    ConfusionMatrix confusion;
    ClassMetrics metrics;
    // Curves exist only for classes with both positives and negatives.
    std::array<std::optional<RocCurve>, kClassCount> roc;
    std::optional<double> macro_auc;  // absent with fewer than two classes
    std::optional<double> micro_auc;
    AucAverage average = AucAverage::Macro;
    double fit_seconds = 0.0;
    std::vector<double> predict_seconds;  // one entry per repeat
    std::size_t train_rows = 0;
    std::size_t test_rows = 0;

    std::string name() const { return std::string(kind_name(spec.kind)); }
    double auc() const;  // the selected average, NaN when absent
    double mean_predict_seconds() const;
    double execution_seconds() const { return fit_seconds + mean_predict_seconds(); }
};

// Scores the whole test set `repeats` times; the first run's outputs feed the
// metrics. Throws NotLabeled, EmptyDataset, InvalidArgument (repeats = 0).
EvalReport evaluate(const TrainedModel& m, const Dataset& test, const EvalOptions& options = {});

struct ComparisonTable {
    std::vector<EvalReport> rows;  // accuracy desc, then AUC desc, then name
};

ComparisonTable compare_models(std::vector<EvalReport> reports);

struct ExportOptions {
    // Drop wall-clock fields so repeated runs export identical bytes.
    bool include_timing = true;
};

nlohmann::json to_json(const EvalReport& r, const ExportOptions& options = {});
nlohmann::json to_json(const ComparisonTable& t, const ExportOptions& options = {});

// Per-class precision/recall/F1 at two decimals.
std::string format_class_table(const EvalReport& r);
// One row per model: accuracy, AUC and execution time at four decimals.
std::string format_comparison(const ComparisonTable& t, const ExportOptions& options = {});

// Writes report.json, confusion_matrix.csv, metrics.csv and roc_<class>.csv
// into dir (created if missing). Throws IoFailure.
void export_report(const EvalReport& r, const std::string& dir, const ExportOptions& options = {});
// Writes comparison.csv, comparison.json, accuracy.csv and one
// confusion_<model>.csv per row.
void export_comparison(const ComparisonTable& t, const std::string& dir, const ExportOptions& options = {});
// label_counts.csv: one row per class.
void export_label_counts(const DatasetSummary& s, const std::string& dir);

// Fixed-point rendering used by every export.
std::string fixed(double v, int decimals);

}  // namespace fsnt
