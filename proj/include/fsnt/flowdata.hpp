#pragma once

// Flow-record data model, CICFlowMeter-style CSV ingestion and the class
// taxonomy (BENIGN plus three reflection/flood attack families).

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fsnt {

enum class ClassLabel : std::uint8_t {
    Benign = 0,
    DdosDns = 1,
    DdosNtp = 2,
    DdosUdp = 3,
};

inline constexpr std::size_t kClassCount = 4;

constexpr int class_id(ClassLabel label) noexcept { return static_cast<int>(label); }
constexpr bool is_attack(ClassLabel label) noexcept { return label != ClassLabel::Benign; }

// Throws LabelOutOfRange for ids outside 0..3.
ClassLabel class_from_id(int id);
std::string_view class_name(ClassLabel label) noexcept;

// Trimmed, case-insensitive match against the four class names.
ClassLabel encode_label(std::string_view raw);

class FeatureSchema {
public:
    FeatureSchema() = default;
    explicit FeatureSchema(std::vector<std::string> names);

    // The 24 traffic features every downstream module works with by default.
    static const FeatureSchema& canonical();

    std::size_t count() const noexcept { return names_.size(); }
    const std::vector<std::string>& names() const noexcept { return names_; }
    const std::string& name(std::size_t i) const { return names_.at(i); }
    std::optional<std::size_t> index_of(std::string_view name) const;

    bool operator==(const FeatureSchema&) const = default;

private:
    std::vector<std::string> names_;
};

struct FlowRecord {
    std::vector<double> values;
    std::optional<ClassLabel> label;
};

// Row-major table of flow records sharing one schema. Labels are either
// present for every record or for none.
class Dataset {
public:
    Dataset() = default;
    Dataset(FeatureSchema schema, bool labeled);

    const FeatureSchema& schema() const noexcept { return schema_; }
    std::size_t size() const noexcept { return rows_; }
    std::size_t width() const noexcept { return schema_.count(); }
    bool empty() const noexcept { return rows_ == 0; }
    bool labeled() const noexcept { return labeled_; }

    std::span<const double> row(std::size_t i) const {
        return {values_.data() + i * width(), width()};
    }
    double at(std::size_t r, std::size_t c) const { return values_[r * width() + c]; }
    ClassLabel label(std::size_t i) const { return labels_[i]; }
    std::span<const ClassLabel> labels() const noexcept { return labels_; }
    std::span<const double> values() const noexcept { return values_; }
    FlowRecord record(std::size_t i) const;

    void reserve(std::size_t rows);
    // Throws SchemaMismatch on a width mismatch and NotLabeled when the label
    // presence disagrees with the dataset.
    void add(std::span<const double> values, std::optional<ClassLabel> label);
    void add(const FlowRecord& record) { add(record.values, record.label); }

    Dataset subset(std::span<const std::size_t> indices) const;

private:
    FeatureSchema schema_;
    bool labeled_ = false;
    std::size_t rows_ = 0;
    std::vector<double> values_;
    std::vector<ClassLabel> labels_;
};

enum class SchemaMode {
    // Keep every feature column of the file in file order.
    Strict,
    // Keep only the target schema's columns, in target order.
    ProjectToCanonical,
};

// In both modes every name of `required` must appear in the header. An
// empty cell or one of inf/Infinity/NaN parses to a non-finite value.
Dataset read_csv(std::istream& in, SchemaMode mode,
                 const FeatureSchema& required = FeatureSchema::canonical());
Dataset load_csv(const std::string& path, SchemaMode mode,
                 const FeatureSchema& required = FeatureSchema::canonical());

// 17 significant digits, so load(write(d)) == d bit for bit on finite data.
void write_csv(const Dataset& d, std::ostream& out);
void write_csv(const Dataset& d, const std::string& path);

struct FeatureSummary {
    double min = 0.0;
    double max = 0.0;
    double mean = 0.0;
    std::size_t finite = 0;
};

struct DatasetSummary {
    std::size_t records = 0;
    std::array<std::size_t, kClassCount> class_counts{};
    std::vector<FeatureSummary> features;
    std::size_t non_finite_cells = 0;
    std::size_t duplicate_count = 0;
};

DatasetSummary summarize(const Dataset& d);

// Per-class proportional allocation (largest remainder) followed by a
// seeded shuffle of the selection.
Dataset stratified_sample(const Dataset& d, std::size_t n, std::uint64_t seed);

// Hashing/equality of a (values, label) tuple, shared by dedup and summarize.
struct RowKey {
    const Dataset* data;
    std::size_t row;
};
struct RowKeyHash {
    std::size_t operator()(const RowKey& key) const noexcept;
};
struct RowKeyEqual {
    bool operator()(const RowKey& a, const RowKey& b) const noexcept;
};

}  // namespace fsnt
