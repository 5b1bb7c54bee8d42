#include "fsnt/flowdata.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "fsnt/error.hpp"
#include "fsnt/rng.hpp"

namespace fsnt {

namespace {

constexpr std::array<std::string_view, kClassCount> kClassNames = {
    "BENIGN", "DDoS-DNS", "DDoS-NTP", "DDoS-UDP"};

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) ==
                      std::tolower(static_cast<unsigned char>(y));
           });
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return out;
}

std::optional<double> parse_cell(std::string_view cell) {
    if (cell.empty()) return std::numeric_limits<double>::quiet_NaN();
    if (cell.front() == '+') cell.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc() || ptr != cell.data() + cell.size()) {
        // from_chars reports out-of-range for overflowing literals; treat as ±inf.
        if (ec == std::errc::result_out_of_range) {
            return cell.front() == '-' ? -std::numeric_limits<double>::infinity()
                                       : std::numeric_limits<double>::infinity();
        }
        return std::nullopt;
    }
    return value;
}

std::uint64_t canonical_bits(double v) noexcept {
    if (v == 0.0) v = 0.0;  // fold -0 into +0 so hashing agrees with ==
    return std::bit_cast<std::uint64_t>(v);
}

}  // namespace

ClassLabel class_from_id(int id) {
    if (id < 0 || id >= static_cast<int>(kClassCount)) {
        throw Error(ErrorCode::LabelOutOfRange, "class id " + std::to_string(id));
    }
    return static_cast<ClassLabel>(id);
}

std::string_view class_name(ClassLabel label) noexcept {
    return kClassNames[static_cast<std::size_t>(label)];
}

ClassLabel encode_label(std::string_view raw) {
    const auto value = trim(raw);
    for (std::size_t i = 0; i < kClassCount; ++i) {
        if (iequals(value, kClassNames[i])) return static_cast<ClassLabel>(i);
    }
    throw Error(ErrorCode::UnknownLabel, "'" + std::string(raw) + "'");
}

FeatureSchema::FeatureSchema(std::vector<std::string> names) : names_(std::move(names)) {
    std::unordered_set<std::string_view> seen;
    for (const auto& n : names_) {
        if (!seen.insert(n).second) {
            throw Error(ErrorCode::InvalidArgument, "duplicate feature name '" + n + "'");
        }
    }
}

const FeatureSchema& FeatureSchema::canonical() {
    static const FeatureSchema schema({
        "Source Port",
        "Destination Port",
        "Protocol",
        "Flow Duration",
        "Total Fwd Packets",
        "Total Backward Packets",
        "Total Length of Fwd Packets",
        "Total Length of Bwd Packets",
        "Fwd Packet Length Max",
        "Fwd Packet Length Min",
        "Fwd Packet Length Mean",
        "Fwd Packet Length Std",
        "Bwd Packet Length Max",
        "Bwd Packet Length Min",
        "Bwd Packet Length Mean",
        "Flow Bytes/s",
        "Flow Packets/s",
        "Flow IAT Mean",
        "Flow IAT Std",
        "Flow IAT Max",
        "Flow IAT Min",
        "Fwd IAT Mean",
        "Bwd IAT Mean",
        "Packet Length Mean",
    });
    return schema;
}

std::optional<std::size_t> FeatureSchema::index_of(std::string_view name) const {
    const auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - names_.begin());
}

Dataset::Dataset(FeatureSchema schema, bool labeled)
    : schema_(std::move(schema)), labeled_(labeled) {}

FlowRecord Dataset::record(std::size_t i) const {
    FlowRecord r;
    const auto values = row(i);
    r.values.assign(values.begin(), values.end());
    if (labeled_) r.label = labels_[i];
    return r;
}

void Dataset::reserve(std::size_t rows) {
    values_.reserve(rows * width());
    if (labeled_) labels_.reserve(rows);
}

void Dataset::add(std::span<const double> values, std::optional<ClassLabel> label) {
    if (values.size() != width()) {
        throw Error(ErrorCode::SchemaMismatch, "record has " + std::to_string(values.size()) +
                                                   " values, schema has " +
                                                   std::to_string(width()));
    }
    if (label.has_value() != labeled_) {
        throw Error(ErrorCode::NotLabeled, "label presence does not match dataset");
    }
    values_.insert(values_.end(), values.begin(), values.end());
    if (label) labels_.push_back(*label);
    ++rows_;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
    Dataset out(schema_, labeled_);
    out.reserve(indices.size());
    for (const auto i : indices) {
        out.add(row(i), labeled_ ? std::optional(labels_[i]) : std::nullopt);
    }
    return out;
}

Dataset read_csv(std::istream& in, SchemaMode mode, const FeatureSchema& required) {
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::EmptyFile, "no header row");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

    // Owned copies: `line` is reused for the data rows below.
    std::vector<std::string> header;
    for (const auto f : split_fields(line)) header.emplace_back(f);
    std::optional<std::size_t> label_col;
    std::vector<std::string> file_features;
    std::vector<std::size_t> file_feature_cols;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (iequals(header[c], "Label")) {
            label_col = c;
        } else {
            file_features.emplace_back(header[c]);
            file_feature_cols.push_back(c);
        }
    }

    auto find_col = [&](const std::string& name) -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < file_features.size(); ++i) {
            if (file_features[i] == name) return file_feature_cols[i];
        }
        return std::nullopt;
    };
    for (const auto& name : required.names()) {
        if (!find_col(name)) throw Error(ErrorCode::MissingColumn, "'" + name + "'");
    }

    FeatureSchema schema;
    std::vector<std::size_t> source_cols;
    if (mode == SchemaMode::Strict) {
        schema = FeatureSchema(file_features);
        source_cols = file_feature_cols;
    } else {
        schema = required;
        for (const auto& name : required.names()) source_cols.push_back(*find_col(name));
    }

    Dataset d(std::move(schema), label_col.has_value());
    std::vector<double> values(source_cols.size());
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto fields = split_fields(line);
        for (std::size_t i = 0; i < source_cols.size(); ++i) {
            const auto col = source_cols[i];
            const auto cell = col < fields.size() ? fields[col] : std::string_view{};
            const auto parsed = parse_cell(cell);
            if (!parsed) {
                throw Error(ErrorCode::UnparsableCell, "row " + std::to_string(row) + ", column '" +
                                                           header[col] + "': '" +
                                                           std::string(cell) + "'");
            }
            values[i] = *parsed;
        }
        std::optional<ClassLabel> label;
        if (label_col) {
            const auto cell = *label_col < fields.size() ? fields[*label_col] : std::string_view{};
            label = encode_label(cell);
        }
        d.add(values, label);
    }
    if (d.empty()) throw Error(ErrorCode::EmptyFile, "no data rows");
    return d;
}

Dataset load_csv(const std::string& path, SchemaMode mode, const FeatureSchema& required) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open '" + path + "'");
    return read_csv(in, mode, required);
}

void write_csv(const Dataset& d, std::ostream& out) {
    const auto& names = d.schema().names();
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i) out << ',';
        out << names[i];
    }
    if (d.labeled()) out << (names.empty() ? "" : ",") << "Label";
    out << '\n';

    std::array<char, 64> buf{};
    for (std::size_t r = 0; r < d.size(); ++r) {
        const auto row = d.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out << ',';
            const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), row[c]);
            out.write(buf.data(), res.ptr - buf.data());
        }
        if (d.labeled()) out << (row.empty() ? "" : ",") << class_name(d.label(r));
        out << '\n';
    }
}

void write_csv(const Dataset& d, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write '" + path + "'");
    write_csv(d, out);
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for '" + path + "'");
}

std::size_t RowKeyHash::operator()(const RowKey& key) const noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const double v : key.data->row(key.row)) {
        h = splitmix64(h ^ canonical_bits(v));
    }
    if (key.data->labeled()) h = splitmix64(h ^ static_cast<std::uint64_t>(key.data->label(key.row)));
    return static_cast<std::size_t>(h);
}

bool RowKeyEqual::operator()(const RowKey& a, const RowKey& b) const noexcept {
    const auto ra = a.data->row(a.row);
    const auto rb = b.data->row(b.row);
    if (!std::equal(ra.begin(), ra.end(), rb.begin(), rb.end())) return false;
    if (a.data->labeled() != b.data->labeled()) return false;
    return !a.data->labeled() || a.data->label(a.row) == b.data->label(b.row);
}

DatasetSummary summarize(const Dataset& d) {
    DatasetSummary s;
    s.records = d.size();
    s.features.resize(d.width());
    for (auto& f : s.features) {
        f.min = std::numeric_limits<double>::infinity();
        f.max = -std::numeric_limits<double>::infinity();
    }
    std::unordered_set<RowKey, RowKeyHash, RowKeyEqual> seen;
    seen.reserve(d.size());
    for (std::size_t r = 0; r < d.size(); ++r) {
        if (d.labeled()) ++s.class_counts[static_cast<std::size_t>(d.label(r))];
        const auto row = d.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) {
            const double v = row[c];
            if (!std::isfinite(v)) {
                ++s.non_finite_cells;
                continue;
            }
            auto& f = s.features[c];
            f.min = std::min(f.min, v);
            f.max = std::max(f.max, v);
            f.mean += v;
            ++f.finite;
        }
        if (!seen.insert(RowKey{&d, r}).second) ++s.duplicate_count;
    }
    for (auto& f : s.features) {
        if (f.finite) {
            f.mean /= static_cast<double>(f.finite);
        } else {
            f.min = f.max = f.mean = 0.0;
        }
    }
    return s;
}

Dataset stratified_sample(const Dataset& d, std::size_t n, std::uint64_t seed) {
    if (!d.labeled()) throw Error(ErrorCode::NotLabeled, "stratified_sample needs labels");
    if (n > d.size()) {
        throw Error(ErrorCode::SampleTooLarge,
                    std::to_string(n) + " > " + std::to_string(d.size()) + " records");
    }
    std::array<std::vector<std::size_t>, kClassCount> by_class;
    for (std::size_t r = 0; r < d.size(); ++r) {
        by_class[static_cast<std::size_t>(d.label(r))].push_back(r);
    }

    // Largest-remainder allocation; ties go to the lower class id.
    const double total = static_cast<double>(d.size());
    std::array<std::size_t, kClassCount> take{};
    std::array<double, kClassCount> remainder{};
    std::size_t allocated = 0;
    for (std::size_t c = 0; c < kClassCount; ++c) {
        const double exact = static_cast<double>(by_class[c].size()) * static_cast<double>(n) / total;
        take[c] = static_cast<std::size_t>(std::floor(exact));
        remainder[c] = exact - static_cast<double>(take[c]);
        allocated += take[c];
    }
    std::array<std::size_t, kClassCount> order{0, 1, 2, 3};
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t i = 0; allocated < n && i < kClassCount; ++i) {
        const auto c = order[i];
        if (take[c] < by_class[c].size()) {
            ++take[c];
            ++allocated;
        }
    }

    Rng rng(seed);
    std::vector<std::size_t> chosen;
    chosen.reserve(n);
    for (std::size_t c = 0; c < kClassCount; ++c) {
        auto idx = by_class[c];
        std::shuffle(idx.begin(), idx.end(), rng);
        chosen.insert(chosen.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take[c]));
    }
    std::shuffle(chosen.begin(), chosen.end(), rng);
    return d.subset(chosen);
}

}  // namespace fsnt
