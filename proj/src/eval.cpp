#include "fsnt/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "fsnt/error.hpp"

namespace fsnt {

std::uint64_t ConfusionMatrix::total() const noexcept {
    std::uint64_t t = 0;
    for (const auto& row : counts)
        for (const auto v : row) t += v;
    return t;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t c) const noexcept {
    return std::accumulate(counts[c].begin(), counts[c].end(), std::uint64_t{0});
}

std::uint64_t ConfusionMatrix::col_sum(std::size_t c) const noexcept {
    std::uint64_t s = 0;
    for (const auto& row : counts) s += row[c];
    return s;
}

std::uint64_t ConfusionMatrix::trace() const noexcept {
    std::uint64_t s = 0;
    for (std::size_t c = 0; c < kClassCount; ++c) s += counts[c][c];
    return s;
}

namespace {

void check_lengths(std::size_t a, std::size_t b) {
    if (a != b) {
        throw Error(ErrorCode::LengthMismatch,
                    "truth has " + std::to_string(a) + " entries, predictions " + std::to_string(b));
    }
    if (a == 0) throw Error(ErrorCode::LengthMismatch, "no records to evaluate");
}

}  // namespace

ConfusionMatrix confusion_matrix(std::span<const ClassLabel> truth, std::span<const ClassLabel> predicted) {
    check_lengths(truth.size(), predicted.size());
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        ++cm.counts[class_id(truth[i])][class_id(predicted[i])];
    }
    return cm;
}

ConfusionMatrix confusion_matrix(std::span<const int> truth, std::span<const int> predicted) {
    check_lengths(truth.size(), predicted.size());
    std::vector<ClassLabel> t(truth.size());
    std::vector<ClassLabel> p(predicted.size());
    for (std::size_t i = 0; i < truth.size(); ++i) {
        t[i] = class_from_id(truth[i]);
        p[i] = class_from_id(predicted[i]);
    }
    return confusion_matrix(t, p);
}

ClassMetrics class_metrics(const ConfusionMatrix& cm) {
    const auto total = cm.total();
    if (total == 0) throw Error(ErrorCode::EmptyMatrix, "confusion matrix has no records");
    ClassMetrics m;
    for (std::size_t c = 0; c < kClassCount; ++c) {
        const auto tp = static_cast<double>(cm.counts[c][c]);
        const auto rows = cm.row_sum(c);
        const auto cols = cm.col_sum(c);
        auto& out = m.classes[c];
        out.support = rows;
        out.precision = cols ? tp / static_cast<double>(cols) : 0.0;
        out.recall = rows ? tp / static_cast<double>(rows) : 0.0;
        // 2PR/(P+R) reduces to 2tp/(rows+cols); this form avoids rounding twice.
        out.f1 = (tp > 0.0) ? 2.0 * tp / static_cast<double>(rows + cols) : 0.0;
    }
    m.accuracy = static_cast<double>(cm.trace()) / static_cast<double>(total);
    return m;
}

RocCurve binary_roc(std::span<const std::uint8_t> positive, std::span<const double> scores) {
    if (positive.size() != scores.size()) {
        throw Error(ErrorCode::LengthMismatch, "labels and scores differ in length");
    }
    std::size_t pos = 0;
    for (const auto p : positive) pos += p ? 1 : 0;
    const std::size_t neg = positive.size() - pos;
    if (pos == 0 || neg == 0) {
        throw Error(ErrorCode::DegenerateClass, "need at least one positive and one negative record");
    }

    std::vector<std::uint32_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });

    RocCurve curve;
    curve.points.push_back({0.0, 0.0});
    std::size_t tp = 0;
    std::size_t fp = 0;
    double area = 0.0;
    for (std::size_t i = 0; i < order.size();) {
        const double s = scores[order[i]];
        const std::size_t prev_tp = tp;
        const std::size_t prev_fp = fp;
        for (; i < order.size() && scores[order[i]] == s; ++i) {
            if (positive[order[i]]) {
                ++tp;
            } else {
                ++fp;
            }
        }
        // Trapezoid in count units, normalized once at the end.
        area += static_cast<double>(fp - prev_fp) * static_cast<double>(tp + prev_tp) / 2.0;
        curve.points.push_back(
            {static_cast<double>(fp) / static_cast<double>(neg), static_cast<double>(tp) / static_cast<double>(pos)});
    }
    curve.auc = area / (static_cast<double>(pos) * static_cast<double>(neg));
    return curve;
}

RocCurve roc_curve(std::span<const ClassLabel> truth, std::span<const Probabilities> scores, ClassLabel positive) {
    if (truth.size() != scores.size()) throw Error(ErrorCode::LengthMismatch, "truth and scores differ in length");
    std::vector<std::uint8_t> is_pos(truth.size());
    std::vector<double> s(truth.size());
    for (std::size_t i = 0; i < truth.size(); ++i) {
        is_pos[i] = truth[i] == positive;
        s[i] = scores[i][class_id(positive)];
    }
    try {
        return binary_roc(is_pos, s);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::DegenerateClass) throw;
        throw Error(ErrorCode::DegenerateClass,
                    "class " + std::to_string(class_id(positive)) + " lacks positives or negatives");
    }
}

double macro_auc(std::span<const ClassLabel> truth, std::span<const Probabilities> scores) {
    if (truth.size() != scores.size()) throw Error(ErrorCode::LengthMismatch, "truth and scores differ in length");
    std::array<bool, kClassCount> present{};
    for (const auto t : truth) present[class_id(t)] = true;
    const auto n_present = std::count(present.begin(), present.end(), true);
    if (n_present < 2) {
        throw Error(ErrorCode::DegenerateClass, "macro AUC needs at least two classes in the truth labels");
    }
    double sum = 0.0;
    for (std::size_t c = 0; c < kClassCount; ++c) {
        if (present[c]) sum += roc_curve(truth, scores, static_cast<ClassLabel>(c)).auc;
    }
    return sum / static_cast<double>(n_present);
}

double micro_auc(std::span<const ClassLabel> truth, std::span<const Probabilities> scores) {
    if (truth.size() != scores.size()) throw Error(ErrorCode::LengthMismatch, "truth and scores differ in length");
    std::vector<std::uint8_t> is_pos;
    std::vector<double> s;
    is_pos.reserve(truth.size() * kClassCount);
    s.reserve(truth.size() * kClassCount);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        for (std::size_t c = 0; c < kClassCount; ++c) {
            is_pos.push_back(class_id(truth[i]) == static_cast<int>(c));
            s.push_back(scores[i][c]);
        }
    }
    return binary_roc(is_pos, s).auc;
}

double EvalReport::auc() const {
    const auto& v = average == AucAverage::Macro ? macro_auc : micro_auc;
    return v ? *v : std::numeric_limits<double>::quiet_NaN();
}

double EvalReport::mean_predict_seconds() const {
    if (predict_seconds.empty()) return 0.0;
    return std::accumulate(predict_seconds.begin(), predict_seconds.end(), 0.0) /
           static_cast<double>(predict_seconds.size());
}

EvalReport evaluate(const TrainedModel& m, const Dataset& test, const EvalOptions& options) {
    if (!test.labeled()) throw Error(ErrorCode::NotLabeled, "test data must be labeled");
    if (test.empty()) throw Error(ErrorCode::EmptyDataset, "test set is empty");
    if (options.repeats == 0) throw Error(ErrorCode::InvalidArgument, "repeats must be at least 1");

    EvalReport r;
    r.spec = m.spec();
    r.average = options.average;
    r.fit_seconds = m.metadata().fit_seconds;
    r.train_rows = m.metadata().train_rows;
    r.test_rows = test.size();

    std::vector<Probabilities> probs;
    for (std::size_t rep = 0; rep < options.repeats; ++rep) {
        const auto start = std::chrono::steady_clock::now();
        auto out = predict_proba_batch(m, test);
        r.predict_seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
        if (rep == 0) probs = std::move(out);
    }

    std::vector<ClassLabel> predicted(probs.size());
    std::transform(probs.begin(), probs.end(), predicted.begin(), [](const auto& p) { return argmax(p); });
    r.confusion = confusion_matrix(test.labels(), predicted);
    r.metrics = class_metrics(r.confusion);

    std::size_t classes_present = 0;
    for (std::size_t c = 0; c < kClassCount; ++c) {
        const auto rows = r.confusion.row_sum(c);
        if (rows > 0) ++classes_present;
        if (rows > 0 && rows < test.size()) r.roc[c] = roc_curve(test.labels(), probs, static_cast<ClassLabel>(c));
    }
    if (classes_present >= 2) {
        double sum = 0.0;
        for (const auto& c : r.roc)
            if (c) sum += c->auc;
        r.macro_auc = sum / static_cast<double>(classes_present);
        r.micro_auc = micro_auc(test.labels(), probs);
    }
    return r;
}

ComparisonTable compare_models(std::vector<EvalReport> reports) {
    auto auc_key = [](const EvalReport& r) {
        const double a = r.auc();
        return std::isnan(a) ? -1.0 : a;
    };
    std::stable_sort(reports.begin(), reports.end(), [&](const EvalReport& a, const EvalReport& b) {
        if (a.metrics.accuracy != b.metrics.accuracy) return a.metrics.accuracy > b.metrics.accuracy;
        if (auc_key(a) != auc_key(b)) return auc_key(a) > auc_key(b);
        return a.name() < b.name();
    });
    return ComparisonTable{std::move(reports)};
}

std::string fixed(double v, int decimals) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    // "-0.0000" reads as noise in a report.
    std::string s(buf);
    if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
    return s;
}

namespace {

nlohmann::json rounded(double v, int decimals) {
    if (!std::isfinite(v)) return nullptr;
    return nlohmann::json::parse(fixed(v, decimals));
}

nlohmann::json optional_metric(const std::optional<double>& v) {
    return v ? rounded(*v, 6) : nlohmann::json(nullptr);
}

nlohmann::json confusion_json(const ConfusionMatrix& cm) {
    auto rows = nlohmann::json::array();
    for (const auto& row : cm.counts) rows.push_back(row);
    return rows;
}

std::string confusion_csv(const ConfusionMatrix& cm) {
    std::ostringstream out;
    out << "true\\predicted";
    for (std::size_t c = 0; c < kClassCount; ++c) out << ',' << class_name(static_cast<ClassLabel>(c));
    out << '\n';
    for (std::size_t t = 0; t < kClassCount; ++t) {
        out << class_name(static_cast<ClassLabel>(t));
        for (const auto v : cm.counts[t]) out << ',' << v;
        out << '\n';
    }
    return out.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write '" + path.string() + "'");
    out << content;
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for '" + path.string() + "'");
}

std::filesystem::path prepare_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) {
        throw Error(ErrorCode::IoFailure, "cannot create directory '" + dir + "'");
    }
    return dir;
}

std::string slug(ClassLabel c) {
    std::string s(class_name(c));
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) {
        return ch == '-' ? '_' : static_cast<char>(std::tolower(ch));
    });
    return s;
}

}  // namespace

nlohmann::json to_json(const EvalReport& r, const ExportOptions& options) {
    nlohmann::json j;
    j["model"] = r.name();
    j["seed"] = r.spec.seed;
    j["hyperparameters"] = r.spec.hyperparameters;
    j["train_rows"] = r.train_rows;
    j["test_rows"] = r.test_rows;
    j["accuracy"] = rounded(r.metrics.accuracy, 6);
    j["auc_average"] = r.average == AucAverage::Macro ? "macro" : "micro";
    j["auc"] = rounded(r.auc(), 6);
    j["macro_auc"] = optional_metric(r.macro_auc);
    j["micro_auc"] = optional_metric(r.micro_auc);
    auto classes = nlohmann::json::array();
    for (std::size_t c = 0; c < kClassCount; ++c) {
        const auto& m = r.metrics.classes[c];
        nlohmann::json row;
        row["class"] = c;
        row["label"] = class_name(static_cast<ClassLabel>(c));
        row["precision"] = rounded(m.precision, 6);
        row["recall"] = rounded(m.recall, 6);
        row["f1"] = rounded(m.f1, 6);
        row["support"] = m.support;
        row["auc"] = r.roc[c] ? rounded(r.roc[c]->auc, 6) : nlohmann::json(nullptr);
        classes.push_back(std::move(row));
    }
    j["classes"] = std::move(classes);
    j["confusion_matrix"] = confusion_json(r.confusion);
    if (options.include_timing) {
        j["fit_seconds"] = rounded(r.fit_seconds, 6);
        j["predict_seconds"] = rounded(r.mean_predict_seconds(), 6);
        j["execution_seconds"] = rounded(r.execution_seconds(), 6);
        j["repeats"] = r.predict_seconds.size();
    }
    return j;
}

nlohmann::json to_json(const ComparisonTable& t, const ExportOptions& options) {
    auto rows = nlohmann::json::array();
    for (const auto& r : t.rows) rows.push_back(to_json(r, options));
    return nlohmann::json{{"models", std::move(rows)}};
}

std::string format_class_table(const EvalReport& r) {
    std::ostringstream out;
    out << r.name() << "  accuracy " << fixed(r.metrics.accuracy, 2) << '\n';
    out << "class       Pre.  Re.   F1.   support\n";
    for (std::size_t c = 0; c < kClassCount; ++c) {
        const auto& m = r.metrics.classes[c];
        char line[96];
        std::snprintf(line, sizeof line, "%-10s  %-4s  %-4s  %-4s  %llu\n",
                      std::string(class_name(static_cast<ClassLabel>(c))).c_str(), fixed(m.precision, 2).c_str(),
                      fixed(m.recall, 2).c_str(), fixed(m.f1, 2).c_str(),
                      static_cast<unsigned long long>(m.support));
        out << line;
    }
    return out.str();
}

std::string format_comparison(const ComparisonTable& t, const ExportOptions& options) {
    std::ostringstream out;
    out << "model     accuracy  auc     ";
    if (options.include_timing) out << "execution_s";
    out << '\n';
    for (const auto& r : t.rows) {
        char line[128];
        std::snprintf(line, sizeof line, "%-8s  %-8s  %-6s  ", r.name().c_str(), fixed(r.metrics.accuracy, 4).c_str(),
                      fixed(r.auc(), 4).c_str());
        out << line;
        if (options.include_timing) out << fixed(r.execution_seconds(), 4);
        out << '\n';
    }
    return out.str();
}

void export_report(const EvalReport& r, const std::string& dir, const ExportOptions& options) {
    const auto base = prepare_dir(dir);
    write_file(base / "report.json", to_json(r, options).dump(2) + "\n");
    write_file(base / "confusion_matrix.csv", confusion_csv(r.confusion));

    std::ostringstream metrics;
    metrics << "class,label,precision,recall,f1,support\n";
    for (std::size_t c = 0; c < kClassCount; ++c) {
        const auto& m = r.metrics.classes[c];
        metrics << c << ',' << class_name(static_cast<ClassLabel>(c)) << ',' << fixed(m.precision, 4) << ','
                << fixed(m.recall, 4) << ',' << fixed(m.f1, 4) << ',' << m.support << '\n';
    }
    metrics << "accuracy,," << fixed(r.metrics.accuracy, 4) << ",,,\n";
    write_file(base / "metrics.csv", metrics.str());

    for (std::size_t c = 0; c < kClassCount; ++c) {
        if (!r.roc[c]) continue;
        std::ostringstream roc;
        roc << "fpr,tpr\n";
        for (const auto& p : r.roc[c]->points) roc << fixed(p.fpr, 6) << ',' << fixed(p.tpr, 6) << '\n';
        write_file(base / ("roc_" + slug(static_cast<ClassLabel>(c)) + ".csv"), roc.str());
    }
}

void export_comparison(const ComparisonTable& t, const std::string& dir, const ExportOptions& options) {
    const auto base = prepare_dir(dir);
    std::ostringstream table;
    table << "model,accuracy,auc";
    if (options.include_timing) table << ",fit_seconds,predict_seconds,execution_seconds";
    table << '\n';
    std::ostringstream bars;
    bars << "model,accuracy\n";
    for (const auto& r : t.rows) {
        table << r.name() << ',' << fixed(r.metrics.accuracy, 4) << ',' << fixed(r.auc(), 4);
        if (options.include_timing) {
            table << ',' << fixed(r.fit_seconds, 4) << ',' << fixed(r.mean_predict_seconds(), 4) << ','
                  << fixed(r.execution_seconds(), 4);
        }
        table << '\n';
        bars << r.name() << ',' << fixed(r.metrics.accuracy, 4) << '\n';
        std::string lower = r.name();
        std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char ch) { return std::tolower(ch); });
        write_file(base / ("confusion_" + lower + ".csv"), confusion_csv(r.confusion));
    }
    write_file(base / "comparison.csv", table.str());
    write_file(base / "accuracy.csv", bars.str());
    write_file(base / "comparison.json", to_json(t, options).dump(2) + "\n");
}

void export_label_counts(const DatasetSummary& s, const std::string& dir) {
    const auto base = prepare_dir(dir);
    std::ostringstream out;
    out << "class,label,count\n";
    for (std::size_t c = 0; c < kClassCount; ++c) {
        out << c << ',' << class_name(static_cast<ClassLabel>(c)) << ',' << s.class_counts[c] << '\n';
    }
    write_file(base / "label_counts.csv", out.str());
}

}  // namespace fsnt
