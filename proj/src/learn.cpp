#include "fsnt/learn.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <limits>

#include "fsnt/error.hpp"
#include "fsnt/estimators.hpp"
#include "fsnt/kernels.hpp"

namespace fsnt {

namespace {

struct Limit {
    double min;
    double max;
    bool integer;
};

const std::map<std::string, Limit>& limits_for(EstimatorKind kind) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    static const std::map<EstimatorKind, std::map<std::string, Limit>> table = {
        {EstimatorKind::LR,
         {{"learning_rate", {0.0, inf, false}},
          {"l2", {0.0, inf, false}},
          {"max_epochs", {1, 1e7, true}},
          {"tolerance", {0.0, inf, false}}}},
        {EstimatorKind::NB, {{"var_smoothing", {0.0, inf, false}}}},
        {EstimatorKind::KNN, {{"k", {1, 1e6, true}}}},
        {EstimatorKind::DT,
         {{"max_depth", {1, 64, true}},
          {"min_samples_leaf", {1, 1e9, true}},
          {"min_impurity_decrease", {0.0, inf, false}}}},
        {EstimatorKind::RF,
         {{"trees", {1, 1e5, true}},
          {"max_depth", {1, 64, true}},
          {"min_samples_leaf", {1, 1e9, true}},
          {"bootstrap", {0, 1, true}},
          {"max_features", {0, 1e6, true}}}},
        {EstimatorKind::ADABOOST, {{"rounds", {1, 1e5, true}}}},
        {EstimatorKind::GBT,
         {{"rounds", {0, 1e5, true}},
          {"learning_rate", {0.0, inf, false}},
          {"max_depth", {1, 64, true}},
          {"lambda", {0.0, inf, false}}}},
        {EstimatorKind::SVM, {{"lambda", {0.0, inf, false}}, {"epochs", {1, 1e6, true}}}},
    };
    return table.at(kind);
}

// Values that must be strictly positive even though the limit table allows 0.
bool strictly_positive(EstimatorKind kind, const std::string& key) {
    return (kind == EstimatorKind::LR && key == "learning_rate") ||
           (kind == EstimatorKind::GBT && key == "learning_rate") ||
           (kind == EstimatorKind::SVM && key == "lambda");
}

}  // namespace

std::string_view kind_name(EstimatorKind kind) noexcept {
    switch (kind) {
        case EstimatorKind::LR: return "LR";
        case EstimatorKind::NB: return "NB";
        case EstimatorKind::KNN: return "KNN";
        case EstimatorKind::DT: return "DT";
        case EstimatorKind::RF: return "RF";
        case EstimatorKind::ADABOOST: return "ADABOOST";
        case EstimatorKind::GBT: return "GBT";
        case EstimatorKind::SVM: return "SVM";
    }
    return "?";
}

EstimatorKind parse_kind(std::string_view name) {
    std::string upper(name);
    std::transform(upper.begin(), upper.end(), upper.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    if (upper == "XGBOOST") return EstimatorKind::GBT;
    for (const auto k : kAllKinds) {
        if (kind_name(k) == upper) return k;
    }
    throw Error(ErrorCode::InvalidArgument, "unknown estimator '" + std::string(name) + "'");
}

Hyperparameters default_hyperparameters(EstimatorKind kind) {
    switch (kind) {
        case EstimatorKind::LR:
            return {{"learning_rate", 0.1}, {"l2", 1e-4}, {"max_epochs", 500}, {"tolerance", 1e-7}};
        case EstimatorKind::NB: return {{"var_smoothing", 1e-9}};
        case EstimatorKind::KNN: return {{"k", 5}};
        case EstimatorKind::DT:
            return {{"max_depth", 20}, {"min_samples_leaf", 1}, {"min_impurity_decrease", 0.0}};
        case EstimatorKind::RF:
            return {{"trees", 100}, {"max_depth", 20}, {"min_samples_leaf", 1}, {"bootstrap", 1},
                    {"max_features", 0}};
        case EstimatorKind::ADABOOST: return {{"rounds", 50}};
        case EstimatorKind::GBT:
            return {{"rounds", 100}, {"learning_rate", 0.1}, {"max_depth", 6}, {"lambda", 1.0}};
        case EstimatorKind::SVM: return {{"lambda", 1e-4}, {"epochs", 50}};
    }
    return {};
}

Hyperparameters resolve_hyperparameters(const EstimatorSpec& spec) {
    auto hp = default_hyperparameters(spec.kind);
    const auto& limits = limits_for(spec.kind);
    for (const auto& [key, value] : spec.hyperparameters) {
        const auto it = limits.find(key);
        if (it == limits.end()) {
            throw Error(ErrorCode::InvalidHyperparameter,
                        "'" + key + "' is not a " + std::string(kind_name(spec.kind)) + " hyperparameter");
        }
        const auto& lim = it->second;
        const bool bad_range = !std::isfinite(value) || value < lim.min || value > lim.max ||
                               (strictly_positive(spec.kind, key) && value <= 0.0);
        if (bad_range || (lim.integer && value != std::floor(value))) {
            throw Error(ErrorCode::InvalidHyperparameter, key + "=" + std::to_string(value) + " out of range");
        }
        hp[key] = value;
    }
    return hp;
}

ClassLabel argmax(const Probabilities& p) noexcept {
    std::size_t best = 0;
    for (std::size_t c = 1; c < p.size(); ++c) {
        if (p[c] > p[best]) best = c;
    }
    return static_cast<ClassLabel>(best);
}

void Preprocessing::apply(std::span<const double> raw, std::span<double> out) const {
    if (raw.size() != input_width()) {
        throw Error(ErrorCode::SchemaMismatch, "model expects " + std::to_string(input_width()) +
                                                   " features, got " + std::to_string(raw.size()));
    }
    if (!standardizer && !pca) {
        std::copy(raw.begin(), raw.end(), out.begin());
        return;
    }
    std::vector<double> stage(raw.begin(), raw.end());
    if (standardizer) standardizer->apply(raw, stage);
    if (pca) {
        pca->project(stage, out);
    } else {
        std::copy(stage.begin(), stage.end(), out.begin());
    }
}

TrainedModel::TrainedModel(EstimatorSpec spec, Preprocessing preprocessing, ModelParameters params,
                           ModelMetadata meta)
    : spec_(std::move(spec)), pre_(std::move(preprocessing)), params_(std::move(params)), meta_(std::move(meta)) {
    if (params_.index() != static_cast<std::size_t>(spec_.kind)) {
        throw Error(ErrorCode::InvalidArgument, "parameter block does not match estimator kind");
    }
}

Probabilities TrainedModel::predict_proba_transformed(std::span<const double> x) const {
    return std::visit([&](const auto& p) { return estimators::score(p, x); }, params_);
}

Probabilities TrainedModel::predict_proba(std::span<const double> raw) const {
    if (raw.size() != input_width()) {
        throw Error(ErrorCode::SchemaMismatch, "model expects " + std::to_string(input_width()) +
                                                   " features, got " + std::to_string(raw.size()));
    }
    for (const double v : raw) {
        if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, "input contains a non-finite value");
    }
    std::vector<double> x(pre_.output_width());
    pre_.apply(raw, x);
    return predict_proba_transformed(x);
}

TrainedModel TrainedModel::with_evaluation(const StoredEvaluation& eval) const {
    TrainedModel copy = *this;
    copy.meta_.evaluation = eval;
    return copy;
}

TrainedModel fit(const EstimatorSpec& spec, const Dataset& train, std::optional<Preprocessing> pre) {
    const auto hp = resolve_hyperparameters(spec);
    if (!train.labeled()) throw Error(ErrorCode::NotLabeled, "training data must be labeled");
    if (train.empty()) throw Error(ErrorCode::InsufficientData, "training set is empty");
    for (const double v : train.values()) {
        if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, "training data contains non-finite values");
    }
    Preprocessing preprocessing;
    if (pre) {
        preprocessing = std::move(*pre);
        if (preprocessing.output_width() != train.width()) {
            throw Error(ErrorCode::SchemaMismatch, "preprocessing output width differs from training width");
        }
    } else {
        preprocessing.input_schema = train.schema();
    }

    const estimators::TrainingView view{train.values(), train.size(), train.width(), train.labels()};
    estimators::Diagnostics diag;
    const auto start = std::chrono::steady_clock::now();
    ModelParameters params = [&]() -> ModelParameters {
        switch (spec.kind) {
            case EstimatorKind::LR: return estimators::fit_logistic(view, hp, diag);
            case EstimatorKind::NB: return estimators::fit_gaussian_nb(view, hp, diag);
            case EstimatorKind::KNN: return estimators::fit_knn(view, hp, diag);
            case EstimatorKind::DT: return estimators::fit_tree(view, hp, diag);
            case EstimatorKind::RF: return estimators::fit_forest(view, hp, spec.seed, diag);
            case EstimatorKind::ADABOOST: return estimators::fit_adaboost(view, hp, diag);
            case EstimatorKind::GBT: return estimators::fit_gbt(view, hp, diag);
            case EstimatorKind::SVM: return estimators::fit_linear_svm(view, hp, spec.seed, diag);
        }
        throw Error(ErrorCode::InvalidArgument, "unknown estimator kind");
    }();

    ModelMetadata meta;
    meta.fit_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    meta.train_rows = train.size();
    meta.converged = diag.converged;
    meta.fit_log = std::move(diag.log);

    EstimatorSpec resolved = spec;
    resolved.hyperparameters = hp;
    return TrainedModel(std::move(resolved), std::move(preprocessing), std::move(params), std::move(meta));
}

namespace {

Matrix transform_all(const TrainedModel& m, const Dataset& raw, bool parallel) {
    if (raw.width() != m.input_width()) {
        throw Error(ErrorCode::SchemaMismatch, "dataset width " + std::to_string(raw.width()) +
                                                   " != model input " + std::to_string(m.input_width()));
    }
    for (const double v : raw.values()) {
        if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, "dataset contains non-finite values");
    }
    Matrix x(raw.size(), m.preprocessing().output_width());
    auto one = [&](std::size_t i) { m.preprocessing().apply(raw.row(i), x.row(i)); };
    if (parallel) {
        kernels::parallel_for(raw.size(), one);
    } else {
        for (std::size_t i = 0; i < raw.size(); ++i) one(i);
    }
    return x;
}

std::vector<Probabilities> batch(const TrainedModel& m, const Dataset& raw, bool parallel) {
    const auto x = transform_all(m, raw, parallel);
    std::vector<Probabilities> out(raw.size());
    if (const auto* knn = std::get_if<KnnParams>(&m.parameters())) {
        const auto search = parallel ? kernels::knn_search : kernels::knn_search_serial;
        const auto nb = search(knn->points.data, knn->points.rows, x.data, x.rows, x.cols, knn->k);
        const std::size_t kk = std::min(knn->k, knn->points.rows);
        for (std::size_t i = 0; i < x.rows; ++i) {
            out[i] = estimators::knn_votes(*knn, std::span(nb).subspan(i * kk, kk));
        }
        return out;
    }
    auto one = [&](std::size_t i) { out[i] = m.predict_proba_transformed(x.row(i)); };
    if (parallel) {
        kernels::parallel_for(x.rows, one);
    } else {
        for (std::size_t i = 0; i < x.rows; ++i) one(i);
    }
    return out;
}

}  // namespace

std::vector<Probabilities> predict_proba_batch(const TrainedModel& m, const Dataset& raw) {
    return batch(m, raw, true);
}

std::vector<Probabilities> predict_proba_batch_serial(const TrainedModel& m, const Dataset& raw) {
    return batch(m, raw, false);
}

}  // namespace fsnt
