#pragma once

// The eight classifiers behind one estimator contract. A TrainedModel bakes
// in the preprocessing it was trained behind, so predict() takes raw flow
// features.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fsnt/features.hpp"
#include "fsnt/flowdata.hpp"
#include "fsnt/linalg.hpp"
#include "fsnt/preprocess.hpp"
#include "fsnt/tree.hpp"

namespace fsnt {

enum class EstimatorKind : std::uint8_t { LR = 0, NB, KNN, DT, RF, ADABOOST, GBT, SVM };

inline constexpr std::array<EstimatorKind, 8> kAllKinds = {
    EstimatorKind::LR, EstimatorKind::NB,       EstimatorKind::KNN, EstimatorKind::DT,
    EstimatorKind::RF, EstimatorKind::ADABOOST, EstimatorKind::GBT, EstimatorKind::SVM};

std::string_view kind_name(EstimatorKind kind) noexcept;
// Case-insensitive; also accepts "XGBOOST" for GBT. Throws InvalidArgument.
EstimatorKind parse_kind(std::string_view name);

using Hyperparameters = std::map<std::string, double>;

struct EstimatorSpec {
    EstimatorKind kind = EstimatorKind::RF;
    Hyperparameters hyperparameters;  // overrides on top of the kind defaults
    std::uint64_t seed = 0;
};

Hyperparameters default_hyperparameters(EstimatorKind kind);
// Defaults merged with the overrides; unknown keys or out-of-range values
// throw InvalidHyperparameter.
Hyperparameters resolve_hyperparameters(const EstimatorSpec& spec);

using Probabilities = std::array<double, kClassCount>;

// Index of the largest entry; ties go to the smallest class id.
ClassLabel argmax(const Probabilities& p) noexcept;

struct LogisticParams {
    Matrix weights;  // K×d
    std::vector<double> bias;
};

struct NaiveBayesParams {
    std::array<double, kClassCount> log_priors{};
    Matrix means;      // K×d
    Matrix variances;  // K×d, floored
};

struct KnnParams {
    std::size_t k = 5;
    Matrix points;
    std::vector<ClassLabel> labels;
};

struct TreeParams {
    Tree tree;
};

struct ForestParams {
    std::vector<Tree> trees;
};

struct AdaBoostParams {
    std::vector<Tree> stumps;
    std::vector<double> alphas;
};

struct GbtParams {
    std::array<double, kClassCount> initial_scores{};
    double learning_rate = 0.1;
    std::vector<std::array<Tree, kClassCount>> rounds;
};

struct SvmParams {
    Matrix weights;  // K×d, one-vs-rest
    std::vector<double> bias;
};

// Alternative order matches EstimatorKind.
using ModelParameters = std::variant<LogisticParams, NaiveBayesParams, KnnParams, TreeParams, ForestParams,
                                     AdaBoostParams, GbtParams, SvmParams>;

// Standardization then optional PCA, applied to every raw input.
struct Preprocessing {
    FeatureSchema input_schema;
    std::optional<StandardizationParams> standardizer;
    std::optional<PcaModel> pca;

    std::size_t input_width() const noexcept { return input_schema.count(); }
    std::size_t output_width() const noexcept {
        return pca ? pca->k() : input_schema.count();
    }
    void apply(std::span<const double> raw, std::span<double> out) const;
};

struct FitLogEntry {
    std::size_t step = 0;  // epoch or boosting round
    double loss = 0.0;
    double elapsed_ms = 0.0;
};

struct StoredEvaluation {
    double accuracy = 0.0;
    double macro_auc = 0.0;
    double seconds = 0.0;  // fit + prediction wall clock
};

struct ModelMetadata {
    double fit_seconds = 0.0;
    std::size_t train_rows = 0;
    bool converged = true;
    std::vector<FitLogEntry> fit_log;  // not persisted
    std::optional<StoredEvaluation> evaluation;
};

class TrainedModel {
public:
    TrainedModel(EstimatorSpec spec, Preprocessing preprocessing, ModelParameters params, ModelMetadata meta);

    const EstimatorSpec& spec() const noexcept { return spec_; }
    EstimatorKind kind() const noexcept { return spec_.kind; }
    const Preprocessing& preprocessing() const noexcept { return pre_; }
    const ModelParameters& parameters() const noexcept { return params_; }
    const ModelMetadata& metadata() const noexcept { return meta_; }
    std::size_t input_width() const noexcept { return pre_.input_width(); }

    // Throws SchemaMismatch for a wrong width and NonFiniteInput.
    Probabilities predict_proba(std::span<const double> raw) const;
    ClassLabel predict(std::span<const double> raw) const { return argmax(predict_proba(raw)); }
    Probabilities predict_proba(const FlowRecord& r) const { return predict_proba(r.values); }
    ClassLabel predict(const FlowRecord& r) const { return predict(r.values); }

    // Scores an already-preprocessed vector; no validation.
    Probabilities predict_proba_transformed(std::span<const double> x) const;

    TrainedModel with_evaluation(const StoredEvaluation& eval) const;

private:
    EstimatorSpec spec_;
    Preprocessing pre_;
    ModelParameters params_;
    ModelMetadata meta_;
};

// `train` is in the model's input space after `pre` (i.e. already
// preprocessed); with an empty Preprocessing the identity on train's schema
// is used. Throws InvalidHyperparameter, InsufficientData, NotLabeled,
// NonFiniteInput.
TrainedModel fit(const EstimatorSpec& spec, const Dataset& train, std::optional<Preprocessing> pre = std::nullopt);

// Probabilities for every row of a raw dataset. The parallel version is
// bit-identical to the serial one.
std::vector<Probabilities> predict_proba_batch(const TrainedModel& m, const Dataset& raw);
std::vector<Probabilities> predict_proba_batch_serial(const TrainedModel& m, const Dataset& raw);

}  // namespace fsnt
