#pragma once

// Kind-specific training and scoring bodies dispatched by fit() and
// TrainedModel. Exposed for tests and benchmarks.

#include <span>
#include <vector>

#include "fsnt/learn.hpp"

namespace fsnt::estimators {

struct TrainingView {
    std::span<const double> x;  // row-major n×d
    std::size_t n = 0;
    std::size_t d = 0;
    std::span<const ClassLabel> y;

    std::span<const double> row(std::size_t i) const { return x.subspan(i * d, d); }
};

struct Diagnostics {
    std::vector<FitLogEntry> log;
    bool converged = true;
};

LogisticParams fit_logistic(const TrainingView& t, const Hyperparameters& hp, Diagnostics& diag);
NaiveBayesParams fit_gaussian_nb(const TrainingView& t, const Hyperparameters& hp, Diagnostics& diag);
KnnParams fit_knn(const TrainingView& t, const Hyperparameters& hp, Diagnostics& diag);
TreeParams fit_tree(const TrainingView& t, const Hyperparameters& hp, Diagnostics& diag);
// Trees are independent (own seed each) so the parallel build matches the
// serial one exactly.
ForestParams fit_forest(const TrainingView& t, const Hyperparameters& hp, std::uint64_t seed, Diagnostics& diag,
                        bool parallel = true);
AdaBoostParams fit_adaboost(const TrainingView& t, const Hyperparameters& hp, Diagnostics& diag);
GbtParams fit_gbt(const TrainingView& t, const Hyperparameters& hp, Diagnostics& diag);
SvmParams fit_linear_svm(const TrainingView& t, const Hyperparameters& hp, std::uint64_t seed,
                         Diagnostics& diag);

Probabilities score(const LogisticParams& p, std::span<const double> x);
Probabilities score(const NaiveBayesParams& p, std::span<const double> x);
Probabilities score(const KnnParams& p, std::span<const double> x);
Probabilities score(const TreeParams& p, std::span<const double> x);
Probabilities score(const ForestParams& p, std::span<const double> x);
Probabilities score(const AdaBoostParams& p, std::span<const double> x);
Probabilities score(const GbtParams& p, std::span<const double> x);
Probabilities score(const SvmParams& p, std::span<const double> x);

// Vote fractions over the given neighbour indices of a KNN model.
Probabilities knn_votes(const KnnParams& p, std::span<const std::uint32_t> neighbours);

// Mean softmax cross-entropy plus (l2/2)·‖W‖² and its analytic gradient.
struct LogisticObjective {
    double loss = 0.0;
    Matrix grad_weights;
    std::vector<double> grad_bias;
};
LogisticObjective logistic_objective(const LogisticParams& p, const TrainingView& t, double l2);

// Softmax with max-shift; sums to 1.
Probabilities softmax(const std::array<double, kClassCount>& z) noexcept;

// GBT raw class scores (before softmax).
std::array<double, kClassCount> gbt_margins(const GbtParams& p, std::span<const double> x);

// Mean multiclass log-loss of GBT margins over a training set.
double gbt_log_loss(const GbtParams& p, const TrainingView& t);

}  // namespace fsnt::estimators
