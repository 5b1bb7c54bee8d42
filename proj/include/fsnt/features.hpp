#pragma once

#include <string>
#include <utility>
#include <vector>

#include "fsnt/flowdata.hpp"
#include "fsnt/linalg.hpp"

namespace fsnt {

// Principal-component basis fitted on (normally standardized) data.
struct PcaModel {
    FeatureSchema input_schema;
    std::vector<double> means;
    Matrix components;                      // k×input_dim, orthonormal rows
    std::vector<double> eigenvalues;        // k retained, non-increasing
    std::vector<double> residual_eigenvalues;  // the input_dim−k discarded ones

    std::size_t k() const noexcept { return components.rows; }
    std::size_t input_dim() const noexcept { return components.cols; }
    FeatureSchema output_schema() const;

    void project(std::span<const double> in, std::span<double> out) const;
    void reconstruct(std::span<const double> scores, std::span<double> out) const;
};

// Eigendecomposition of the population covariance; top k components kept.
// Throws KTooLarge (k outside 1..d), DegenerateData (< 2 records) and
// NonFiniteInput.
PcaModel fit_pca(const Dataset& d, std::size_t k);
Dataset transform_pca(const Dataset& d, const PcaModel& m);
Dataset inverse_transform_pca(const Dataset& scores, const PcaModel& m);

struct FeatureRanking {
    std::vector<std::pair<std::string, double>> entries;
};

// score(j) = Σ_i λ_i·c_ij² over retained components; descending, ties by
// schema order.
FeatureRanking rank_features_by_loading(const PcaModel& m, const FeatureSchema& schema);

struct CorrelationMatrix {
    std::vector<std::string> names;
    Matrix values;
};

// Pearson coefficients. A zero-variance feature has 1 on the diagonal and 0
// elsewhere.
CorrelationMatrix correlation_matrix(const Dataset& d);

// Header row and first column carry feature names.
void write_correlation_csv(const CorrelationMatrix& c, const std::string& path);

}  // namespace fsnt
