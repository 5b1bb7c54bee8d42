#include "fsnt/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>

#include "fsnt/error.hpp"
#include "fsnt/kernels.hpp"

namespace fsnt {

namespace {

void require_finite(const Dataset& d) {
    for (const double v : d.values()) {
        if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, "dataset contains non-finite values");
    }
}

}  // namespace

FeatureSchema PcaModel::output_schema() const {
    std::vector<std::string> names;
    names.reserve(k());
    for (std::size_t i = 0; i < k(); ++i) names.push_back("PC" + std::to_string(i + 1));
    return FeatureSchema(std::move(names));
}

void PcaModel::project(std::span<const double> in, std::span<double> out) const {
    if (in.size() != input_dim() || out.size() != k()) {
        throw Error(ErrorCode::SchemaMismatch, "PCA expects width " + std::to_string(input_dim()) +
                                                   ", got " + std::to_string(in.size()));
    }
    for (std::size_t i = 0; i < k(); ++i) {
        const auto c = components.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < in.size(); ++j) s += c[j] * (in[j] - means[j]);
        out[i] = s;
    }
}

void PcaModel::reconstruct(std::span<const double> scores, std::span<double> out) const {
    if (scores.size() != k() || out.size() != input_dim()) {
        throw Error(ErrorCode::SchemaMismatch, "PCA scores must have width " + std::to_string(k()));
    }
    std::copy(means.begin(), means.end(), out.begin());
    for (std::size_t i = 0; i < k(); ++i) {
        const auto c = components.row(i);
        for (std::size_t j = 0; j < out.size(); ++j) out[j] += c[j] * scores[i];
    }
}

PcaModel fit_pca(const Dataset& d, std::size_t k) {
    const std::size_t dim = d.width();
    if (k < 1 || k > dim) {
        throw Error(ErrorCode::KTooLarge,
                    "k=" + std::to_string(k) + " with " + std::to_string(dim) + " features");
    }
    if (d.size() < 2) throw Error(ErrorCode::DegenerateData, "PCA needs at least 2 records");
    require_finite(d);

    auto moments = kernels::covariance(d.values(), d.size(), dim);
    const auto eig = symmetric_eigen(moments.covariance);

    PcaModel m;
    m.input_schema = d.schema();
    m.means = std::move(moments.means);
    m.components = Matrix(k, dim);
    for (std::size_t i = 0; i < k; ++i) {
        std::copy_n(eig.vectors.row(i).begin(), dim, m.components.row(i).begin());
    }
    m.eigenvalues.assign(eig.values.begin(), eig.values.begin() + static_cast<std::ptrdiff_t>(k));
    m.residual_eigenvalues.assign(eig.values.begin() + static_cast<std::ptrdiff_t>(k), eig.values.end());
    return m;
}

Dataset transform_pca(const Dataset& d, const PcaModel& m) {
    if (d.width() != m.input_dim()) {
        throw Error(ErrorCode::SchemaMismatch, "dataset width " + std::to_string(d.width()) +
                                                   " != PCA input " + std::to_string(m.input_dim()));
    }
    Dataset out(m.output_schema(), d.labeled());
    out.reserve(d.size());
    std::vector<double> buf(m.k());
    for (std::size_t r = 0; r < d.size(); ++r) {
        m.project(d.row(r), buf);
        out.add(buf, d.labeled() ? std::optional(d.label(r)) : std::nullopt);
    }
    return out;
}

Dataset inverse_transform_pca(const Dataset& scores, const PcaModel& m) {
    if (scores.width() != m.k()) {
        throw Error(ErrorCode::SchemaMismatch, "scores width " + std::to_string(scores.width()) +
                                                   " != k " + std::to_string(m.k()));
    }
    Dataset out(m.input_schema, scores.labeled());
    out.reserve(scores.size());
    std::vector<double> buf(m.input_dim());
    for (std::size_t r = 0; r < scores.size(); ++r) {
        m.reconstruct(scores.row(r), buf);
        out.add(buf, scores.labeled() ? std::optional(scores.label(r)) : std::nullopt);
    }
    return out;
}

FeatureRanking rank_features_by_loading(const PcaModel& m, const FeatureSchema& schema) {
    if (schema.count() != m.input_dim()) {
        throw Error(ErrorCode::SchemaMismatch, "schema width differs from PCA input");
    }
    std::vector<double> score(m.input_dim(), 0.0);
    for (std::size_t i = 0; i < m.k(); ++i) {
        const auto c = m.components.row(i);
        const double lambda = std::max(0.0, m.eigenvalues[i]);
        for (std::size_t j = 0; j < score.size(); ++j) score[j] += lambda * c[j] * c[j];
    }
    std::vector<std::size_t> order(score.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });

    FeatureRanking ranking;
    for (const auto j : order) ranking.entries.emplace_back(schema.name(j), score[j]);
    return ranking;
}

CorrelationMatrix correlation_matrix(const Dataset& d) {
    if (d.size() < 2) throw Error(ErrorCode::DegenerateData, "correlation needs at least 2 records");
    require_finite(d);
    const std::size_t dim = d.width();
    const auto moments = kernels::covariance(d.values(), d.size(), dim);
    const auto& cov = moments.covariance;

    CorrelationMatrix c{d.schema().names(), Matrix(dim, dim)};
    for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t j = 0; j < dim; ++j) {
            if (i == j) {
                c.values(i, j) = 1.0;
                continue;
            }
            const double denom = std::sqrt(cov(i, i) * cov(j, j));
            double r = denom > 0.0 ? cov(i, j) / denom : 0.0;
            c.values(i, j) = std::clamp(r, -1.0, 1.0);
        }
    }
    return c;
}

void write_correlation_csv(const CorrelationMatrix& c, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write '" + path + "'");
    out << "feature";
    for (const auto& n : c.names) out << ',' << n;
    out << '\n' << std::fixed << std::setprecision(6);
    for (std::size_t i = 0; i < c.names.size(); ++i) {
        out << c.names[i];
        for (std::size_t j = 0; j < c.names.size(); ++j) out << ',' << c.values(i, j);
        out << '\n';
    }
}

}  // namespace fsnt
