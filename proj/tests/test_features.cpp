#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "fsnt/error.hpp"
#include "fsnt/features.hpp"
#include "fsnt/linalg.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace fsnt;

namespace {

Dataset from_rows(const std::vector<std::vector<double>>& rows) {
    std::vector<std::string> names;
    for (std::size_t j = 0; j < rows.front().size(); ++j) names.push_back("f" + std::to_string(j));
    Dataset d(FeatureSchema(names), false);
    for (const auto& r : rows) d.add(r, std::nullopt);
    return d;
}

// Random data with a non-trivial covariance: x = A·z for Gaussian z.
Dataset correlated(std::size_t n, std::size_t d, std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> mix(d * d);
    for (auto& m : mix) m = g(rng);
    std::vector<std::vector<double>> rows(n, std::vector<double>(d));
    for (auto& r : rows) {
        std::vector<double> z(d);
        for (auto& v : z) v = g(rng);
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) r[i] += mix[i * d + j] * z[j];
        r[0] += 5.0;
    }
    return from_rows(rows);
}

double trace_of(const Eigen::MatrixXd& c) { return c.trace(); }

}  // namespace

TEST(SymmetricEigen, MatchesEigenOracle) {
    Rng rng(1);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 2 + static_cast<std::size_t>(trial % 9);
        Matrix a(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j <= i; ++j) a(i, j) = a(j, i) = g(rng);
        Eigen::MatrixXd e(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) e(i, j) = a(i, j);
        const auto ours = symmetric_eigen(a);
        const auto ref = oracle::eigen_decomposition(e);
        for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(ours.values[i], ref.values[i], 1e-9);
    }
    EXPECT_THROW(symmetric_eigen(Matrix(2, 3)), Error);
}

TEST(Pca, RankOneData) {
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 20; ++i) rows.push_back({double(i), 2.0 * i});
    const auto d = from_rows(rows);
    const auto m = fit_pca(d, 2);
    const double total = trace_of(oracle::covariance(d));
    EXPECT_NEAR(m.eigenvalues[0], total, 1e-10);
    EXPECT_NEAR(m.eigenvalues[1], 0.0, 1e-10);

    // k = 1: scores are the signed amplitudes along (1,2)/√5.
    const auto m1 = fit_pca(d, 1);
    const auto s = transform_pca(d, m1);
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double amplitude = (double(i) - 9.5) * std::sqrt(5.0);
        EXPECT_NEAR(s.at(i, 0), amplitude, 1e-9);
    }
}

TEST(Pca, IsotropicDataHasEqualEigenvalues) {
    // The four corners of a square: identity-proportional covariance.
    const auto d = from_rows({{1, 1}, {1, -1}, {-1, 1}, {-1, -1}});
    const auto m = fit_pca(d, 2);
    EXPECT_NEAR(m.eigenvalues[0], 1.0, 1e-12);
    EXPECT_NEAR(m.eigenvalues[1], 1.0, 1e-12);
}

TEST(Pca, EigenpairsMatchIndependentSolver) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const std::size_t dim = 5 + seed % 6;
        const auto d = correlated(50, dim, seed);
        const auto m = fit_pca(d, dim);
        const auto ref = oracle::eigen_decomposition(oracle::covariance(d));
        for (std::size_t i = 0; i < dim; ++i) {
            EXPECT_NEAR(m.eigenvalues[i], ref.values[i], 1e-8);
            // Compare up to sign: |⟨ours, ref⟩| = 1.
            double dot_ref = 0.0;
            for (std::size_t j = 0; j < dim; ++j)
                dot_ref += m.components(i, j) * ref.vectors(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i));
            EXPECT_NEAR(std::abs(dot_ref), 1.0, 1e-8) << "component " << i;
        }
    }
}

TEST(Pca, Invariants) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const std::size_t dim = 5 + seed % 6;
        const auto d = correlated(80, dim, seed + 100);
        const auto m = fit_pca(d, dim);
        for (std::size_t i = 0; i < dim; ++i) {
            for (std::size_t j = 0; j < dim; ++j) {
                const double expected = i == j ? 1.0 : 0.0;
                EXPECT_LT(std::abs(dot(m.components.row(i), m.components.row(j)) - expected), 1e-9);
            }
            if (i > 0) {
                EXPECT_LE(m.eigenvalues[i], m.eigenvalues[i - 1]);
            }
            EXPECT_GE(m.eigenvalues[i], 0.0);
            // Sign convention: largest-magnitude coordinate positive.
            const auto row = m.components.row(i);
            const auto big = std::max_element(row.begin(), row.end(),
                                              [](double a, double b) { return std::abs(a) < std::abs(b); });
            EXPECT_GT(*big, 0.0);
        }
        double sum = 0.0;
        for (const double v : m.eigenvalues) sum += v;
        EXPECT_NEAR(sum, trace_of(oracle::covariance(d)), 1e-8);

        const auto back = inverse_transform_pca(transform_pca(d, m), m);
        for (std::size_t i = 0; i < d.size(); ++i)
            for (std::size_t j = 0; j < dim; ++j) ASSERT_NEAR(back.at(i, j), d.at(i, j), 1e-8);
    }
}

TEST(Pca, TruncatedReconstructionErrorIsDiscardedVariance) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const std::size_t dim = 6;
        const auto d = correlated(60, dim, seed + 7);
        for (std::size_t k = 1; k < dim; ++k) {
            const auto m = fit_pca(d, k);
            const auto back = inverse_transform_pca(transform_pca(d, m), m);
            double err = 0.0;
            for (std::size_t i = 0; i < d.size(); ++i)
                for (std::size_t j = 0; j < dim; ++j) err += std::pow(back.at(i, j) - d.at(i, j), 2);
            double discarded = 0.0;
            for (const double v : m.residual_eigenvalues) discarded += v;
            EXPECT_NEAR(err, discarded * double(d.size()), 1e-6);
        }
    }
}

TEST(Pca, TransformIsContraction) {
    const auto d = correlated(40, 7, 3);
    const auto m = fit_pca(d, 3);
    const auto s = transform_pca(d, m);
    for (std::size_t a = 0; a < d.size(); ++a) {
        for (std::size_t b = a + 1; b < d.size(); ++b) {
            double in = 0.0, out = 0.0;
            for (std::size_t j = 0; j < d.width(); ++j) in += std::pow(d.at(a, j) - d.at(b, j), 2);
            for (std::size_t j = 0; j < s.width(); ++j) out += std::pow(s.at(a, j) - s.at(b, j), 2);
            EXPECT_LE(std::sqrt(out), std::sqrt(in) + 1e-9);
        }
    }
}

TEST(Pca, MeanMapsToZeroAndZeroScoresToMean) {
    const auto d = correlated(30, 5, 9);
    const auto m = fit_pca(d, 3);
    std::vector<double> scores(3);
    m.project(m.means, scores);
    for (const double v : scores) EXPECT_NEAR(v, 0.0, 1e-12);
    std::vector<double> zero(3, 0.0), back(5);
    m.reconstruct(zero, back);
    for (std::size_t j = 0; j < 5; ++j) EXPECT_DOUBLE_EQ(back[j], m.means[j]);
    EXPECT_EQ(transform_pca(d, m).schema().name(0), "PC1");
}

TEST(Pca, Errors) {
    const auto d = correlated(10, 4, 1);
    EXPECT_THROW(fit_pca(d, 5), Error);
    EXPECT_THROW(fit_pca(d, 0), Error);
    try {
        fit_pca(d, 5);
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::KTooLarge);
    }
    try {
        fit_pca(from_rows({{1, 2}}), 1);
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DegenerateData);
    }
    const auto m = fit_pca(d, 2);
    try {
        transform_pca(correlated(10, 3, 1), m);
        ADD_FAILURE();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::SchemaMismatch);
    }
    try {
        inverse_transform_pca(d, m);
        ADD_FAILURE();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::SchemaMismatch);
    }
}

TEST(Ranking, ScoresMatchDirectSummation) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto d = correlated(40, 6, seed);
        const auto m = fit_pca(d, 4);
        const auto r = rank_features_by_loading(m, d.schema());
        ASSERT_EQ(r.entries.size(), 6u);
        for (std::size_t i = 1; i < r.entries.size(); ++i) EXPECT_GE(r.entries[i - 1].second, r.entries[i].second);
        for (const auto& [name, score] : r.entries) {
            const auto j = *d.schema().index_of(name);
            double expected = 0.0;
            for (std::size_t i = 0; i < m.k(); ++i) expected += m.eigenvalues[i] * m.components(i, j) * m.components(i, j);
            EXPECT_NEAR(score, expected, 1e-10);
        }
    }
}

TEST(Ranking, DominantFeatureFirstAndTiesInSchemaOrder) {
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 10; ++i) rows.push_back({100.0 * i, 1.0 * i, 0.5 * i});
    const auto dominated = rank_features_by_loading(fit_pca(from_rows(rows), 1), FeatureSchema({"f0", "f1", "f2"}));
    EXPECT_EQ(dominated.entries[0].first, "f0");

    const auto iso = from_rows({{1, 1}, {1, -1}, {-1, 1}, {-1, -1}});
    const auto r = rank_features_by_loading(fit_pca(iso, 2), iso.schema());
    EXPECT_NEAR(r.entries[0].second, r.entries[1].second, 1e-12);
    EXPECT_EQ(r.entries[0].first, "f0");
    EXPECT_EQ(r.entries[1].first, "f1");
}

TEST(Correlation, MatchesTextbookFormula) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto d = correlated(30, 4, seed);
        const auto c = correlation_matrix(d);
        for (std::size_t a = 0; a < 4; ++a) {
            for (std::size_t b = 0; b < 4; ++b) {
                EXPECT_NEAR(c.values(a, b), oracle::pearson(d, a, b), 1e-12);
                EXPECT_NEAR(c.values(a, b), c.values(b, a), 1e-12);
                EXPECT_LE(std::abs(c.values(a, b)), 1.0);
            }
            EXPECT_EQ(c.values(a, a), 1.0);
        }
    }
}

TEST(Correlation, SpecialCases) {
    const auto d = from_rows({{1, -1, 7}, {2, -2, 7}, {4, -4, 7}});
    const auto c = correlation_matrix(d);
    EXPECT_NEAR(c.values(0, 1), -1.0, 1e-12);
    EXPECT_EQ(c.values(0, 2), 0.0);
    EXPECT_EQ(c.values(2, 2), 1.0);
    EXPECT_THROW(correlation_matrix(from_rows({{1, 2}})), Error);

    fixture::TempDir tmp;
    write_correlation_csv(c, tmp.file("corr.csv"));
    std::ifstream in(tmp.file("corr.csv"));
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "feature,f0,f1,f2");
    std::string first;
    std::getline(in, first);
    EXPECT_EQ(first.rfind("f0,", 0), 0u);
}
