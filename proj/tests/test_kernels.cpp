#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include <omp.h>

#include "fsnt/kernels.hpp"
#include "fsnt/learn.hpp"
#include "fsnt/estimators.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace fsnt;

// Block partials are summed in block order, so the serial reference agrees
// to rounding and the parallel result does not depend on the thread count.
TEST(Kernels, CovarianceParallelMatchesSerial) {
    for (const std::size_t n : {1u, 7u, 1000u, 5003u}) {
        const auto d = fixture::random_dataset(n, 9, n, 50.0);
        const auto ser = kernels::covariance_serial(d.values(), d.size(), d.width());
        omp_set_num_threads(1);
        const auto one = kernels::covariance(d.values(), d.size(), d.width());
        omp_set_num_threads(4);
        const auto four = kernels::covariance(d.values(), d.size(), d.width());
        omp_set_num_threads(kernels::max_threads());
        EXPECT_EQ(one.means, ser.means);
        EXPECT_EQ(one.covariance.data, four.covariance.data);
        for (std::size_t i = 0; i < ser.covariance.data.size(); ++i) {
            const double ref = ser.covariance.data[i];
            EXPECT_NEAR(one.covariance.data[i], ref, 1e-12 * std::max(1.0, std::abs(ref)));
        }
    }
}

TEST(Kernels, CovarianceMatchesTextbook) {
    const auto d = fixture::random_dataset(400, 6, 2, 10.0);
    const auto got = kernels::covariance(d.values(), d.size(), d.width());
    const auto ref = oracle::covariance(d);
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 6; ++j)
            EXPECT_NEAR(got.covariance(i, j), ref(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), 1e-10);
}

TEST(Kernels, KnnParallelEqualsSerialAndBruteForce) {
    const auto train = fixture::random_dataset(600, 4, 3);
    const auto queries = fixture::random_dataset(150, 4, 4);
    const std::size_t k = 7;
    const auto par = kernels::knn_search(train.values(), train.size(), queries.values(), queries.size(), 4, k);
    const auto ser = kernels::knn_search_serial(train.values(), train.size(), queries.values(), queries.size(), 4, k);
    EXPECT_EQ(par, ser);
    for (std::size_t q = 0; q < queries.size(); ++q) {
        std::vector<std::uint32_t> order(train.size());
        std::iota(order.begin(), order.end(), 0u);
        auto dist = [&](std::uint32_t i) { return kernels::squared_distance(train.row(i), queries.row(q)); };
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return dist(a) < dist(b); });
        for (std::size_t j = 0; j < k; ++j) ASSERT_EQ(par[q * k + j], order[j]);
    }
}

TEST(Kernels, KnnDistanceTiesBrokenByIndex) {
    // Four points at equal distance from the origin query.
    const std::vector<double> train{1, 0, 0, 1, -1, 0, 0, -1};
    const std::vector<double> query{0, 0};
    const auto got = kernels::knn_search(train, 4, query, 1, 2, 3);
    EXPECT_EQ(got, (std::vector<std::uint32_t>{0, 1, 2}));
}

TEST(Kernels, BatchPredictParallelEqualsSerial) {
    const auto train = fixture::blobs(60, 5, 1.0, 5);
    const auto test = fixture::random_dataset(500, 5, 6, 4.0);
    for (const auto kind : kAllKinds) {
        EstimatorSpec spec{kind, {}, 3};
        if (kind == EstimatorKind::RF) spec.hyperparameters["trees"] = 10;
        if (kind == EstimatorKind::GBT) spec.hyperparameters["rounds"] = 10;
        const auto m = fit(spec, train);
        const auto par = predict_proba_batch(m, test);
        const auto ser = predict_proba_batch_serial(m, test);
        ASSERT_EQ(par.size(), ser.size());
        for (std::size_t i = 0; i < par.size(); ++i) ASSERT_EQ(par[i], ser[i]) << kind_name(kind);
    }
}

TEST(Kernels, ForestParallelBuildEqualsSerial) {
    const auto d = fixture::blobs(80, 6, 1.5, 9);
    estimators::TrainingView view{d.values(), d.size(), d.width(), d.labels()};
    Hyperparameters hp = default_hyperparameters(EstimatorKind::RF);
    hp["trees"] = 12;
    estimators::Diagnostics a, b;
    const auto par = estimators::fit_forest(view, hp, 77, a, true);
    const auto ser = estimators::fit_forest(view, hp, 77, b, false);
    ASSERT_EQ(par.trees.size(), ser.trees.size());
    for (std::size_t t = 0; t < par.trees.size(); ++t) {
        ASSERT_EQ(par.trees[t].nodes.size(), ser.trees[t].nodes.size());
        for (std::size_t i = 0; i < par.trees[t].nodes.size(); ++i) {
            const auto& x = par.trees[t].nodes[i];
            const auto& y = ser.trees[t].nodes[i];
            ASSERT_EQ(x.feature, y.feature);
            ASSERT_EQ(x.threshold, y.threshold);
            ASSERT_EQ(x.value, y.value);
        }
    }
}
