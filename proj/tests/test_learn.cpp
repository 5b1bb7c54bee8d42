#include <gtest/gtest.h>

#include <cmath>

#include "fsnt/error.hpp"
#include "fsnt/estimators.hpp"
#include "fsnt/learn.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace fsnt;
using estimators::TrainingView;

namespace {

template <typename F>
ErrorCode code_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no fsnt::Error thrown";
    return ErrorCode::InvalidArgument;
}

TrainingView view_of(const Dataset& d) { return {d.values(), d.size(), d.width(), d.labels()}; }

Dataset line(std::initializer_list<std::pair<double, int>> points) {
    Dataset d(FeatureSchema({"x"}), true);
    for (const auto& [x, c] : points) d.add(std::vector<double>{x}, class_from_id(c));
    return d;
}

EstimatorSpec quick_spec(EstimatorKind kind, std::uint64_t seed = 1) {
    EstimatorSpec s{kind, {}, seed};
    if (kind == EstimatorKind::RF) s.hyperparameters["trees"] = 15;
    if (kind == EstimatorKind::GBT) s.hyperparameters["rounds"] = 15;
    if (kind == EstimatorKind::ADABOOST) s.hyperparameters["rounds"] = 20;
    if (kind == EstimatorKind::SVM) s.hyperparameters["epochs"] = 10;
    return s;
}

}  // namespace

TEST(Gini, ExactValues) {
    EXPECT_EQ(gini(std::vector<double>{5, 5}), 0.5);
    EXPECT_EQ(gini(std::vector<double>{7, 0, 0, 0}), 0.0);
    EXPECT_EQ(gini(std::vector<double>{1, 1, 1, 1}), 0.75);
}

TEST(Gini, MidpointStaysBelowUpperValue) {
    EXPECT_EQ(split_midpoint(1.0, 3.0), 2.0);
    const double a = 1.0;
    const double b = std::nextafter(1.0, 2.0);
    EXPECT_LT(split_midpoint(a, b), b);
    EXPECT_GE(split_midpoint(a, b), a);
    EXPECT_LT(split_midpoint(-1e308, 1e308), 1e308);
}

TEST(Tree, SinglePerfectSplit) {
    const auto d = line({{-3, 0}, {-2, 0}, {-0.5, 0}, {0, 1}, {1, 1}, {4, 1}});
    const auto m = fit({EstimatorKind::DT, {}, 0}, d);
    const auto& tree = std::get<TreeParams>(m.parameters()).tree;
    EXPECT_EQ(tree.depth(), 1u);
    EXPECT_EQ(tree.leaf_count(), 2u);
    EXPECT_EQ(tree.nodes[0].threshold, -0.25);
    for (std::size_t i = 0; i < d.size(); ++i) EXPECT_EQ(m.predict(d.row(i)), d.label(i));
}

TEST(Tree, MatchesExhaustiveOracle) {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        Rng rng(seed);
        const std::size_t n = 5 + seed % 46;
        // Coarse integer grid so ties between candidate splits actually occur.
        std::uniform_int_distribution<int> v(0, 6);
        std::uniform_int_distribution<int> label(0, 1 + static_cast<int>(seed % 3));
        Dataset d(FeatureSchema({"a", "b", "c"}), true);
        for (std::size_t i = 0; i < n; ++i)
            d.add(std::vector<double>{double(v(rng)), double(v(rng)), double(v(rng)) / 3.0}, class_from_id(label(rng)));
        for (const int depth : {1, 2}) {
            EstimatorSpec spec{EstimatorKind::DT, {{"max_depth", double(depth)}}, 0};
            const auto m = fit(spec, d);
            const auto brute = oracle::brute_force_tree(d.values(), d.size(), 3, d.labels(), depth);

            std::size_t ours_correct = 0, brute_correct = 0;
            for (std::size_t i = 0; i < d.size(); ++i) {
                const auto p = m.predict_proba(d.row(i));
                const auto& leaf = brute.leaf_for(d.row(i)).value;
                for (std::size_t c = 0; c < kClassCount; ++c) ASSERT_EQ(p[c], leaf[c]) << "seed " << seed;
                ours_correct += argmax(p) == d.label(i);
                brute_correct += argmax(leaf) == d.label(i);
            }
            EXPECT_EQ(ours_correct, brute_correct);
        }
    }
}

TEST(Tree, RootSplitMaximisesGiniDecrease) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto d = fixture::random_dataset(10 + seed % 41, 3, seed + 1000);
        const auto m = fit({EstimatorKind::DT, {{"max_depth", 1}}, 0}, d);
        const auto& root = std::get<TreeParams>(m.parameters()).tree.nodes[0];
        if (root.feature < 0) continue;
        const double chosen = oracle::gini_decrease(d.values(), d.size(), 3, d.labels(),
                                                    static_cast<std::size_t>(root.feature), root.threshold);
        double best = 0.0;
        for (std::size_t f = 0; f < 3; ++f) {
            std::vector<double> vals;
            for (std::size_t i = 0; i < d.size(); ++i) vals.push_back(d.at(i, f));
            std::sort(vals.begin(), vals.end());
            for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
                if (vals[i] == vals[i + 1]) continue;
                const double t = split_midpoint(vals[i], vals[i + 1]);
                best = std::max(best, oracle::gini_decrease(d.values(), d.size(), 3, d.labels(), f, t));
            }
        }
        EXPECT_NEAR(chosen, best, 1e-12) << "seed " << seed;
    }
}

TEST(Forest, DegenerateForestEqualsSingleTree) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto d = fixture::blobs(30, 5, 2.0, seed);
        const auto dt = fit({EstimatorKind::DT, {}, seed}, d);
        const auto rf = fit({EstimatorKind::RF, {{"trees", 1}, {"bootstrap", 0}, {"max_features", 5}}, seed}, d);
        Rng rng(seed);
        for (int i = 0; i < 300; ++i) {
            const auto x = fixture::random_vector(5, rng, 5.0);
            ASSERT_EQ(dt.predict_proba(x), rf.predict_proba(x));
        }
    }
}

TEST(Logistic, GradientMatchesCentralDifferences) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto d = fixture::random_dataset(30, 4, seed, 2.0);
        const auto t = view_of(d);
        Rng rng(seed + 50);
        LogisticParams p{Matrix(kClassCount, 4), std::vector<double>(kClassCount)};
        for (auto& w : p.weights.data) w = fixture::random_vector(1, rng, 1.0)[0];
        for (auto& b : p.bias) b = fixture::random_vector(1, rng, 1.0)[0];
        const double l2 = 1e-2;
        const auto obj = estimators::logistic_objective(p, t, l2);
        const double h = 1e-5;
        auto check = [&](double& param, double analytic) {
            const double saved = param;
            param = saved + h;
            const double up = estimators::logistic_objective(p, t, l2).loss;
            param = saved - h;
            const double down = estimators::logistic_objective(p, t, l2).loss;
            param = saved;
            const double numeric = (up - down) / (2 * h);
            const double rel = std::abs(numeric - analytic) / std::max({std::abs(numeric), std::abs(analytic), 1e-8});
            EXPECT_LT(rel, 1e-4) << "numeric " << numeric << " analytic " << analytic;
        };
        for (std::size_t i = 0; i < p.weights.data.size(); ++i) check(p.weights.data[i], obj.grad_weights.data[i]);
        for (std::size_t c = 0; c < kClassCount; ++c) check(p.bias[c], obj.grad_bias[c]);
    }
}

TEST(Logistic, SeparableDataReachesFullTrainingAccuracy) {
    Dataset d(FeatureSchema({"x", "y"}), true);
    Rng rng(4);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int i = 0; i < 200; ++i) {
        const double x = u(rng), y = u(rng);
        if (std::abs(x + y) < 0.3) continue;
        d.add(std::vector<double>{x, y}, x + y > 0 ? ClassLabel::DdosDns : ClassLabel::Benign);
    }
    const auto m = fit({EstimatorKind::LR, {{"max_epochs", 5000}, {"learning_rate", 1.0}, {"l2", 0.0}}, 0}, d);
    for (std::size_t i = 0; i < d.size(); ++i) ASSERT_EQ(m.predict(d.row(i)), d.label(i));
    const auto& log = m.metadata().fit_log;
    ASSERT_FALSE(log.empty());
    EXPECT_LT(log.back().loss, log.front().loss);
}

TEST(Logistic, EpochCapFlagsNonConvergence) {
    const auto d = fixture::blobs(20, 3, 1.0, 1);
    const auto m = fit({EstimatorKind::LR, {{"max_epochs", 2}}, 0}, d);
    EXPECT_FALSE(m.metadata().converged);
    const auto converged = fit({EstimatorKind::LR, {{"tolerance", 1e-4}}, 0}, d);
    EXPECT_TRUE(converged.metadata().converged);
}

TEST(NaiveBayes, SymmetricGaussiansSplitAtMidpoint) {
    Dataset d(FeatureSchema({"x"}), true);
    Rng rng(8);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int i = 0; i < 500; ++i) {
        const double z = g(rng);
        d.add(std::vector<double>{z}, ClassLabel::Benign);
        d.add(std::vector<double>{10.0 - z}, ClassLabel::DdosDns);
    }
    const auto m = fit({EstimatorKind::NB, {}, 0}, d);
    EXPECT_EQ(m.predict(std::vector<double>{4.99}), ClassLabel::Benign);
    EXPECT_EQ(m.predict(std::vector<double>{5.01}), ClassLabel::DdosDns);
    const auto mid = m.predict_proba(std::vector<double>{5.0});
    EXPECT_NEAR(mid[0], 0.5, 1e-9);

    // Closed-form posterior from the fitted moments.
    const auto& p = std::get<NaiveBayesParams>(m.parameters());
    for (const double x : {-1.0, 2.0, 4.5, 7.0}) {
        const double l0 = oracle::gaussian_log_pdf(x, p.means(0, 0), p.variances(0, 0));
        const double l1 = oracle::gaussian_log_pdf(x, p.means(1, 0), p.variances(1, 0));
        const double post1 = 1.0 / (1.0 + std::exp(l0 - l1));
        EXPECT_NEAR(m.predict_proba(std::vector<double>{x})[1], post1, 1e-12);
    }
}

TEST(NaiveBayes, SingleClassAlwaysPredicted) {
    const auto d = line({{1, 2}, {2, 2}, {5, 2}});
    const auto m = fit({EstimatorKind::NB, {}, 0}, d);
    for (const double x : {-100.0, 0.0, 3.0, 1e6}) EXPECT_EQ(m.predict(std::vector<double>{x}), ClassLabel::DdosNtp);
}

TEST(NaiveBayes, ConstantFeatureSurvivesVarianceFloor) {
    Dataset d(FeatureSchema({"x", "k"}), true);
    for (int i = 0; i < 10; ++i) d.add(std::vector<double>{double(i), 3.0}, class_from_id(i % 2));
    const auto m = fit({EstimatorKind::NB, {}, 0}, d);
    const auto p = m.predict_proba(std::vector<double>{4.0, 3.0});
    for (const double v : p) EXPECT_TRUE(std::isfinite(v));
}

TEST(Knn, ExactPointAndVoteFractions) {
    const auto d = line({{0, 0}, {1, 1}, {2, 2}, {3, 3}});
    const auto m = fit({EstimatorKind::KNN, {{"k", 1}}, 0}, d);
    for (std::size_t i = 0; i < d.size(); ++i) EXPECT_EQ(m.predict(d.row(i)), d.label(i));

    KnnParams p;
    p.k = 3;
    p.labels = {ClassLabel::DdosDns, ClassLabel::DdosDns, ClassLabel::DdosUdp};
    const std::vector<std::uint32_t> nb{0, 1, 2};
    const auto v = estimators::knn_votes(p, nb);
    EXPECT_EQ(v[0], 0.0);
    EXPECT_DOUBLE_EQ(v[1], 2.0 / 3.0);
    EXPECT_EQ(v[2], 0.0);
    EXPECT_DOUBLE_EQ(v[3], 1.0 / 3.0);
}

TEST(Knn, VoteTieGoesToSmallestClass) {
    const auto d = line({{-1, 3}, {1, 1}});
    const auto m = fit({EstimatorKind::KNN, {{"k", 2}}, 0}, d);
    EXPECT_EQ(m.predict(std::vector<double>{0.0}), ClassLabel::DdosDns);
    EXPECT_EQ(code_of([&] { fit({EstimatorKind::KNN, {{"k", 3}}, 0}, d); }), ErrorCode::InsufficientData);
}

TEST(AdaBoost, PerfectFirstStumpStopsAfterOneRound) {
    const auto d = line({{-2, 0}, {-1, 0}, {1, 3}, {2, 3}});
    const auto m = fit({EstimatorKind::ADABOOST, {}, 0}, d);
    const auto& p = std::get<AdaBoostParams>(m.parameters());
    ASSERT_EQ(p.stumps.size(), 1u);
    EXPECT_NEAR(p.alphas[0], std::log(1e10), 1e-12);
}

TEST(AdaBoost, EveryAcceptedStumpBeatsChance) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto d = fixture::blobs(40, 4, 2.5, seed);
        const auto m = fit({EstimatorKind::ADABOOST, {}, seed}, d);
        const auto& p = std::get<AdaBoostParams>(m.parameters());
        const auto& log = m.metadata().fit_log;
        ASSERT_GE(log.size(), p.stumps.size());
        for (std::size_t r = 0; r < p.stumps.size(); ++r) {
            EXPECT_LT(log[r].loss, 0.75) << "round " << r;
            EXPECT_EQ(p.stumps[r].depth(), 1u);
        }
    }
}

TEST(Gbt, ZeroRoundsGivesClassPriors) {
    const auto d = line({{0, 0}, {1, 1}, {2, 1}, {3, 3}, {4, 3}, {5, 3}});
    const auto m = fit({EstimatorKind::GBT, {{"rounds", 0}}, 0}, d);
    const auto p = m.predict_proba(std::vector<double>{2.5});
    EXPECT_NEAR(p[0], 1.0 / 6.0, 1e-9);
    EXPECT_NEAR(p[1], 2.0 / 6.0, 1e-9);
    EXPECT_NEAR(p[2], 0.0, 1e-9);
    EXPECT_NEAR(p[3], 3.0 / 6.0, 1e-9);
}

TEST(Gbt, TrainingLossNonIncreasing) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto d = fixture::blobs(50, 5, 2.0, seed);
        const auto m = fit({EstimatorKind::GBT, {{"rounds", 30}}, seed}, d);
        const auto& log = m.metadata().fit_log;
        ASSERT_EQ(log.size(), 31u);
        for (std::size_t r = 1; r < log.size(); ++r) EXPECT_LE(log[r].loss, log[r - 1].loss + 1e-12);
        const auto& p = std::get<GbtParams>(m.parameters());
        EXPECT_NEAR(estimators::gbt_log_loss(p, view_of(d)), log.back().loss, 1e-9);
    }
}

TEST(Svm, SeparableDataDrivesHingeToZero) {
    // Separable by w = (1, 0), b = 0 with functional margin ≥ 2.
    Dataset d(FeatureSchema({"x", "y"}), true);
    Rng rng(2);
    std::uniform_real_distribution<double> far(2.0, 4.0), any(-3.0, 3.0);
    for (int i = 0; i < 100; ++i) {
        d.add(std::vector<double>{-far(rng), any(rng)}, ClassLabel::Benign);
        d.add(std::vector<double>{far(rng), any(rng)}, ClassLabel::DdosUdp);
    }
    const auto m = fit({EstimatorKind::SVM, {}, 3}, d);
    const auto& log = m.metadata().fit_log;
    ASSERT_EQ(log.size(), 50u);
    EXPECT_LT(log.back().loss, 0.01);
    for (std::size_t i = 0; i < d.size(); ++i) EXPECT_EQ(m.predict(d.row(i)), d.label(i));
}

TEST(AllKinds, SimplexAndArgmaxConsistency) {
    const auto d = fixture::blobs(40, 6, 1.5, 21);
    for (const auto kind : kAllKinds) {
        const auto m = fit(quick_spec(kind), d);
        Rng rng(static_cast<std::uint64_t>(kind));
        for (int i = 0; i < 500; ++i) {
            const double scale = i % 50 == 0 ? 1e6 : 6.0;
            const auto x = fixture::random_vector(6, rng, scale);
            const auto p = m.predict_proba(x);
            double sum = 0.0;
            for (const double v : p) {
                ASSERT_GE(v, 0.0) << kind_name(kind);
                sum += v;
            }
            ASSERT_NEAR(sum, 1.0, 1e-9) << kind_name(kind);
            ASSERT_EQ(m.predict(x), argmax(p));
        }
    }
}

TEST(AllKinds, DeterministicForFixedSeed) {
    const auto d = fixture::blobs(30, 4, 2.0, 5);
    for (const auto kind : kAllKinds) {
        const auto a = fit(quick_spec(kind, 9), d);
        const auto b = fit(quick_spec(kind, 9), d);
        Rng rng(1);
        for (int i = 0; i < 100; ++i) {
            const auto x = fixture::random_vector(4, rng);
            ASSERT_EQ(a.predict_proba(x), b.predict_proba(x)) << kind_name(kind);
        }
    }
}

TEST(AllKinds, LearnSeparableBlobs) {
    const auto train = fixture::blobs(60, 4, 0.7, 1);
    const auto test = fixture::blobs(30, 4, 0.7, 2);
    for (const auto kind : kAllKinds) {
        const auto m = fit(quick_spec(kind), train);
        std::size_t correct = 0;
        for (std::size_t i = 0; i < test.size(); ++i) correct += m.predict(test.row(i)) == test.label(i);
        EXPECT_GE(double(correct) / double(test.size()), 0.9) << kind_name(kind);
    }
}

TEST(Contract, Validation) {
    const auto d = fixture::blobs(10, 3, 1.0, 1);
    EXPECT_EQ(code_of([&] { fit({EstimatorKind::RF, {{"depth", 3}}, 0}, d); }), ErrorCode::InvalidHyperparameter);
    EXPECT_EQ(code_of([&] { fit({EstimatorKind::KNN, {{"k", 0}}, 0}, d); }), ErrorCode::InvalidHyperparameter);
    EXPECT_EQ(code_of([&] { fit({EstimatorKind::DT, {{"max_depth", 2.5}}, 0}, d); }), ErrorCode::InvalidHyperparameter);
    EXPECT_EQ(code_of([&] { fit({EstimatorKind::LR, {{"learning_rate", -1}}, 0}, d); }),
              ErrorCode::InvalidHyperparameter);

    Dataset unlabeled(d.schema(), false);
    unlabeled.add(d.row(0), std::nullopt);
    EXPECT_EQ(code_of([&] { fit({EstimatorKind::DT, {}, 0}, unlabeled); }), ErrorCode::NotLabeled);
    Dataset empty(d.schema(), true);
    EXPECT_EQ(code_of([&] { fit({EstimatorKind::DT, {}, 0}, empty); }), ErrorCode::InsufficientData);

    const auto m = fit({EstimatorKind::DT, {}, 0}, d);
    EXPECT_EQ(code_of([&] { m.predict(std::vector<double>{1, 2}); }), ErrorCode::SchemaMismatch);
    EXPECT_EQ(code_of([&] { m.predict(std::vector<double>{1, NAN, 2}); }), ErrorCode::NonFiniteInput);

    EXPECT_EQ(parse_kind("xgboost"), EstimatorKind::GBT);
    EXPECT_EQ(parse_kind("rf"), EstimatorKind::RF);
    EXPECT_EQ(code_of([] { parse_kind("CNN"); }), ErrorCode::InvalidArgument);
    for (const auto kind : kAllKinds) EXPECT_EQ(parse_kind(kind_name(kind)), kind);
}

TEST(Contract, ArgmaxTiesGoToSmallestClass) {
    EXPECT_EQ(argmax({0.25, 0.25, 0.25, 0.25}), ClassLabel::Benign);
    EXPECT_EQ(argmax({0.1, 0.4, 0.1, 0.4}), ClassLabel::DdosDns);
}
