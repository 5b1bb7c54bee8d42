#include "fsnt/estimators.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "fsnt/error.hpp"
#include "fsnt/kernels.hpp"
#include "fsnt/rng.hpp"

namespace fsnt::estimators {

namespace {

using Clock = std::chrono::steady_clock;
constexpr double kLog1e10 = 23.025850929940457;  // ln(1e10)
constexpr std::size_t K = kClassCount;

double elapsed_ms(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::size_t as_size(const Hyperparameters& hp, const char* key) {
    return static_cast<std::size_t>(hp.at(key));
}

std::size_t label_index(ClassLabel c) { return static_cast<std::size_t>(c); }

double log_sum_exp(const std::array<double, K>& z) {
    double m = -std::numeric_limits<double>::infinity();
    for (const double v : z) m = std::max(m, v);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (const double v : z) s += std::exp(v - m);
    return m + std::log(s);
}

Probabilities normalize_votes(const std::array<double, K>& votes) {
    Probabilities p{};
    const double total = std::accumulate(votes.begin(), votes.end(), 0.0);
    if (total <= 0.0) {
        p.fill(1.0 / K);
        return p;
    }
    for (std::size_t c = 0; c < K; ++c) p[c] = votes[c] / total;
    return p;
}

}  // namespace

Probabilities softmax(const std::array<double, K>& z) noexcept {
    double m = -std::numeric_limits<double>::infinity();
    for (const double v : z) m = std::max(m, v);
    Probabilities p{};
    double s = 0.0;
    for (std::size_t c = 0; c < K; ++c) {
        p[c] = std::exp(z[c] - m);
        s += p[c];
    }
    for (auto& v : p) v /= s;
    return p;
}

// ---------------------------------------------------------------- logistic

LogisticObjective logistic_objective(const LogisticParams& p, const TrainingView& t, double l2) {
    LogisticObjective obj;
    obj.grad_weights = Matrix(K, t.d);
    obj.grad_bias.assign(K, 0.0);
    std::array<double, K> z{};
    for (std::size_t i = 0; i < t.n; ++i) {
        const auto x = t.row(i);
        for (std::size_t c = 0; c < K; ++c) z[c] = dot(p.weights.row(c), x) + p.bias[c];
        const double lse = log_sum_exp(z);
        const auto yi = label_index(t.y[i]);
        obj.loss += lse - z[yi];
        for (std::size_t c = 0; c < K; ++c) {
            const double g = std::exp(z[c] - lse) - (c == yi ? 1.0 : 0.0);
            auto gw = obj.grad_weights.row(c);
            for (std::size_t j = 0; j < t.d; ++j) gw[j] += g * x[j];
            obj.grad_bias[c] += g;
        }
    }
    const double inv_n = 1.0 / static_cast<double>(t.n);
    double sq = 0.0;
    for (const double w : p.weights.data) sq += w * w;
    obj.loss = obj.loss * inv_n + 0.5 * l2 * sq;
    for (std::size_t i = 0; i < obj.grad_weights.data.size(); ++i) {
        obj.grad_weights.data[i] = obj.grad_weights.data[i] * inv_n + l2 * p.weights.data[i];
    }
    for (auto& g : obj.grad_bias) g *= inv_n;
    return obj;
}

LogisticParams fit_logistic(const TrainingView& t, const Hyperparameters& hp, Diagnostics& diag) {
    const double lr = hp.at("learning_rate");
    const double l2 = hp.at("l2");
    const auto max_epochs = as_size(hp, "max_epochs");
    const double tol = hp.at("tolerance");
    const auto start = Clock::now();

    LogisticParams p{Matrix(K, t.d), std::vector<double>(K, 0.0)};
    double prev = std::numeric_limits<double>::infinity();
    diag.converged = false;
    for (std::size_t epoch = 0; epoch < max_epochs; ++epoch) {
        const auto obj = logistic_objective(p, t, l2);
        diag.log.push_back({epoch, obj.loss, elapsed_ms(start)});
        if (std::fabs(prev - obj.loss) < tol) {
            diag.converged = true;
            break;
        }
        prev = obj.loss;
        for (std::size_t i = 0; i < p.weights.data.size(); ++i) p.weights.data[i] -= lr * obj.grad_weights.data[i];
        for (std::size_t c = 0; c < K; ++c) p.bias[c] -= lr * obj.grad_bias[c];
    }
    return p;
}

Probabilities score(const LogisticParams& p, std::span<const double> x) {
    std::array<double, K> z{};
    for (std::size_t c = 0; c < K; ++c) z[c] = dot(p.weights.row(c), x) + p.bias[c];
    return softmax(z);
}

// ------------------------------------------------------------- naive bayes

NaiveBayesParams fit_gaussian_nb(const TrainingView& t, const Hyperparameters& hp, Diagnostics& diag) {
    const auto start = Clock::now();
    NaiveBayesParams p;
    p.means = Matrix(K, t.d);
    p.variances = Matrix(K, t.d, 1.0);
    std::array<std::size_t, K> counts{};
    for (std::size_t i = 0; i < t.n; ++i) {
        const auto c = label_index(t.y[i]);
        ++counts[c];
        const auto x = t.row(i);
        auto m = p.means.row(c);
        for (std::size_t j = 0; j < t.d; ++j) m[j] += x[j];
    }
    for (std::size_t c = 0; c < K; ++c) {
        if (counts[c] == 0) continue;
        for (auto& v : p.means.row(c)) v /= static_cast<double>(counts[c]);
    }

    Matrix sq(K, t.d);
    for (std::size_t i = 0; i < t.n; ++i) {
        const auto c = label_index(t.y[i]);
        const auto x = t.row(i);
        const auto m = p.means.row(c);
        auto s = sq.row(c);
        for (std::size_t j = 0; j < t.d; ++j) s[j] += (x[j] - m[j]) * (x[j] - m[j]);
    }

    // Floor relative to the largest overall feature variance.
    const auto overall = kernels::covariance_serial(t.x, t.n, t.d);
    double max_var = 0.0;
    for (std::size_t j = 0; j < t.d; ++j) max_var = std::max(max_var, overall.covariance(j, j));
    const double floor = hp.at("var_smoothing") * (max_var > 0.0 ? max_var : 1.0);

    for (std::size_t c = 0; c < K; ++c) {
        if (counts[c] == 0) {
            p.log_priors[c] = -std::numeric_limits<double>::infinity();
            continue;
        }
        p.log_priors[c] = std::log(static_cast<double>(counts[c]) / static_cast<double>(t.n));
        for (std::size_t j = 0; j < t.d; ++j) {
            p.variances(c, j) = std::max(sq(c, j) / static_cast<double>(counts[c]), floor);
        }
    }
    diag.log.push_back({0, 0.0, elapsed_ms(start)});
    return p;
}

Probabilities score(const NaiveBayesParams& p, std::span<const double> x) {
    constexpr double kLog2Pi = 1.8378770664093453;
    std::array<double, K> logp{};
    for (std::size_t c = 0; c < K; ++c) {
        if (!std::isfinite(p.log_priors[c])) {
            logp[c] = -std::numeric_limits<double>::infinity();
            continue;
        }
        double s = p.log_priors[c];
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double var = p.variances(c, j);
            const double diff = x[j] - p.means(c, j);
            s -= 0.5 * (kLog2Pi + std::log(var) + diff * diff / var);
        }
        logp[c] = s;
    }
    const double lse = log_sum_exp(logp);
    Probabilities out{};
    for (std::size_t c = 0; c < K; ++c) out[c] = std::exp(logp[c] - lse);
    return out;
}

// --------------------------------------------------------------------- knn

KnnParams fit_knn(const TrainingView& t, const Hyperparameters& hp, Diagnostics& diag) {
    const auto start = Clock::now();
    KnnParams p;
    p.k = as_size(hp, "k");
    if (t.n < p.k) {
        throw Error(ErrorCode::InsufficientData,
                    "KNN with k=" + std::to_string(p.k) + " needs at least k training rows");
    }
    p.points = Matrix(t.n, t.d);
    std::copy(t.x.begin(), t.x.end(), p.points.data.begin());
    p.labels.assign(t.y.begin(), t.y.end());
    diag.log.push_back({0, 0.0, elapsed_ms(start)});
    return p;
}

Probabilities knn_votes(const KnnParams& p, std::span<const std::uint32_t> neighbours) {
    Probabilities out{};
    for (const auto i : neighbours) out[label_index(p.labels[i])] += 1.0;
    for (auto& v : out) v /= static_cast<double>(neighbours.size());
    return out;
}

Probabilities score(const KnnParams& p, std::span<const double> x) {
    const auto nb = kernels::knn_search_serial(p.points.data, p.points.rows, x, 1, p.points.cols, p.k);
    return knn_votes(p, nb);
}

// ------------------------------------------------------------------- trees

TreeParams fit_tree(const TrainingView& t, const Hyperparameters& hp, Diagnostics& diag) {
    const auto start = Clock::now();
    const auto index = ColumnIndex::build(t.x, t.n, t.d);
    TreeGrowth growth;
    growth.max_depth = static_cast<int>(hp.at("max_depth"));
    growth.min_samples_leaf = as_size(hp, "min_samples_leaf");
    growth.min_impurity_decrease = hp.at("min_impurity_decrease");
    const std::vector<double> weights(t.n, 1.0);
    TreeParams p{grow_classification_tree(t.x, t.n, t.d, t.y, weights, index, growth)};
    diag.log.push_back({0, 0.0, elapsed_ms(start)});
    return p;
}

Probabilities score(const TreeParams& p, std::span<const double> x) { return p.tree.leaf_for(x).value; }

ForestParams fit_forest(const TrainingView& t, const Hyperparameters& hp, std::uint64_t seed, Diagnostics& diag,
                        bool parallel) {
    const auto start = Clock::now();
    const auto n_trees = as_size(hp, "trees");
    const bool bootstrap = hp.at("bootstrap") != 0.0;
    TreeGrowth growth;
    growth.max_depth = static_cast<int>(hp.at("max_depth"));
    growth.min_samples_leaf = as_size(hp, "min_samples_leaf");
    const auto mf = as_size(hp, "max_features");
    growth.max_features =
        mf == 0 ? std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(t.d)))) : mf;

    const auto index = ColumnIndex::build(t.x, t.n, t.d);
    ForestParams p;
    p.trees.resize(n_trees);

    auto grow_one = [&](std::size_t i) {
        Rng rng(derive_seed(seed, i));
        std::vector<double> weights(t.n, 1.0);
        if (bootstrap) {
            std::fill(weights.begin(), weights.end(), 0.0);
            std::uniform_int_distribution<std::size_t> pick(0, t.n - 1);
            for (std::size_t s = 0; s < t.n; ++s) weights[pick(rng)] += 1.0;
        }
        p.trees[i] = grow_classification_tree(t.x, t.n, t.d, t.y, weights, index, growth, &rng);
    };
    if (parallel) {
        kernels::parallel_for(n_trees, grow_one);
    } else {
        for (std::size_t i = 0; i < n_trees; ++i) grow_one(i);
    }
    diag.log.push_back({n_trees, 0.0, elapsed_ms(start)});
    return p;
}

Probabilities score(const ForestParams& p, std::span<const double> x) {
    Probabilities sum{};
    for (const auto& tree : p.trees) {
        const auto& leaf = tree.leaf_for(x).value;
        for (std::size_t c = 0; c < K; ++c) sum[c] += leaf[c];
    }
    return normalize_votes(sum);
}

// ---------------------------------------------------------------- adaboost

AdaBoostParams fit_adaboost(const TrainingView& t, const Hyperparameters& hp, Diagnostics& diag) {
    const auto start = Clock::now();
    const auto rounds = as_size(hp, "rounds");
    const double chance_error = static_cast<double>(K - 1) / static_cast<double>(K);
    const auto index = ColumnIndex::build(t.x, t.n, t.d);
    TreeGrowth stump;
    stump.max_depth = 1;

    AdaBoostParams p;
    std::vector<double> w(t.n, 1.0 / static_cast<double>(t.n));
    std::vector<char> miss(t.n);
    for (std::size_t round = 0; round < rounds; ++round) {
        auto tree = grow_classification_tree(t.x, t.n, t.d, t.y, w, index, stump);
        double err = 0.0;
        double total = 0.0;
        for (std::size_t i = 0; i < t.n; ++i) {
            miss[i] = argmax(tree.leaf_for(t.row(i)).value) != t.y[i];
            err += miss[i] ? w[i] : 0.0;
            total += w[i];
        }
        err /= total;
        diag.log.push_back({round, err, elapsed_ms(start)});

        if (err >= chance_error) {
            // No better than chance under the current weights.
            if (p.stumps.empty()) {
                p.stumps.push_back(std::move(tree));
                p.alphas.push_back(1.0);
                diag.converged = false;
            }
            break;
        }
        if (err == 0.0) {
            p.stumps.push_back(std::move(tree));
            p.alphas.push_back(kLog1e10);
            break;
        }
        const double e = std::clamp(err, 1e-10, 1.0 - 1e-10);
        const double alpha = std::log((1.0 - e) / e) + std::log(static_cast<double>(K - 1));
        p.stumps.push_back(std::move(tree));
        p.alphas.push_back(alpha);

        double norm = 0.0;
        for (std::size_t i = 0; i < t.n; ++i) {
            if (miss[i]) w[i] *= std::exp(alpha);
            norm += w[i];
        }
        for (auto& v : w) v /= norm;
    }
    return p;
}

Probabilities score(const AdaBoostParams& p, std::span<const double> x) {
    std::array<double, K> votes{};
    for (std::size_t s = 0; s < p.stumps.size(); ++s) {
        votes[label_index(argmax(p.stumps[s].leaf_for(x).value))] += p.alphas[s];
    }
    return normalize_votes(votes);
}

// ---------------------------------------------------------------------- gbt

std::array<double, K> gbt_margins(const GbtParams& p, std::span<const double> x) {
    auto z = p.initial_scores;
    for (const auto& round : p.rounds) {
        for (std::size_t c = 0; c < K; ++c) z[c] += p.learning_rate * round[c].leaf_for(x).value[0];
    }
    return z;
}

double gbt_log_loss(const GbtParams& p, const TrainingView& t) {
    double loss = 0.0;
    for (std::size_t i = 0; i < t.n; ++i) {
        const auto z = gbt_margins(p, t.row(i));
        loss += log_sum_exp(z) - z[label_index(t.y[i])];
    }
    return loss / static_cast<double>(t.n);
}

GbtParams fit_gbt(const TrainingView& t, const Hyperparameters& hp, Diagnostics& diag) {
    const auto start = Clock::now();
    const auto rounds = as_size(hp, "rounds");
    const int depth = static_cast<int>(hp.at("max_depth"));
    const double lambda = hp.at("lambda");

    GbtParams p;
    p.learning_rate = hp.at("learning_rate");
    std::array<std::size_t, K> counts{};
    for (const auto c : t.y) ++counts[label_index(c)];
    for (std::size_t c = 0; c < K; ++c) {
        const double prior = static_cast<double>(counts[c]) / static_cast<double>(t.n);
        p.initial_scores[c] = std::log(std::max(prior, 1e-12));
    }

    const auto index = ColumnIndex::build(t.x, t.n, t.d);
    std::vector<std::array<double, K>> margin(t.n, p.initial_scores);
    std::vector<std::array<double, K>> prob(t.n);

    auto current_loss = [&] {
        double loss = 0.0;
        for (std::size_t i = 0; i < t.n; ++i) loss += log_sum_exp(margin[i]) - margin[i][label_index(t.y[i])];
        return loss / static_cast<double>(t.n);
    };
    diag.log.push_back({0, current_loss(), elapsed_ms(start)});

    std::array<std::vector<double>, K> grad;
    std::array<std::vector<double>, K> hess;
    for (std::size_t c = 0; c < K; ++c) {
        grad[c].resize(t.n);
        hess[c].resize(t.n);
    }
    for (std::size_t round = 0; round < rounds; ++round) {
        for (std::size_t i = 0; i < t.n; ++i) {
            prob[i] = softmax(margin[i]);
            const auto yi = label_index(t.y[i]);
            for (std::size_t c = 0; c < K; ++c) {
                grad[c][i] = prob[i][c] - (c == yi ? 1.0 : 0.0);
                hess[c][i] = prob[i][c] * (1.0 - prob[i][c]);
            }
        }
        std::array<Tree, K> trees;
        kernels::parallel_for(K, [&](std::size_t c) {
            trees[c] = grow_regression_tree(t.x, t.n, t.d, grad[c], hess[c], index, depth, lambda);
        });
        for (std::size_t i = 0; i < t.n; ++i) {
            const auto x = t.row(i);
            for (std::size_t c = 0; c < K; ++c) margin[i][c] += p.learning_rate * trees[c].leaf_for(x).value[0];
        }
        p.rounds.push_back(std::move(trees));
        diag.log.push_back({round + 1, current_loss(), elapsed_ms(start)});
    }
    return p;
}

Probabilities score(const GbtParams& p, std::span<const double> x) { return softmax(gbt_margins(p, x)); }

// --------------------------------------------------------------------- svm

SvmParams fit_linear_svm(const TrainingView& t, const Hyperparameters& hp, std::uint64_t seed,
                         Diagnostics& diag) {
    const auto start = Clock::now();
    const double lambda = hp.at("lambda");
    const auto epochs = as_size(hp, "epochs");
    const double radius = 1.0 / std::sqrt(lambda);
    const std::size_t width = t.d + 1;  // bias rides along as a constant feature

    Matrix w(K, width);
    std::vector<std::size_t> order(t.n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    std::size_t step = 0;

    auto margin = [&](std::size_t c, std::span<const double> x) {
        const auto wc = w.row(c);
        return dot(wc.first(t.d), x) + wc[t.d];
    };

    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (const auto i : order) {
            ++step;
            const double eta = 1.0 / (lambda * static_cast<double>(step));
            const auto x = t.row(i);
            for (std::size_t c = 0; c < K; ++c) {
                const double y = label_index(t.y[i]) == c ? 1.0 : -1.0;
                const double m = y * margin(c, x);
                auto wc = w.row(c);
                const double shrink = 1.0 - eta * lambda;
                for (auto& v : wc) v *= shrink;
                if (m < 1.0) {
                    for (std::size_t j = 0; j < t.d; ++j) wc[j] += eta * y * x[j];
                    wc[t.d] += eta * y;
                }
                const double norm = std::sqrt(dot(wc, wc));
                if (norm > radius) {
                    for (auto& v : wc) v *= radius / norm;
                }
            }
        }
        double hinge = 0.0;
        for (std::size_t i = 0; i < t.n; ++i) {
            const auto x = t.row(i);
            for (std::size_t c = 0; c < K; ++c) {
                const double y = label_index(t.y[i]) == c ? 1.0 : -1.0;
                hinge += std::max(0.0, 1.0 - y * margin(c, x));
            }
        }
        diag.log.push_back({epoch, hinge / static_cast<double>(t.n * K), elapsed_ms(start)});
    }

    SvmParams p{Matrix(K, t.d), std::vector<double>(K, 0.0)};
    for (std::size_t c = 0; c < K; ++c) {
        std::copy_n(w.row(c).begin(), t.d, p.weights.row(c).begin());
        p.bias[c] = w(c, t.d);
    }
    return p;
}

Probabilities score(const SvmParams& p, std::span<const double> x) {
    std::array<double, K> z{};
    for (std::size_t c = 0; c < K; ++c) z[c] = dot(p.weights.row(c), x) + p.bias[c];
    return softmax(z);
}

}  // namespace fsnt::estimators
