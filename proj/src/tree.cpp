#include "fsnt/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fsnt/error.hpp"

namespace fsnt {

namespace {

struct ClassStats {
    std::array<double, kClassCount> w{};
    std::size_t count = 0;
};

class GiniCriterion {
public:
    using Stats = ClassStats;

    GiniCriterion(std::span<const ClassLabel> y, std::span<const double> weights, double min_decrease)
        : y_(y), weights_(weights), min_decrease_(min_decrease) {}

    double weight(std::uint32_t row) const { return weights_[row]; }

    void add(Stats& s, std::uint32_t row) const {
        s.w[static_cast<std::size_t>(y_[row])] += weights_[row];
        ++s.count;
    }

    Stats subtract(const Stats& total, const Stats& left) const {
        Stats r;
        for (std::size_t c = 0; c < kClassCount; ++c) r.w[c] = total.w[c] - left.w[c];
        r.count = total.count - left.count;
        return r;
    }

    bool can_split(const Stats& s) const {
        int present = 0;
        for (const double w : s.w) present += w > 0.0;
        return present > 1;
    }

    double score(const Stats& left, const Stats& right) const { return gini_split_score(left.w, right.w); }

    bool accept(const Stats& parent, double best_score, double root_weight) const {
        if (min_decrease_ <= 0.0) return true;
        double total = 0.0;
        double sq = 0.0;
        for (const double w : parent.w) {
            total += w;
            sq += w * w;
        }
        const double decrease = best_score - sq / total;
        return decrease / root_weight >= min_decrease_;
    }

    double mass(const Stats& s) const { return std::accumulate(s.w.begin(), s.w.end(), 0.0); }

    void fill_leaf(const Stats& s, Tree::Node& node) const {
        const double total = mass(s);
        for (std::size_t c = 0; c < kClassCount; ++c) node.value[c] = total > 0.0 ? s.w[c] / total : 0.0;
    }

private:
    std::span<const ClassLabel> y_;
    std::span<const double> weights_;
    double min_decrease_;
};

struct GradStats {
    double g = 0.0;
    double h = 0.0;
    std::size_t count = 0;
};

class NewtonCriterion {
public:
    using Stats = GradStats;

    NewtonCriterion(std::span<const double> grad, std::span<const double> hess, double lambda)
        : grad_(grad), hess_(hess), lambda_(lambda) {}

    double weight(std::uint32_t) const { return 1.0; }

    void add(Stats& s, std::uint32_t row) const {
        s.g += grad_[row];
        s.h += hess_[row];
        ++s.count;
    }

    Stats subtract(const Stats& total, const Stats& left) const {
        return {total.g - left.g, total.h - left.h, total.count - left.count};
    }

    bool can_split(const Stats& s) const { return s.count >= 2; }

    double score(const Stats& left, const Stats& right) const {
        return left.g * left.g / (left.h + lambda_) + right.g * right.g / (right.h + lambda_);
    }

    bool accept(const Stats& parent, double best_score, double) const {
        const double gain = 0.5 * (best_score - parent.g * parent.g / (parent.h + lambda_));
        return gain > 0.0;
    }

    double mass(const Stats& s) const { return static_cast<double>(s.count); }

    void fill_leaf(const Stats& s, Tree::Node& node) const { node.value[0] = -s.g / (s.h + lambda_); }

private:
    std::span<const double> grad_;
    std::span<const double> hess_;
    double lambda_;
};

template <typename Criterion>
Tree grow(std::span<const double> x, std::size_t n, std::size_t d, const ColumnIndex& index,
          const Criterion& crit, const TreeGrowth& growth, Rng* rng) {
    using Stats = typename Criterion::Stats;
    using Entry = ColumnIndex::Entry;

    if (index.rows != n || index.columns.size() != d) {
        throw Error(ErrorCode::SchemaMismatch, "column index does not match training matrix");
    }

    struct Open {
        std::int32_t node;
        int depth;
        Stats stats;
        std::vector<char> allowed;  // empty: every feature
    };
    struct Search {
        Stats left{};
        double best = -std::numeric_limits<double>::infinity();
        std::int32_t feature = -1;
        double threshold = 0.0;
        double last = 0.0;
        bool has_last = false;
    };

    const std::size_t per_node = (growth.max_features == 0 || growth.max_features >= d) ? d
                                                                                       : growth.max_features;
    if (per_node < d && rng == nullptr) {
        throw Error(ErrorCode::InvalidArgument, "feature subsampling needs a random source");
    }
    const std::size_t min_leaf = std::max<std::size_t>(1, growth.min_samples_leaf);

    auto draw_features = [&]() {
        std::vector<char> allowed;
        if (per_node >= d) return allowed;
        std::vector<std::size_t> pool(d);
        std::iota(pool.begin(), pool.end(), 0);
        allowed.assign(d, 0);
        for (std::size_t i = 0; i < per_node; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, d - 1);
            std::swap(pool[i], pool[pick(*rng)]);
            allowed[pool[i]] = 1;
        }
        return allowed;
    };
    auto openable = [&](const Stats& s, int depth) {
        return depth < growth.max_depth && s.count >= 2 * min_leaf && crit.can_split(s);
    };

    Tree tree;
    std::vector<std::int32_t> slot(n, -1);
    Stats root{};
    for (std::uint32_t r = 0; r < n; ++r) {
        if (crit.weight(r) > 0.0) crit.add(root, r);
    }
    const double root_weight = crit.mass(root);
    tree.nodes.emplace_back();
    crit.fill_leaf(root, tree.nodes[0]);

    std::vector<Open> open;
    if (openable(root, 0)) {
        open.push_back({0, 0, root, draw_features()});
        for (std::uint32_t r = 0; r < n; ++r) {
            if (crit.weight(r) > 0.0) slot[r] = 0;
        }
    }

    std::vector<std::vector<Entry>> owned;
    bool use_owned = false;
    std::size_t column_len = n;

    while (!open.empty()) {
        std::vector<Search> search(open.size());
        for (std::size_t f = 0; f < d; ++f) {
            for (auto& s : search) {
                s.left = Stats{};
                s.has_last = false;
            }
            const auto& col = use_owned ? owned[f] : index.columns[f];
            for (const auto& e : col) {
                const std::int32_t k = slot[e.row];
                if (k < 0) continue;
                const auto& node = open[static_cast<std::size_t>(k)];
                if (!node.allowed.empty() && !node.allowed[f]) continue;
                auto& s = search[static_cast<std::size_t>(k)];
                if (s.has_last && e.value > s.last && s.left.count >= min_leaf &&
                    node.stats.count - s.left.count >= min_leaf) {
                    const double sc = crit.score(s.left, crit.subtract(node.stats, s.left));
                    if (sc > s.best) {
                        s.best = sc;
                        s.feature = static_cast<std::int32_t>(f);
                        s.threshold = split_midpoint(s.last, e.value);
                    }
                }
                crit.add(s.left, e.row);
                s.last = e.value;
                s.has_last = true;
            }
        }

        // Route rows of split nodes into provisional child slots 2k / 2k+1.
        std::vector<char> splits(open.size(), 0);
        for (std::size_t k = 0; k < open.size(); ++k) {
            splits[k] = search[k].feature >= 0 && crit.accept(open[k].stats, search[k].best, root_weight);
        }
        std::vector<Stats> child_stats(2 * open.size());
        for (std::uint32_t r = 0; r < n; ++r) {
            const std::int32_t k = slot[r];
            if (k < 0) continue;
            const auto ku = static_cast<std::size_t>(k);
            if (!splits[ku]) {
                slot[r] = -1;
                continue;
            }
            const auto f = static_cast<std::size_t>(search[ku].feature);
            const std::size_t child = 2 * ku + (x[r * d + f] <= search[ku].threshold ? 0 : 1);
            crit.add(child_stats[child], r);
            slot[r] = static_cast<std::int32_t>(child);
        }

        std::vector<Open> next;
        std::vector<std::int32_t> remap(2 * open.size(), -1);
        for (std::size_t k = 0; k < open.size(); ++k) {
            if (!splits[k]) continue;
            const auto left_id = static_cast<std::int32_t>(tree.nodes.size());
            tree.nodes.emplace_back();
            tree.nodes.emplace_back();
            auto& parent = tree.nodes[static_cast<std::size_t>(open[k].node)];
            parent.feature = search[k].feature;
            parent.threshold = search[k].threshold;
            parent.left = left_id;
            parent.right = left_id + 1;
            for (std::size_t side = 0; side < 2; ++side) {
                const auto& cs = child_stats[2 * k + side];
                const auto node_id = left_id + static_cast<std::int32_t>(side);
                crit.fill_leaf(cs, tree.nodes[static_cast<std::size_t>(node_id)]);
                if (openable(cs, open[k].depth + 1)) {
                    remap[2 * k + side] = static_cast<std::int32_t>(next.size());
                    next.push_back({node_id, open[k].depth + 1, cs, draw_features()});
                }
            }
        }

        std::size_t active = 0;
        for (auto& s : slot) {
            if (s >= 0) {
                s = remap[static_cast<std::size_t>(s)];
                active += s >= 0;
            }
        }
        open = std::move(next);

        if (!open.empty() && active * 10 < column_len * 7) {
            std::vector<std::vector<Entry>> compact(d);
            for (std::size_t f = 0; f < d; ++f) {
                const auto& col = use_owned ? owned[f] : index.columns[f];
                compact[f].reserve(active);
                for (const auto& e : col) {
                    if (slot[e.row] >= 0) compact[f].push_back(e);
                }
            }
            owned = std::move(compact);
            use_owned = true;
            column_len = active;
        }
    }
    return tree;
}

}  // namespace

std::size_t Tree::depth() const {
    if (nodes.empty()) return 0;
    std::vector<std::size_t> level(nodes.size(), 0);
    std::size_t deepest = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        deepest = std::max(deepest, level[i]);
        if (nodes[i].feature >= 0) {
            level[static_cast<std::size_t>(nodes[i].left)] = level[i] + 1;
            level[static_cast<std::size_t>(nodes[i].right)] = level[i] + 1;
        }
    }
    return deepest;
}

std::size_t Tree::leaf_count() const {
    return static_cast<std::size_t>(
        std::count_if(nodes.begin(), nodes.end(), [](const Node& n) { return n.feature < 0; }));
}

ColumnIndex ColumnIndex::build(std::span<const double> x, std::size_t n, std::size_t d) {
    ColumnIndex index;
    index.rows = n;
    index.columns.resize(d);
    for (std::size_t f = 0; f < d; ++f) {
        auto& col = index.columns[f];
        col.resize(n);
        for (std::size_t r = 0; r < n; ++r) col[r] = {x[r * d + f], static_cast<std::uint32_t>(r)};
        std::sort(col.begin(), col.end(), [](const Entry& a, const Entry& b) {
            return a.value < b.value || (a.value == b.value && a.row < b.row);
        });
    }
    return index;
}

double split_midpoint(double a, double b) noexcept {
    const double mid = a + 0.5 * (b - a);
    return mid < b ? mid : a;
}

double gini(std::span<const double> class_weights) noexcept {
    double total = 0.0;
    for (const double w : class_weights) total += w;
    if (total <= 0.0) return 0.0;
    double sq = 0.0;
    for (const double w : class_weights) sq += (w / total) * (w / total);
    return 1.0 - sq;
}

double gini_split_score(std::span<const double> left, std::span<const double> right) noexcept {
    double wl = 0.0, wr = 0.0, sl = 0.0, sr = 0.0;
    for (std::size_t c = 0; c < left.size(); ++c) {
        wl += left[c];
        sl += left[c] * left[c];
        wr += right[c];
        sr += right[c] * right[c];
    }
    return (wl > 0.0 ? sl / wl : 0.0) + (wr > 0.0 ? sr / wr : 0.0);
}

Tree grow_classification_tree(std::span<const double> x, std::size_t n, std::size_t d,
                              std::span<const ClassLabel> y, std::span<const double> weights,
                              const ColumnIndex& index, const TreeGrowth& growth, Rng* rng) {
    if (y.size() != n || weights.size() != n) {
        throw Error(ErrorCode::LengthMismatch, "labels/weights do not match row count");
    }
    const GiniCriterion crit(y, weights, growth.min_impurity_decrease);
    return grow(x, n, d, index, crit, growth, rng);
}

Tree grow_regression_tree(std::span<const double> x, std::size_t n, std::size_t d,
                          std::span<const double> grad, std::span<const double> hess,
                          const ColumnIndex& index, int max_depth, double lambda) {
    if (grad.size() != n || hess.size() != n) {
        throw Error(ErrorCode::LengthMismatch, "gradients do not match row count");
    }
    const NewtonCriterion crit(grad, hess, lambda);
    TreeGrowth growth;
    growth.max_depth = max_depth;
    return grow(x, n, d, index, crit, growth, nullptr);
}

}  // namespace fsnt
