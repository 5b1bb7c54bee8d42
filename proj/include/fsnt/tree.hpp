#pragma once

// Level-wise CART growth over presorted feature columns. One sweep of each
// sorted column per tree level scores every open node at once, so a level
// costs O(n·d) regardless of how many nodes it holds.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "fsnt/flowdata.hpp"
#include "fsnt/rng.hpp"

namespace fsnt {

struct Tree {
    struct Node {
        std::int32_t feature = -1;  // -1 marks a leaf
        double threshold = 0.0;     // x[feature] <= threshold goes left
        std::int32_t left = -1;
        std::int32_t right = -1;
        // Classification: class distribution. Regression: value[0] is the leaf weight.
        std::array<double, kClassCount> value{};
    };
    std::vector<Node> nodes;

    const Node& leaf_for(std::span<const double> x) const {
        std::size_t i = 0;
        while (nodes[i].feature >= 0) {
            const auto& n = nodes[i];
            i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left
                                                                                              : n.right);
        }
        return nodes[i];
    }
    std::size_t depth() const;
    std::size_t leaf_count() const;
};

// Feature columns of a row-major n×d matrix, each sorted ascending by
// (value, row).
struct ColumnIndex {
    struct Entry {
        double value;
        std::uint32_t row;
    };
    std::size_t rows = 0;
    std::vector<std::vector<Entry>> columns;

    static ColumnIndex build(std::span<const double> x, std::size_t n, std::size_t d);
};

struct TreeGrowth {
    int max_depth = 20;
    std::size_t min_samples_leaf = 1;
    std::size_t max_features = 0;  // features tried per node; 0 or >= d means all
    double min_impurity_decrease = 0.0;
};

// Split threshold between two consecutive distinct values a < b. Never
// returns b, so rows at a go left and rows at b go right.
double split_midpoint(double a, double b) noexcept;

double gini(std::span<const double> class_weights) noexcept;

// Selection score of a classification split: Σ_k L_k²/W_L + Σ_k R_k²/W_R.
// Maximising it maximises the weighted Gini decrease.
double gini_split_score(std::span<const double> left, std::span<const double> right) noexcept;

// Rows with zero weight are ignored. `rng` draws the per-node feature subset
// and is only touched when max_features < d.
Tree grow_classification_tree(std::span<const double> x, std::size_t n, std::size_t d,
                              std::span<const ClassLabel> y, std::span<const double> weights,
                              const ColumnIndex& index, const TreeGrowth& growth, Rng* rng = nullptr);

// Second-order regression tree: gain ½[G_L²/(H_L+λ) + G_R²/(H_R+λ) − G²/(H+λ)],
// leaf weight −G/(H+λ). Splits only on strictly positive gain.
Tree grow_regression_tree(std::span<const double> x, std::size_t n, std::size_t d,
                          std::span<const double> grad, std::span<const double> hess,
                          const ColumnIndex& index, int max_depth, double lambda);

}  // namespace fsnt
