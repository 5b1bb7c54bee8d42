#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fsnt/flowdata.hpp"

namespace fsnt {

struct CleanResult {
    Dataset data;
    std::size_t removed = 0;
};

// Keeps records whose values are all finite, in order. Throws
// EmptyAfterClean if nothing survives.
CleanResult drop_invalid(const Dataset& d);

// Keeps the first occurrence of each exact (values, label) tuple.
CleanResult dedup(const Dataset& d);

struct StandardizationParams {
    FeatureSchema schema;
    std::vector<double> means;
    std::vector<double> stds;  // population standard deviations

    // z-scores one record; zero-std features map to 0.
    void apply(std::span<const double> in, std::span<double> out) const;
};

StandardizationParams fit_standardizer(const Dataset& d);
Dataset apply_standardizer(const Dataset& d, const StandardizationParams& p);

struct SplitSpec {
    double train_fraction = 0.6;
    std::uint64_t seed = 0;
    bool stratified = true;
};

struct Split {
    Dataset train;
    Dataset test;
};

// Train size is round(fraction·n). When stratified, each class contributes
// floor(fraction·n_c) and the leftover rows go one per class, in class-id
// order, to classes with a fractional share. Both halves keep the input's
// relative order.
Split train_test_split(const Dataset& d, const SplitSpec& spec);

// Row indices of the train half, as chosen by train_test_split.
std::vector<std::size_t> train_indices(const Dataset& d, const SplitSpec& spec);

}  // namespace fsnt
