#pragma once

// The offline experiment: clean → dedup → split → standardize → PCA → fit →
// evaluate. Compared models share one prepared split.

#include <cstddef>
#include <vector>

#include "fsnt/eval.hpp"
#include "fsnt/learn.hpp"
#include "fsnt/preprocess.hpp"

namespace fsnt {

struct PipelineOptions {
    SplitSpec split{0.6, 42, true};
    std::size_t pca_components = 24;  // 0 skips PCA
    bool standardize = true;
    bool fit_on_all = false;  // fit standardizer/PCA on every record instead of train only
    bool deduplicate = true;
};

struct PreparedData {
    Dataset train;  // cleaned raw features
    Dataset test;
    Preprocessing preprocessing;
    Dataset train_transformed;
    std::size_t invalid_removed = 0;
    std::size_t duplicates_removed = 0;
};

// Throws whatever the stages throw (EmptyAfterClean, EmptyClass, KTooLarge…).
PreparedData prepare_data(const Dataset& raw, const PipelineOptions& options);

// Runs the preprocessing over every row of a raw dataset.
Dataset transform_dataset(const Dataset& raw, const Preprocessing& pre);

struct TrainOutcome {
    TrainedModel model;  // carries its stored evaluation
    EvalReport report;
};

TrainOutcome train_and_evaluate(const EstimatorSpec& spec, const PreparedData& data,
                                const EvalOptions& eval_options = {});

}  // namespace fsnt
