#include "fsnt/pipeline.hpp"

#include "fsnt/error.hpp"
#include "fsnt/features.hpp"
#include "fsnt/kernels.hpp"

namespace fsnt {

PreparedData prepare_data(const Dataset& raw, const PipelineOptions& options) {
    if (!raw.labeled()) throw Error(ErrorCode::NotLabeled, "training data must be labeled");
    if (raw.empty()) throw Error(ErrorCode::EmptyDataset, "no records");
    if (options.pca_components > raw.width()) {
        throw Error(ErrorCode::KTooLarge, "k=" + std::to_string(options.pca_components) + " exceeds " +
                                              std::to_string(raw.width()) + " features");
    }

    PreparedData out;
    auto cleaned = drop_invalid(raw);
    out.invalid_removed = cleaned.removed;
    Dataset data = std::move(cleaned.data);
    if (options.deduplicate) {
        auto unique = dedup(data);
        out.duplicates_removed = unique.removed;
        data = std::move(unique.data);
    }
    auto split = train_test_split(data, options.split);
    out.train = std::move(split.train);
    out.test = std::move(split.test);

    const Dataset& basis = options.fit_on_all ? data : out.train;
    out.preprocessing.input_schema = data.schema();
    if (options.standardize) out.preprocessing.standardizer = fit_standardizer(basis);
    if (options.pca_components > 0) {
        const Dataset scaled =
            options.standardize ? apply_standardizer(basis, *out.preprocessing.standardizer) : basis;
        out.preprocessing.pca = fit_pca(scaled, options.pca_components);
    }
    out.train_transformed = transform_dataset(out.train, out.preprocessing);
    return out;
}

Dataset transform_dataset(const Dataset& raw, const Preprocessing& pre) {
    if (raw.width() != pre.input_width()) {
        throw Error(ErrorCode::SchemaMismatch, "dataset width " + std::to_string(raw.width()) +
                                                   " != preprocessing input " + std::to_string(pre.input_width()));
    }
    const std::size_t w = pre.output_width();
    std::vector<double> values(raw.size() * w);
    kernels::parallel_for(raw.size(), [&](std::size_t i) {
        pre.apply(raw.row(i), std::span<double>(values.data() + i * w, w));
    });
    const FeatureSchema schema = pre.pca ? pre.pca->output_schema() : pre.input_schema;
    Dataset out(schema, raw.labeled());
    out.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        std::optional<ClassLabel> label;
        if (raw.labeled()) label = raw.label(i);
        out.add(std::span<const double>(values.data() + i * w, w), label);
    }
    return out;
}

TrainOutcome train_and_evaluate(const EstimatorSpec& spec, const PreparedData& data,
                                const EvalOptions& eval_options) {
    auto model = fit(spec, data.train_transformed, data.preprocessing);
    auto report = evaluate(model, data.test, eval_options);
    StoredEvaluation stored;
    stored.accuracy = report.metrics.accuracy;
    stored.macro_auc = report.macro_auc.value_or(0.0);
    stored.seconds = report.execution_seconds();
    return {model.with_evaluation(stored), std::move(report)};
}

}  // namespace fsnt
