#include "fsnt/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "fsnt/error.hpp"
#include "fsnt/rng.hpp"

namespace fsnt {

namespace {

bool row_finite(std::span<const double> row) {
    return std::all_of(row.begin(), row.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace

CleanResult drop_invalid(const Dataset& d) {
    std::vector<std::size_t> keep;
    keep.reserve(d.size());
    for (std::size_t r = 0; r < d.size(); ++r) {
        if (row_finite(d.row(r))) keep.push_back(r);
    }
    if (keep.empty()) {
        throw Error(ErrorCode::EmptyAfterClean,
                    "all " + std::to_string(d.size()) + " records contain non-finite values");
    }
    return {d.subset(keep), d.size() - keep.size()};
}

CleanResult dedup(const Dataset& d) {
    std::unordered_set<RowKey, RowKeyHash, RowKeyEqual> seen;
    seen.reserve(d.size());
    std::vector<std::size_t> keep;
    keep.reserve(d.size());
    for (std::size_t r = 0; r < d.size(); ++r) {
        if (seen.insert(RowKey{&d, r}).second) keep.push_back(r);
    }
    return {d.subset(keep), d.size() - keep.size()};
}

void StandardizationParams::apply(std::span<const double> in, std::span<double> out) const {
    if (in.size() != means.size() || out.size() != means.size()) {
        throw Error(ErrorCode::SchemaMismatch, "standardizer width " + std::to_string(means.size()) +
                                                   ", record width " + std::to_string(in.size()));
    }
    for (std::size_t j = 0; j < in.size(); ++j) {
        out[j] = stds[j] > 0.0 ? (in[j] - means[j]) / stds[j] : 0.0;
    }
}

StandardizationParams fit_standardizer(const Dataset& d) {
    if (d.empty()) throw Error(ErrorCode::EmptyDataset, "cannot fit standardizer on 0 records");
    const std::size_t n = d.size();
    const std::size_t w = d.width();
    StandardizationParams p{d.schema(), std::vector<double>(w, 0.0), std::vector<double>(w, 0.0)};

    for (std::size_t r = 0; r < n; ++r) {
        const auto row = d.row(r);
        if (!row_finite(row)) {
            throw Error(ErrorCode::NonFiniteInput, "record " + std::to_string(r) + " is not finite");
        }
        for (std::size_t j = 0; j < w; ++j) p.means[j] += row[j];
    }
    for (auto& m : p.means) m /= static_cast<double>(n);

    for (std::size_t r = 0; r < n; ++r) {
        const auto row = d.row(r);
        for (std::size_t j = 0; j < w; ++j) {
            const double dev = row[j] - p.means[j];
            p.stds[j] += dev * dev;
        }
    }
    for (auto& s : p.stds) s = std::sqrt(s / static_cast<double>(n));
    return p;
}

Dataset apply_standardizer(const Dataset& d, const StandardizationParams& p) {
    if (!(d.schema() == p.schema)) {
        throw Error(ErrorCode::SchemaMismatch, "dataset schema differs from standardizer schema");
    }
    Dataset out(d.schema(), d.labeled());
    out.reserve(d.size());
    std::vector<double> buf(d.width());
    for (std::size_t r = 0; r < d.size(); ++r) {
        p.apply(d.row(r), buf);
        out.add(buf, d.labeled() ? std::optional(d.label(r)) : std::nullopt);
    }
    return out;
}

std::vector<std::size_t> train_indices(const Dataset& d, const SplitSpec& spec) {
    if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "train_fraction must lie strictly in (0,1)");
    }
    Rng rng(spec.seed);
    std::vector<std::size_t> chosen;

    if (!spec.stratified) {
        std::vector<std::size_t> idx(d.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng);
        const auto n_train =
            static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(d.size())));
        chosen.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    } else {
        if (!d.labeled()) throw Error(ErrorCode::NotLabeled, "stratified split needs labels");
        std::array<std::vector<std::size_t>, kClassCount> by_class;
        for (std::size_t r = 0; r < d.size(); ++r) {
            by_class[static_cast<std::size_t>(d.label(r))].push_back(r);
        }
        std::array<std::size_t, kClassCount> take{};
        std::array<bool, kClassCount> fractional{};
        std::size_t allocated = 0;
        for (std::size_t c = 0; c < kClassCount; ++c) {
            if (by_class[c].empty()) {
                throw Error(ErrorCode::EmptyClass,
                            "class " + std::string(class_name(static_cast<ClassLabel>(c))) +
                                " has no records");
            }
            const double exact = spec.train_fraction * static_cast<double>(by_class[c].size());
            take[c] = static_cast<std::size_t>(std::floor(exact));
            fractional[c] = exact > static_cast<double>(take[c]);
            allocated += take[c];
        }
        const auto target =
            static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(d.size())));
        for (std::size_t c = 0; c < kClassCount && allocated < target; ++c) {
            if (fractional[c]) {
                ++take[c];
                ++allocated;
            }
        }
        for (std::size_t c = 0; c < kClassCount; ++c) {
            auto idx = by_class[c];
            std::shuffle(idx.begin(), idx.end(), rng);
            chosen.insert(chosen.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take[c]));
        }
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

Split train_test_split(const Dataset& d, const SplitSpec& spec) {
    const auto train_idx = train_indices(d, spec);
    std::vector<std::size_t> test_idx;
    test_idx.reserve(d.size() - train_idx.size());
    std::size_t next = 0;
    for (std::size_t r = 0; r < d.size(); ++r) {
        if (next < train_idx.size() && train_idx[next] == r) {
            ++next;
        } else {
            test_idx.push_back(r);
        }
    }
    return {d.subset(train_idx), d.subset(test_idx)};
}

}  // namespace fsnt
