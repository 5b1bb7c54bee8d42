#include "fsnt/kernels.hpp"

#include <algorithm>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fsnt::kernels {

namespace {

constexpr std::size_t kBlockRows = 4096;

std::vector<double> column_means(std::span<const double> values, std::size_t n, std::size_t d) {
    std::vector<double> means(d, 0.0);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t j = 0; j < d; ++j) means[j] += values[r * d + j];
    for (auto& m : means) m /= static_cast<double>(n);
    return means;
}

// Upper triangle of Σ (x−μ)(x−μ)ᵀ over rows [begin, end).
void accumulate_scatter(std::span<const double> values, std::size_t d, const std::vector<double>& means,
                        std::size_t begin, std::size_t end, std::vector<double>& acc,
                        std::vector<double>& centered) {
    for (std::size_t r = begin; r < end; ++r) {
        for (std::size_t j = 0; j < d; ++j) centered[j] = values[r * d + j] - means[j];
        for (std::size_t i = 0; i < d; ++i) {
            const double ci = centered[i];
            double* out = acc.data() + i * d;
            for (std::size_t j = i; j < d; ++j) out[j] += ci * centered[j];
        }
    }
}

Matrix finish_covariance(const std::vector<double>& scatter, std::size_t n, std::size_t d) {
    Matrix cov(d, d);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i; j < d; ++j) {
            cov(i, j) = scatter[i * d + j] / static_cast<double>(n);
            cov(j, i) = cov(i, j);
        }
    }
    return cov;
}

struct Candidate {
    double dist;
    std::uint32_t index;
};

// Keeps `best` sorted by (dist, index); rows are scanned in index order so a
// tie never displaces an earlier row.
void knn_one(std::span<const double> train, std::size_t n, std::span<const double> query,
             std::size_t d, std::size_t k, std::vector<Candidate>& best, std::uint32_t* out) {
    best.clear();
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < n; ++r) {
        const double* row = train.data() + r * d;
        double s = 0.0;
        std::size_t j = 0;
        bool abandoned = false;
        // Partial sums only grow, so a row already farther than the current
        // k-th neighbour can be skipped without changing the result.
        for (; j < d; ++j) {
            const double diff = query[j] - row[j];
            s += diff * diff;
            if ((j & 7) == 7 && s > worst) {
                abandoned = true;
                break;
            }
        }
        if (abandoned) continue;
        if (best.size() == k && !(s < worst)) continue;

        Candidate c{s, static_cast<std::uint32_t>(r)};
        auto pos = std::upper_bound(best.begin(), best.end(), c, [](const Candidate& a, const Candidate& b) {
            return a.dist < b.dist || (a.dist == b.dist && a.index < b.index);
        });
        best.insert(pos, c);
        if (best.size() > k) best.pop_back();
        if (best.size() == k) worst = best.back().dist;
    }
    for (std::size_t i = 0; i < best.size(); ++i) out[i] = best[i].index;
}

}  // namespace

int max_threads() noexcept {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

Moments covariance_serial(std::span<const double> values, std::size_t n, std::size_t d) {
    Moments m;
    m.means = column_means(values, n, d);
    std::vector<double> scatter(d * d, 0.0);
    std::vector<double> centered(d);
    accumulate_scatter(values, d, m.means, 0, n, scatter, centered);
    m.covariance = finish_covariance(scatter, n, d);
    return m;
}

Moments covariance(std::span<const double> values, std::size_t n, std::size_t d) {
    Moments m;
    m.means = column_means(values, n, d);
    const std::size_t blocks = (n + kBlockRows - 1) / kBlockRows;
    std::vector<std::vector<double>> partial(blocks, std::vector<double>(d * d, 0.0));

#pragma omp parallel
    {
        std::vector<double> centered(d);
#pragma omp for schedule(static)
        for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(blocks); ++b) {
            const auto begin = static_cast<std::size_t>(b) * kBlockRows;
            const auto end = std::min(n, begin + kBlockRows);
            accumulate_scatter(values, d, m.means, begin, end, partial[static_cast<std::size_t>(b)],
                               centered);
        }
    }

    std::vector<double> scatter(d * d, 0.0);
    for (const auto& p : partial)
        for (std::size_t i = 0; i < scatter.size(); ++i) scatter[i] += p[i];
    m.covariance = finish_covariance(scatter, n, d);
    return m;
}

double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double diff = a[j] - b[j];
        s += diff * diff;
    }
    return s;
}

std::vector<std::uint32_t> knn_search_serial(std::span<const double> train, std::size_t n,
                                             std::span<const double> queries, std::size_t m,
                                             std::size_t d, std::size_t k) {
    const std::size_t kk = std::min(k, n);
    std::vector<std::uint32_t> out(m * kk);
    std::vector<Candidate> best;
    best.reserve(kk + 1);
    for (std::size_t q = 0; q < m; ++q) {
        knn_one(train, n, queries.subspan(q * d, d), d, kk, best, out.data() + q * kk);
    }
    return out;
}

std::vector<std::uint32_t> knn_search(std::span<const double> train, std::size_t n,
                                      std::span<const double> queries, std::size_t m, std::size_t d,
                                      std::size_t k) {
    const std::size_t kk = std::min(k, n);
    std::vector<std::uint32_t> out(m * kk);
#pragma omp parallel
    {
        std::vector<Candidate> best;
        best.reserve(kk + 1);
#pragma omp for schedule(dynamic, 32)
        for (std::ptrdiff_t q = 0; q < static_cast<std::ptrdiff_t>(m); ++q) {
            const auto qi = static_cast<std::size_t>(q);
            knn_one(train, n, queries.subspan(qi * d, d), d, kk, best, out.data() + qi * kk);
        }
    }
    return out;
}

}  // namespace fsnt::kernels
