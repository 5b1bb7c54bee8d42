#pragma once

// Data-parallel inner loops. Each kernel has an OpenMP version and a plain
// serial reference; the test suite checks them against each other and
// bench/ times them. Parallel versions never depend on the thread count:
// work is cut into fixed-size blocks and reduced in block order.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fsnt/linalg.hpp"

namespace fsnt::kernels {

struct Moments {
    std::vector<double> means;
    Matrix covariance;  // population (divide by n)
};

// `values` is row-major n×d.
Moments covariance(std::span<const double> values, std::size_t n, std::size_t d);
Moments covariance_serial(std::span<const double> values, std::size_t n, std::size_t d);

double squared_distance(std::span<const double> a, std::span<const double> b) noexcept;

// k nearest rows of `train` for each row of `queries`, as train indices in
// ascending (squared distance, index) order. Result is row-major m×k.
std::vector<std::uint32_t> knn_search(std::span<const double> train, std::size_t n,
                                      std::span<const double> queries, std::size_t m,
                                      std::size_t d, std::size_t k);
std::vector<std::uint32_t> knn_search_serial(std::span<const double> train, std::size_t n,
                                             std::span<const double> queries, std::size_t m,
                                             std::size_t d, std::size_t k);

// Runs body(i) for i in [0, n), in parallel when OpenMP is available.
template <typename Body>
void parallel_for(std::size_t n, Body&& body) {
#pragma omp parallel for schedule(dynamic, 64)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
        body(static_cast<std::size_t>(i));
    }
}

int max_threads() noexcept;

}  // namespace fsnt::kernels
