#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace fsnt {

// Dense row-major matrix.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
    std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
    std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
};

struct SymmetricEigen {
    std::vector<double> values;  // non-increasing
    Matrix vectors;              // row i is the unit eigenvector of values[i]
    int sweeps = 0;
};

// Cyclic Jacobi rotation. Iterates until the off-diagonal Frobenius mass is
// below tol·‖A‖_F (or tol when A is zero). Eigenvalues within 1e-12 of zero
// from below are clamped to 0. Each eigenvector's largest-magnitude
// coordinate is made positive.
SymmetricEigen symmetric_eigen(const Matrix& a, double tol = 1e-12, int max_sweeps = 100);

double dot(std::span<const double> a, std::span<const double> b) noexcept;

}  // namespace fsnt
