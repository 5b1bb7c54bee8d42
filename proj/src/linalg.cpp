#include "fsnt/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fsnt/error.hpp"

namespace fsnt {

double dot(std::span<const double> a, std::span<const double> b) noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

SymmetricEigen symmetric_eigen(const Matrix& input, double tol, int max_sweeps) {
    if (input.rows != input.cols) {
        throw Error(ErrorCode::InvalidArgument, "eigendecomposition needs a square matrix");
    }
    const std::size_t n = input.rows;
    Matrix a = input;
    Matrix v(n, n);
    for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

    double frob = 0.0;
    for (const double x : a.data) frob += x * x;
    frob = std::sqrt(frob);
    const double threshold = frob > 0.0 ? tol * frob : tol;

    auto off_norm = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (i != j) s += a(i, j) * a(i, j);
        return std::sqrt(s);
    };

    int sweep = 0;
    while (sweep < max_sweeps && off_norm() > threshold) {
        ++sweep;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                // Rotation angle that zeroes a(p,q) (Golub & Van Loan 8.4).
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = std::copysign(1.0, theta) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                // Columns of v accumulate the eigenvectors.
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });

    SymmetricEigen out;
    out.sweeps = sweep;
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto col = order[i];
        double lambda = a(col, col);
        if (lambda < 0.0 && lambda > -1e-12) lambda = 0.0;
        out.values[i] = lambda;

        std::size_t arg = 0;
        for (std::size_t k = 1; k < n; ++k) {
            if (std::fabs(v(k, col)) > std::fabs(v(arg, col))) arg = k;
        }
        const double sign = v(arg, col) < 0.0 ? -1.0 : 1.0;
        for (std::size_t k = 0; k < n; ++k) out.vectors(i, k) = sign * v(k, col);
    }
    return out;
}

}  // namespace fsnt
