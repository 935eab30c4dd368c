#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "core/errors.hpp"
#include "core/rng.hpp"

namespace ttapt {

using Vec = std::vector<double>;

// Dense row-major matrix of doubles.
struct Mat {
    int rows = 0;
    int cols = 0;
    Vec a;

    Mat() = default;
    Mat(int r, int c, double fill = 0.0) : rows(r), cols(c), a(static_cast<size_t>(r) * c, fill) {}

    double& operator()(int r, int c) { return a[static_cast<size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return a[static_cast<size_t>(r) * cols + c]; }

    double* row(int r) { return a.data() + static_cast<size_t>(r) * cols; }
    const double* row(int r) const { return a.data() + static_cast<size_t>(r) * cols; }

    size_t size() const { return a.size(); }

    bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
};

inline Mat randn(int rows, int cols, double scale, Rng& rng) {
    Mat m(rows, cols);
    for (auto& x : m.a) x = scale * rng.gaussian();
    return m;
}

// y = A x  (A: m x n, x: n, y: m)
inline void matvec(const Mat& A, const double* x, double* y) {
    for (int r = 0; r < A.rows; ++r) {
        const double* w = A.row(r);
        double s = 0.0;
        for (int c = 0; c < A.cols; ++c) s += w[c] * x[c];
        y[r] = s;
    }
}

// y = A^T x  (A: m x n, x: m, y: n), accumulating into y
inline void matvec_t_acc(const Mat& A, const double* x, double* y) {
    for (int r = 0; r < A.rows; ++r) {
        const double* w = A.row(r);
        const double xr = x[r];
        for (int c = 0; c < A.cols; ++c) y[c] += w[c] * xr;
    }
}

inline double dot(const double* x, const double* y, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

inline double norm2(const double* x, int n) { return std::sqrt(dot(x, x, n)); }

inline void check_finite(const double* x, size_t n, const char* what) {
    for (size_t i = 0; i < n; ++i) {
        if (!std::isfinite(x[i])) raise(ErrorCode::Numerical, std::string("non-finite value in ") + what);
    }
}

} // namespace ttapt
