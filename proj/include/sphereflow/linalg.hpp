#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "sphereflow/errors.hpp"

namespace sphereflow {

using Vec = std::vector<double>;

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(std::span<const double> a) { return dot(a, a); }
inline double norm(std::span<const double> a) { return std::sqrt(norm2(a)); }

inline void axpy(double c, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += c * x[i];
}

inline Vec scaled(std::span<const double> x, double c) {
    Vec r(x.begin(), x.end());
    for (double& v : r) v *= c;
    return r;
}

inline Vec sub(std::span<const double> a, std::span<const double> b) {
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

inline Vec add(std::span<const double> a, std::span<const double> b) {
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
    return r;
}

inline void normalize_in_place(std::span<double> x) {
    const double n = norm(x);
    if (n <= 0.0) throw RangeError("cannot normalize a zero vector");
    for (double& v : x) v /= n;
}

// Compensated accumulator; summation order stays the caller's responsibility.
struct Kahan {
    double sum = 0.0;
    double c = 0.0;
    void add(double v) {
        const double y = v - c;
        const double t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    double value() const { return sum; }
};

// Dense symmetric matrix, row major, sized for the small dimensions used here.
struct Matrix {
    int n = 0;
    Vec a;  // n*n

    Matrix() = default;
    Matrix(int n_, double fill = 0.0) : n(n_), a(static_cast<std::size_t>(n_) * n_, fill) {}

    static Matrix identity(int n_, double scale = 1.0) {
        Matrix m(n_);
        for (int i = 0; i < n_; ++i) m(i, i) = scale;
        return m;
    }
    static Matrix diag(const Vec& d) {
        Matrix m(static_cast<int>(d.size()));
        for (int i = 0; i < m.n; ++i) m(i, i) = d[i];
        return m;
    }

    double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * n + j]; }
    double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * n + j]; }

    Vec apply(std::span<const double> x) const {
        Vec y(n, 0.0);
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (int j = 0; j < n; ++j) s += (*this)(i, j) * x[j];
            y[i] = s;
        }
        return y;
    }

    double frob() const {
        double s = 0.0;
        for (double v : a) s += v * v;
        return std::sqrt(s);
    }

    bool symmetric(double rel_tol = 1e-12) const {
        double maxdev = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                maxdev = std::max(maxdev, std::abs((*this)(i, j) - (*this)(j, i)));
        return maxdev <= rel_tol * std::max(1.0, frob());
    }
};

struct EigenDecomposition {
    Vec eigenvalues;              // sorted descending
    std::vector<Vec> eigenvectors;  // eigenvectors[k] pairs with eigenvalues[k]
};

// Cyclic Jacobi rotations; fine for the d <= 16 matrices that appear here.
EigenDecomposition eigen_symmetric(const Matrix& A);

double operator_norm(const Matrix& A);  // max |lambda_i|; throws NonSymmetricError

}  // namespace sphereflow
