#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "climex/errors.hpp"

namespace climex {

using Vector = std::vector<double>;

/// Dense row-major matrix for small-dimension work (d is a couple dozen at most).
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data; // row-major, rows*cols entries

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    Vector row(std::size_t r) const {
        return Vector(data.begin() + static_cast<std::ptrdiff_t>(r * cols),
                      data.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols));
    }
};

enum class NormKind { L1, L2 };

inline double norm(const Vector& v, NormKind kind) {
    double acc = 0.0;
    if (kind == NormKind::L1) {
        for (double x : v) acc += std::abs(x);
        return acc;
    }
    for (double x : v) acc += x * x;
    return std::sqrt(acc);
}

inline Vector sub(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw DimensionMismatch("vector size mismatch in sub");
    Vector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

inline Vector add(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw DimensionMismatch("vector size mismatch in add");
    Vector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

inline Vector scale(const Vector& a, double s) {
    Vector out(a);
    for (double& x : out) x *= s;
    return out;
}

inline double dot(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw DimensionMismatch("vector size mismatch in dot");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

inline double frobenius_norm(const Matrix& m) {
    double acc = 0.0;
    for (double x : m.data) acc += x * x;
    return std::sqrt(acc);
}

/// Cholesky factorization A = L·Lᵀ of a symmetric positive definite matrix.
/// Throws NotSpd when a pivot drops below 1e-12, which in this codebase
/// signals a rank-deficient perturbation design matrix.
inline Matrix cholesky_factor(const Matrix& a) {
    if (a.rows != a.cols) throw DimensionMismatch("cholesky_factor: matrix not square");
    const std::size_t n = a.rows;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(a(i, j) - a(j, i)) > 1e-10 * (1.0 + std::abs(a(i, j))))
                throw NotSpd("cholesky_factor: matrix not symmetric");

    Matrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double diag = a(j, j);
        for (std::size_t k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
        if (diag <= 1e-12) throw NotSpd("cholesky_factor: pivot <= 1e-12, matrix not SPD");
        l(j, j) = std::sqrt(diag);
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / l(j, j);
        }
    }
    return l;
}

/// Solve A·x = b for SPD A via Cholesky.
inline Vector spd_solve(const Matrix& a, const Vector& b) {
    if (b.size() != a.rows) throw DimensionMismatch("spd_solve: b length != A rows");
    const Matrix l = cholesky_factor(a);
    const std::size_t n = a.rows;

    // forward: L y = b
    Vector y(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
        y[i] = s / l(i, i);
    }
    // backward: Lᵀ x = y
    Vector x(n);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = y[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x[k];
        x[ii] = s / l(ii, ii);
    }
    return x;
}

inline Vector column_means(const Matrix& samples) {
    Vector mean(samples.cols, 0.0);
    for (std::size_t r = 0; r < samples.rows; ++r)
        for (std::size_t c = 0; c < samples.cols; ++c) mean[c] += samples(r, c);
    for (double& m : mean) m /= static_cast<double>(samples.rows);
    return mean;
}

inline double mean(const Vector& v) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc / static_cast<double>(v.size());
}

/// Per-feature sample covariance between the rows of `samples` and the scalar
/// `labels`, with divisor 1/n. Entry i is (1/n)·Σ_b (b_i − mean_i)(f(b) − mean_f).
inline Vector sample_covariance_with_scalar(const Matrix& samples, const Vector& labels) {
    if (labels.size() != samples.rows)
        throw DimensionMismatch("sample_covariance_with_scalar: labels length != sample rows");
    if (samples.rows < 2)
        throw TooFewSamples("sample_covariance_with_scalar: need at least 2 samples");

    const Vector mu = column_means(samples);
    const double mf = mean(labels);
    Vector cov(samples.cols, 0.0);
    for (std::size_t r = 0; r < samples.rows; ++r) {
        const double dl = labels[r] - mf;
        for (std::size_t c = 0; c < samples.cols; ++c)
            cov[c] += (samples(r, c) - mu[c]) * dl;
    }
    for (double& x : cov) x /= static_cast<double>(samples.rows);
    return cov;
}

/// Sample covariance matrix of the rows, divisor 1/n.
inline Matrix sample_covariance_matrix(const Matrix& samples) {
    if (samples.rows < 2)
        throw TooFewSamples("sample_covariance_matrix: need at least 2 samples");
    const std::size_t d = samples.cols;
    const Vector mu = column_means(samples);
    Matrix cov(d, d);
    for (std::size_t r = 0; r < samples.rows; ++r) {
        for (std::size_t i = 0; i < d; ++i) {
            const double di = samples(r, i) - mu[i];
            for (std::size_t j = i; j < d; ++j)
                cov(i, j) += di * (samples(r, j) - mu[j]);
        }
    }
    const double inv_n = 1.0 / static_cast<double>(samples.rows);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i; j < d; ++j) {
            cov(i, j) *= inv_n;
            cov(j, i) = cov(i, j);
        }
    return cov;
}

} // namespace climex
