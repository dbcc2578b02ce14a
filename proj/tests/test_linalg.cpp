#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "climex/linalg.hpp"

using namespace climex;

namespace {

Matrix random_spd(std::size_t d, std::mt19937_64& rng, double ridge = 1.0) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix m(d, d);
    for (double& v : m.data) v = normal(rng);
    Matrix spd(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < d; ++k) acc += m(k, i) * m(k, j);
            spd(i, j) = acc;
        }
    for (std::size_t i = 0; i < d; ++i) spd(i, i) += ridge;
    return spd;
}

Matrix multiply_lower_by_transpose(const Matrix& l) {
    Matrix out(l.rows, l.rows);
    for (std::size_t i = 0; i < l.rows; ++i)
        for (std::size_t j = 0; j < l.rows; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < l.cols; ++k) acc += l(i, k) * l(j, k);
            out(i, j) = acc;
        }
    return out;
}

} // namespace

TEST_CASE("cholesky of identity is identity") {
    const Matrix eye = Matrix::identity(3);
    const Matrix l = cholesky_factor(eye);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            REQUIRE(l(i, j) == Catch::Approx(i == j ? 1.0 : 0.0).margin(1e-15));
}

TEST_CASE("cholesky hand-checkable 2x2") {
    Matrix a(2, 2);
    a(0, 0) = 4; a(0, 1) = 2; a(1, 0) = 2; a(1, 1) = 3;
    const Matrix l = cholesky_factor(a);
    REQUIRE(l(0, 0) == Catch::Approx(2.0));
    REQUIRE(l(1, 0) == Catch::Approx(1.0));
    REQUIRE(l(0, 1) == Catch::Approx(0.0).margin(1e-15));
    REQUIRE(l(1, 1) == Catch::Approx(std::sqrt(2.0)));
}

TEST_CASE("cholesky reconstruction on random SPD matrices") {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t d = 2 + static_cast<std::size_t>(rng() % 9); // up to 10
        const Matrix a = random_spd(d, rng);
        const Matrix l = cholesky_factor(a);
        const Matrix rebuilt = multiply_lower_by_transpose(l);
        Matrix diff = a;
        for (std::size_t i = 0; i < diff.data.size(); ++i) diff.data[i] -= rebuilt.data[i];
        REQUIRE(frobenius_norm(diff) <= 1e-10 * frobenius_norm(a));
    }
}

TEST_CASE("cholesky rejects non-SPD input") {
    Matrix a(2, 2);
    a(0, 0) = 1; a(0, 1) = 2; a(1, 0) = 2; a(1, 1) = 1; // eigenvalues 3, -1
    REQUIRE_THROWS_AS(cholesky_factor(a), NotSpd);

    Matrix asym(2, 2);
    asym(0, 0) = 1; asym(0, 1) = 0.5; asym(1, 0) = 0.0; asym(1, 1) = 1;
    REQUIRE_THROWS_AS(cholesky_factor(asym), NotSpd);
}

TEST_CASE("spd_solve trivial systems") {
    REQUIRE(spd_solve(Matrix::identity(3), {1, 2, 3}) == Vector{1, 2, 3});

    Matrix diag(2, 2);
    diag(0, 0) = 2; diag(1, 1) = 4;
    const Vector x = spd_solve(diag, {2, 8});
    REQUIRE(x[0] == Catch::Approx(1.0));
    REQUIRE(x[1] == Catch::Approx(2.0));
}

TEST_CASE("spd_solve residual on random systems up to d = 32") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t d = 2 + static_cast<std::size_t>(rng() % 31);
        const Matrix a = random_spd(d, rng);
        Vector b(d);
        for (double& v : b) v = normal(rng);
        const Vector x = spd_solve(a, b);

        Vector residual(d, 0.0);
        for (std::size_t i = 0; i < d; ++i) {
            double acc = -b[i];
            for (std::size_t j = 0; j < d; ++j) acc += a(i, j) * x[j];
            residual[i] = acc;
        }
        const double scale =
            frobenius_norm(a) * norm(x, NormKind::L2) + norm(b, NormKind::L2);
        REQUIRE(norm(residual, NormKind::L2) <= 1e-8 * scale);
    }
}

TEST_CASE("vector norms") {
    REQUIRE(norm({3, 4}, NormKind::L2) == Catch::Approx(5.0));
    REQUIRE(norm({1, -2, 3}, NormKind::L1) == Catch::Approx(6.0));
    REQUIRE(norm({0, 0, 0}, NormKind::L1) == 0.0);
    REQUIRE(norm({0, 0, 0}, NormKind::L2) == 0.0);
}

TEST_CASE("norm homogeneity") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        Vector v(5);
        for (double& x : v) x = normal(rng);
        const double alpha = normal(rng) * 10.0;
        for (const NormKind kind : {NormKind::L1, NormKind::L2}) {
            const double lhs = norm(scale(v, alpha), kind);
            const double rhs = std::abs(alpha) * norm(v, kind);
            REQUIRE(lhs == Catch::Approx(rhs).epsilon(1e-12));
        }
    }
}

TEST_CASE("covariance with constant labels is zero") {
    Matrix samples(4, 2);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& v : samples.data) v = normal(rng);
    const Vector cov = sample_covariance_with_scalar(samples, {3.5, 3.5, 3.5, 3.5});
    for (double v : cov) REQUIRE(std::abs(v) < 1e-14);
}

TEST_CASE("covariance of labels with themselves is the sample variance") {
    const Vector labels = {1.0, 2.0, 4.0, 9.0};
    Matrix samples(4, 1);
    for (std::size_t i = 0; i < 4; ++i) samples(i, 0) = labels[i];
    const double mu = mean(labels);
    double var = 0.0;
    for (double v : labels) var += (v - mu) * (v - mu);
    var /= 4.0; // 1/n divisor
    REQUIRE(sample_covariance_with_scalar(samples, labels)[0] == Catch::Approx(var));
}

TEST_CASE("covariance matches an independent single-pass oracle on a 5x2 fixture") {
    Matrix samples(5, 2);
    const double raw[5][2] = {{0.3, -1.2}, {1.7, 0.4}, {-0.5, 2.2}, {0.9, -0.8}, {2.1, 1.3}};
    Vector labels = {0.7, -0.2, 1.9, 0.4, -1.1};
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 2; ++j) samples(i, j) = raw[i][j];

    // oracle: E[b_i f] - E[b_i] E[f], accumulated single-pass
    Vector oracle(2, 0.0);
    Vector col_sum(2, 0.0);
    double label_sum = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
        label_sum += labels[i];
        for (std::size_t j = 0; j < 2; ++j) {
            oracle[j] += samples(i, j) * labels[i];
            col_sum[j] += samples(i, j);
        }
    }
    for (std::size_t j = 0; j < 2; ++j)
        oracle[j] = oracle[j] / 5.0 - (col_sum[j] / 5.0) * (label_sum / 5.0);

    const Vector cov = sample_covariance_with_scalar(samples, labels);
    for (std::size_t j = 0; j < 2; ++j) REQUIRE(cov[j] == Catch::Approx(oracle[j]).margin(1e-14));
}

TEST_CASE("covariance requires at least two samples") {
    Matrix samples(1, 2);
    REQUIRE_THROWS_AS(sample_covariance_with_scalar(samples, {1.0}), TooFewSamples);
}

TEST_CASE("covariance is translation invariant") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix samples(20, 3);
    Vector labels(20);
    for (double& v : samples.data) v = normal(rng);
    for (double& v : labels) v = normal(rng);
    const Vector base = sample_covariance_with_scalar(samples, labels);

    Matrix shifted = samples;
    const Vector offset = {13.5, -2.25, 101.0};
    for (std::size_t r = 0; r < shifted.rows; ++r)
        for (std::size_t c = 0; c < shifted.cols; ++c) shifted(r, c) += offset[c];
    const Vector moved = sample_covariance_with_scalar(shifted, labels);
    for (std::size_t j = 0; j < 3; ++j)
        REQUIRE(moved[j] == Catch::Approx(base[j]).margin(1e-10));
}
