#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "climex/rng.hpp"
#include "climex/sampling.hpp"

using namespace climex;

TEST_CASE("standard normal stream is deterministic per seed") {
    GaussianStream a(123), b(123);
    for (int i = 0; i < 100; ++i) REQUIRE(a.next() == b.next());

    GaussianStream c(124);
    bool all_equal = true;
    GaussianStream a2(123);
    for (int i = 0; i < 100; ++i)
        if (a2.next() != c.next()) all_equal = false;
    REQUIRE_FALSE(all_equal);
}

TEST_CASE("standard normal stream mean and variance sanity") {
    // CLT bounds: |mean| <= 0.02 (~6 standard errors), |var - 1| <= 0.05
    GaussianStream stream(2024);
    const std::size_t n = 100000;
    double sum = 0.0, sumsq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double z = stream.next();
        sum += z;
        sumsq += z * z;
    }
    const double mean = sum / static_cast<double>(n);
    const double var = sumsq / static_cast<double>(n) - mean * mean;
    REQUIRE(std::abs(mean) <= 0.02);
    REQUIRE(std::abs(var - 1.0) <= 0.05);
}

TEST_CASE("derive_seed distinguishes lanes") {
    REQUIRE(derive_seed(1, 2, 3, 4) == derive_seed(1, 2, 3, 4));
    REQUIRE(derive_seed(1, 2, 3, 4) != derive_seed(1, 2, 3, 5));
    REQUIRE(derive_seed(1, 2, 3, 4) != derive_seed(1, 2, 4, 3));
    REQUIRE(derive_seed(1, 2, 3, 4) != derive_seed(2, 2, 3, 4));
}

TEST_CASE("near-degenerate variance keeps rows at the center") {
    PerturbationConfig cfg{{1.0, -2.0, 0.5}, 1e-12, 3, 77};
    const Matrix samples = gaussian_perturbations(cfg);
    REQUIRE(samples.rows == 3);
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < 3; ++c)
            REQUIRE(std::abs(samples(r, c) - cfg.center[c]) < 1e-5);
}

TEST_CASE("zero variance is rejected") {
    PerturbationConfig cfg{{0.0}, 0.0, 3, 1};
    REQUIRE_THROWS_AS(gaussian_perturbations(cfg), ConfigError);
}

TEST_CASE("perturbation column statistics match the config") {
    const std::size_t n = 100000;
    PerturbationConfig cfg{{1.0, 1.0}, 1.0, n, 99};
    const Matrix samples = gaussian_perturbations(cfg);

    for (std::size_t c = 0; c < 2; ++c) {
        double sum = 0.0, sumsq = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            sum += samples(r, c);
            sumsq += samples(r, c) * samples(r, c);
        }
        const double mean = sum / static_cast<double>(n);
        const double var = sumsq / static_cast<double>(n) - mean * mean;
        // 5 sigma CLT bounds from the module contract
        REQUIRE(std::abs(mean - cfg.center[c]) <= 5.0 / std::sqrt(static_cast<double>(n)));
        REQUIRE(std::abs(var - cfg.variance) <=
                5.0 * cfg.variance * std::sqrt(2.0 / static_cast<double>(n)));
    }
}

TEST_CASE("identical config yields a byte-identical sample matrix") {
    PerturbationConfig cfg{{0.25, -1.5}, 0.5, 500, 31337};
    const Matrix a = gaussian_perturbations(cfg);
    const Matrix b = gaussian_perturbations(cfg);
    REQUIRE(a.data == b.data);
}
