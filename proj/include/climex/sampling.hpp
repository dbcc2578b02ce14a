#pragma once

#include <cmath>
#include <cstdint>

#include "climex/errors.hpp"
#include "climex/linalg.hpp"
#include "climex/rng.hpp"

namespace climex {

/// A Gaussian perturbation neighborhood N(x, σ²I): center, variance, draw
/// count and the stream seed. Immutable and shareable.
struct PerturbationConfig {
    Vector center;
    double variance = 1.0; // σ², feature units squared
    std::size_t count = 1000;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(variance > 0.0)) throw ConfigError("PerturbationConfig: variance must be > 0");
        if (count < 1) throw ConfigError("PerturbationConfig: count must be >= 1");
        for (double v : center)
            if (!std::isfinite(v)) throw ConfigError("PerturbationConfig: center must be finite");
    }
};

/// Draw the n×d sample matrix, row r = center + σ·z_r with z from the pinned
/// standard normal stream. Deterministic per seed.
inline Matrix gaussian_perturbations(const PerturbationConfig& cfg) {
    cfg.validate();
    const std::size_t d = cfg.center.size();
    const double sigma = std::sqrt(cfg.variance);
    GaussianStream stream(cfg.seed);
    Matrix samples(cfg.count, d);
    for (std::size_t r = 0; r < cfg.count; ++r)
        for (std::size_t c = 0; c < d; ++c)
            samples(r, c) = cfg.center[c] + sigma * stream.next();
    return samples;
}

} // namespace climex
