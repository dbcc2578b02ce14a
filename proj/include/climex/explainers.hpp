#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>

#include <json.hpp>

#include "climex/errors.hpp"
#include "climex/linalg.hpp"
#include "climex/mlp.hpp"
#include "climex/sampling.hpp"

namespace climex {

/// The function being explained: a scalar value map plus (optionally) its
/// input gradient. Gradient-free handles can still be explained by C-LIME and
/// the oracle. Handles must be safe for concurrent evaluation.
struct BlackBox {
    std::function<double(const Vector&)> value;
    std::function<Vector(const Vector&)> gradient; // empty for value-only boxes

    static BlackBox from_mlp(const Mlp& model) {
        return {[&model](const Vector& x) { return model.forward(x); },
                [&model](const Vector& x) { return model.input_gradient(x); }};
    }

    /// f(x) = θᵀx + b
    static BlackBox linear(Vector theta, double intercept = 0.0) {
        auto grad = [theta](const Vector&) { return theta; };
        return {[theta = std::move(theta), intercept](const Vector& x) {
                    return dot(theta, x) + intercept;
                },
                grad};
    }
};

/// Per-feature attribution, with enough provenance to serialize and compare.
struct AttributionVector {
    Vector weights;
    std::string method;          // "smoothgrad" | "clime" | "clime_ridge" | "oracle"
    Vector center;               // the explained point x
    double sigma2 = 0.0;
    std::size_t perturbation_count = 0;
    std::uint64_t seed = 0;

    nlohmann::json to_json() const {
        return {{"method", method}, {"x", center},  {"sigma2", sigma2},
                {"n", perturbation_count}, {"seed", seed}, {"weights", weights}};
    }
};

struct SurrogateFit {
    Vector weights;
    double intercept = 0.0;
    double residual_mse = 0.0;
};

inline double explanation_distance(const AttributionVector& a, const AttributionVector& b,
                                   NormKind kind) {
    return norm(sub(a.weights, b.weights), kind);
}

/// Mean input gradient over an already-drawn sample matrix. The shared-sample
/// entry point exists so linearity properties can be checked sample-wise.
inline Vector smoothgrad_on_samples(const BlackBox& f, const Matrix& samples) {
    Vector acc(samples.cols, 0.0);
    for (std::size_t r = 0; r < samples.rows; ++r) {
        const Vector g = f.gradient(samples.row(r));
        if (g.size() != samples.cols)
            throw DimensionMismatch("smoothgrad: gradient length != sample dim");
        for (std::size_t c = 0; c < samples.cols; ++c) acc[c] += g[c];
    }
    for (double& v : acc) v /= static_cast<double>(samples.rows);
    return acc;
}

inline AttributionVector smoothgrad(const BlackBox& f, const PerturbationConfig& cfg) {
    const Matrix samples = gaussian_perturbations(cfg);
    return {smoothgrad_on_samples(f, samples), "smoothgrad", cfg.center,
            cfg.variance, cfg.count, cfg.seed};
}

/// Least-squares linear surrogate with intercept, optional ridge penalty on
/// the weights only. Solved through the covariance-form normal equations
/// (Ĉ + λI)·w = ĉ_{a,y}, b = ȳ − wᵀā, with 1/n covariance divisors.
inline SurrogateFit ols_fit_ridge(const Matrix& samples, const Vector& labels, double lambda) {
    if (labels.size() != samples.rows)
        throw DimensionMismatch("ols_fit: labels length != sample rows");
    if (lambda == 0.0 && samples.rows < samples.cols + 1)
        throw RankDeficient("ols_fit: need at least d+1 samples");

    Matrix design_cov = sample_covariance_matrix(samples);
    for (std::size_t i = 0; i < design_cov.rows; ++i) design_cov(i, i) += lambda;
    const Vector label_cov = sample_covariance_with_scalar(samples, labels);

    SurrogateFit fit;
    try {
        fit.weights = spd_solve(design_cov, label_cov);
    } catch (const NotSpd& e) {
        throw RankDeficient(std::string("ols_fit: degenerate perturbation design (") + e.what() +
                            ")");
    }
    fit.intercept = mean(labels) - dot(fit.weights, column_means(samples));

    for (std::size_t r = 0; r < samples.rows; ++r) {
        const double res = labels[r] - dot(fit.weights, samples.row(r)) - fit.intercept;
        fit.residual_mse += res * res;
    }
    fit.residual_mse /= static_cast<double>(samples.rows);
    return fit;
}

inline SurrogateFit ols_fit(const Matrix& samples, const Vector& labels) {
    return ols_fit_ridge(samples, labels, 0.0);
}

inline Vector label_samples(const BlackBox& f, const Matrix& samples) {
    Vector labels(samples.rows);
    for (std::size_t r = 0; r < samples.rows; ++r) labels[r] = f.value(samples.row(r));
    return labels;
}

inline Vector clime_on_samples(const BlackBox& f, const Matrix& samples, double lambda = 0.0) {
    return ols_fit_ridge(samples, label_samples(f, samples), lambda).weights;
}

/// C-LIME: weights of the OLS surrogate over f-labeled perturbations. The
/// intercept is fitted but not part of the attribution.
inline AttributionVector clime(const BlackBox& f, const PerturbationConfig& cfg) {
    if (cfg.count < cfg.center.size() + 1)
        throw RankDeficient("clime: need at least d+1 perturbations");
    const Matrix samples = gaussian_perturbations(cfg);
    return {clime_on_samples(f, samples), "clime", cfg.center, cfg.variance, cfg.count, cfg.seed};
}

/// Ridge C-LIME; λ = 0 reproduces clime exactly on the same seed.
inline AttributionVector clime_ridge(const BlackBox& f, const PerturbationConfig& cfg,
                                     double lambda) {
    if (lambda < 0.0) throw ConfigError("clime_ridge: lambda must be >= 0");
    const Matrix samples = gaussian_perturbations(cfg);
    return {clime_on_samples(f, samples, lambda), "clime_ridge", cfg.center, cfg.variance,
            cfg.count, cfg.seed};
}

/// Monte-Carlo estimate of the expected explanation (1/σ²)·cov(a, f(a)) over
/// a ~ N(x, σ²I) — the shared large-sample limit of SmoothGrad and C-LIME.
inline AttributionVector expected_explanation_mc(const BlackBox& f, const Vector& x, double sigma2,
                                                 std::size_t n_draws, std::uint64_t seed) {
    PerturbationConfig cfg{x, sigma2, n_draws, seed};
    const Matrix samples = gaussian_perturbations(cfg);
    Vector weights = sample_covariance_with_scalar(samples, label_samples(f, samples));
    for (double& w : weights) w /= sigma2;
    return {std::move(weights), "oracle", x, sigma2, n_draws, seed};
}

} // namespace climex
