#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "climex/dataset.hpp"
#include "climex/errors.hpp"
#include "climex/explainers.hpp"
#include "climex/linalg.hpp"
#include "climex/mlp.hpp"
#include "climex/rng.hpp"

namespace climex {

struct CurvePoint {
    std::size_t perturbation_count = 0;
    double value = 0.0;
    double stderr_ = 0.0;
};

using Curve = std::vector<CurvePoint>;

struct ExperimentConfig {
    double sigma2 = 1.0;
    std::vector<std::size_t> n_grid = {100, 200, 1000, 10000};
    double neighbor_sigma2 = 0.01;
    std::size_t neighbors_per_point = 10;
    std::size_t test_subset_size = 50;
    std::uint64_t base_seed = 0;
    NormKind norm = NormKind::L1;
    std::vector<std::size_t> epochs_list = {1, 15};
    std::vector<double> sigma2_list = {0.01, 0.1, 1.0};
    std::size_t oracle_draws = 1000000;
    std::size_t convergence_subset_size = 10;

    void validate() const {
        if (n_grid.empty()) throw ConfigError("ExperimentConfig: n_grid must be nonempty");
        if (!(sigma2 > 0.0) || !(neighbor_sigma2 > 0.0))
            throw ConfigError("ExperimentConfig: variances must be > 0");
    }
};

struct ConvergenceReport {
    std::vector<std::size_t> n_grid;
    std::vector<double> smoothgrad_error; // mean L2 distance to the oracle per n
    std::vector<double> clime_error;
    double smoothgrad_slope = 0.0; // log-log least-squares slope
    double clime_slope = 0.0;
};

enum class ExplainerMethod { SmoothGrad, CLime };

// Seed-lane layout. Every Monte-Carlo draw in an experiment gets its seed from
// derive_seed(base, point_index, grid_index*kRepStride + rep, lane + subject),
// where `subject` distinguishes the center (0) from its neighbors (1..). The
// neighbor-draw lane is shared across methods so SmoothGrad and C-LIME see
// identical neighbor sets. Curves are therefore invariant under the degree of
// parallelization used to evaluate them.
namespace seed_lane {
constexpr std::uint64_t kRepStride = 1u << 20;
constexpr std::uint64_t kSmoothGrad = 0x100;
constexpr std::uint64_t kClime = 0x200;
constexpr std::uint64_t kNeighborDraw = 0x300;
constexpr std::uint64_t kOracle = 0x400;
} // namespace seed_lane

namespace detail {

inline std::vector<std::size_t> test_subset(const Dataset& data, std::size_t limit) {
    if (data.test_indices.empty()) throw EmptySplit("experiment: dataset has no test split");
    std::vector<std::size_t> subset = data.test_indices;
    if (subset.size() > limit) subset.resize(limit);
    return subset;
}

inline CurvePoint summarize(std::size_t n, const std::vector<double>& values) {
    CurvePoint pt{n, 0.0, 0.0};
    for (double v : values) pt.value += v;
    pt.value /= static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - pt.value) * (v - pt.value);
        pt.stderr_ = std::sqrt(ss / static_cast<double>(values.size() - 1)) /
                     std::sqrt(static_cast<double>(values.size()));
    }
    return pt;
}

inline Vector explain(ExplainerMethod method, const BlackBox& f, const Vector& x, double sigma2,
                      std::size_t n, std::uint64_t seed) {
    PerturbationConfig cfg{x, sigma2, n, seed};
    if (method == ExplainerMethod::SmoothGrad) return smoothgrad(f, cfg).weights;
    return clime(f, cfg).weights;
}

} // namespace detail

/// Equivalence study (one repetition lane): per grid point n, the mean over
/// the test subset of ‖SG_n(x) − CLIME_n(x)‖ with independent draws per
/// (point, n, method).
inline Curve run_equivalence(const BlackBox& f, const Dataset& data, const ExperimentConfig& cfg,
                             std::size_t rep = 0) {
    cfg.validate();
    const auto subset = detail::test_subset(data, cfg.test_subset_size);
    Curve curve;
    for (std::size_t j = 0; j < cfg.n_grid.size(); ++j) {
        const std::size_t n = cfg.n_grid[j];
        const std::uint64_t grid_key = j * seed_lane::kRepStride + rep;
        std::vector<double> distances;
        distances.reserve(subset.size());
        for (std::size_t i = 0; i < subset.size(); ++i) {
            const Vector x = data.features.row(subset[i]);
            const Vector sg = detail::explain(
                ExplainerMethod::SmoothGrad, f, x, cfg.sigma2, n,
                derive_seed(cfg.base_seed, i, grid_key, seed_lane::kSmoothGrad));
            const Vector cl =
                detail::explain(ExplainerMethod::CLime, f, x, cfg.sigma2, n,
                                derive_seed(cfg.base_seed, i, grid_key, seed_lane::kClime));
            distances.push_back(norm(sub(sg, cl), cfg.norm));
        }
        curve.push_back(detail::summarize(n, distances));
    }
    return curve;
}

/// Robustness study: per grid point n, the mean over the test subset of the
/// max over neighbors x' ~ N(x, neighbor_sigma2·I) of ‖expl(x) − expl(x')‖.
inline Curve run_robustness(ExplainerMethod method, const BlackBox& f, const Dataset& data,
                            const ExperimentConfig& cfg, std::size_t rep = 0) {
    cfg.validate();
    const auto subset = detail::test_subset(data, cfg.test_subset_size);
    const std::uint64_t method_lane =
        method == ExplainerMethod::SmoothGrad ? seed_lane::kSmoothGrad : seed_lane::kClime;

    Curve curve;
    for (std::size_t j = 0; j < cfg.n_grid.size(); ++j) {
        const std::size_t n = cfg.n_grid[j];
        const std::uint64_t grid_key = j * seed_lane::kRepStride + rep;
        std::vector<double> max_distances;
        max_distances.reserve(subset.size());
        for (std::size_t i = 0; i < subset.size(); ++i) {
            const Vector x = data.features.row(subset[i]);
            // Neighbor sets depend only on (base seed, point), not on the
            // method, grid point or repetition.
            PerturbationConfig neighbor_cfg{x, cfg.neighbor_sigma2, cfg.neighbors_per_point,
                                            derive_seed(cfg.base_seed, i, 0,
                                                        seed_lane::kNeighborDraw)};
            const Matrix neighbors = gaussian_perturbations(neighbor_cfg);

            const Vector center_expl =
                detail::explain(method, f, x, cfg.sigma2, n,
                                derive_seed(cfg.base_seed, i, grid_key, method_lane));
            double worst = 0.0;
            for (std::size_t k = 0; k < neighbors.rows; ++k) {
                const Vector neighbor_expl = detail::explain(
                    method, f, neighbors.row(k), cfg.sigma2, n,
                    derive_seed(cfg.base_seed, i, grid_key, method_lane + 1 + k));
                worst = std::max(worst, norm(sub(center_expl, neighbor_expl), cfg.norm));
            }
            max_distances.push_back(worst);
        }
        curve.push_back(detail::summarize(n, max_distances));
    }
    return curve;
}

struct SweepCurves {
    Curve equivalence;
    Curve robustness_smoothgrad;
    Curve robustness_clime;
};

/// Equivalence and robustness curves per σ² in sigma2_list. Seeds do not
/// depend on σ², so a single-entry sweep matches run_equivalence exactly.
inline std::map<double, SweepCurves> run_sigma_sweep(const BlackBox& f, const Dataset& data,
                                                     const ExperimentConfig& cfg,
                                                     std::size_t rep = 0) {
    if (cfg.sigma2_list.empty()) throw ConfigError("run_sigma_sweep: sigma2_list is empty");
    std::map<double, SweepCurves> out;
    for (double sigma2 : cfg.sigma2_list) {
        ExperimentConfig local = cfg;
        local.sigma2 = sigma2;
        out[sigma2] = {run_equivalence(f, data, local, rep),
                       run_robustness(ExplainerMethod::SmoothGrad, f, data, local, rep),
                       run_robustness(ExplainerMethod::CLime, f, data, local, rep)};
    }
    return out;
}

struct AccuracySweepEntry {
    double test_accuracy = 0.0;
    SweepCurves curves;
};

/// Trains one model per epoch count (shared init and train seed) and produces
/// the equivalence/robustness curves for each.
inline std::map<std::size_t, AccuracySweepEntry> run_accuracy_sweep(const Dataset& data,
                                                                    const ExperimentConfig& cfg,
                                                                    const TrainConfig& train_cfg,
                                                                    std::size_t rep = 0) {
    if (cfg.epochs_list.empty()) throw ConfigError("run_accuracy_sweep: epochs_list is empty");
    std::map<std::size_t, AccuracySweepEntry> out;
    for (std::size_t epochs : cfg.epochs_list) {
        Mlp model = Mlp::init({data.dim(), 10, 10, 2}, train_cfg.seed);
        TrainConfig local = train_cfg;
        local.epochs = epochs;
        const TrainMetrics metrics = train(model, data, local);
        const BlackBox f = BlackBox::from_mlp(model);
        out[epochs] = {metrics.test_accuracy,
                       {run_equivalence(f, data, cfg, rep),
                        run_robustness(ExplainerMethod::SmoothGrad, f, data, cfg, rep),
                        run_robustness(ExplainerMethod::CLime, f, data, cfg, rep)}};
    }
    return out;
}

/// Convergence of both methods to the large-sample oracle: mean L2 distance
/// per n plus the fitted log-log slope.
inline ConvergenceReport run_convergence(const BlackBox& f, const Dataset& data,
                                         const ExperimentConfig& cfg, std::size_t rep = 0) {
    cfg.validate();
    const auto subset = detail::test_subset(data, cfg.convergence_subset_size);

    std::vector<Vector> oracle_expl;
    oracle_expl.reserve(subset.size());
    for (std::size_t i = 0; i < subset.size(); ++i) {
        const Vector x = data.features.row(subset[i]);
        oracle_expl.push_back(
            expected_explanation_mc(f, x, cfg.sigma2, cfg.oracle_draws,
                                    derive_seed(cfg.base_seed, i, 0, seed_lane::kOracle))
                .weights);
    }

    ConvergenceReport report;
    report.n_grid = cfg.n_grid;
    for (std::size_t j = 0; j < cfg.n_grid.size(); ++j) {
        const std::size_t n = cfg.n_grid[j];
        const std::uint64_t grid_key = j * seed_lane::kRepStride + rep;
        double sg_err = 0.0;
        double cl_err = 0.0;
        for (std::size_t i = 0; i < subset.size(); ++i) {
            const Vector x = data.features.row(subset[i]);
            const Vector sg = detail::explain(
                ExplainerMethod::SmoothGrad, f, x, cfg.sigma2, n,
                derive_seed(cfg.base_seed, i, grid_key, seed_lane::kSmoothGrad));
            const Vector cl =
                detail::explain(ExplainerMethod::CLime, f, x, cfg.sigma2, n,
                                derive_seed(cfg.base_seed, i, grid_key, seed_lane::kClime));
            sg_err += norm(sub(sg, oracle_expl[i]), NormKind::L2);
            cl_err += norm(sub(cl, oracle_expl[i]), NormKind::L2);
        }
        report.smoothgrad_error.push_back(sg_err / static_cast<double>(subset.size()));
        report.clime_error.push_back(cl_err / static_cast<double>(subset.size()));
    }

    auto loglog_slope = [&](const std::vector<double>& errors) {
        // least squares on (ln n, ln error)
        const std::size_t k = errors.size();
        double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            const double lx = std::log(static_cast<double>(report.n_grid[j]));
            const double ly = std::log(errors[j]);
            sx += lx;
            sy += ly;
            sxx += lx * lx;
            sxy += lx * ly;
        }
        const double denom = static_cast<double>(k) * sxx - sx * sx;
        return (static_cast<double>(k) * sxy - sx * sy) / denom;
    };
    report.smoothgrad_slope = loglog_slope(report.smoothgrad_error);
    report.clime_slope = loglog_slope(report.clime_error);
    return report;
}

/// One CSV per named curve (header "n,value,stderr") plus a manifest.json.
/// Nothing is written unless the results validate; on a mid-write failure all
/// files written so far are removed.
inline void write_report(const std::map<std::string, Curve>& results,
                         const nlohmann::json& manifest_info, const std::string& out_dir) {
    if (results.empty()) throw IoError("write_report: no results to write");
    for (const auto& [name, curve] : results)
        if (curve.empty()) throw IoError("write_report: curve '" + name + "' is empty");

    namespace fs = std::filesystem;
    std::vector<fs::path> written;
    auto cleanup = [&] {
        std::error_code ec;
        for (const auto& p : written) fs::remove(p, ec);
    };

    try {
        fs::create_directories(out_dir);
        for (const auto& [name, curve] : results) {
            const fs::path path = fs::path(out_dir) / (name + ".csv");
            std::ofstream out(path);
            if (!out) throw IoError("write_report: cannot open " + path.string());
            written.push_back(path);
            out << "n,value,stderr\n";
            char buf[128];
            for (const CurvePoint& pt : curve) {
                std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g\n", pt.perturbation_count,
                              pt.value, pt.stderr_);
                out << buf;
            }
            if (!out) throw IoError("write_report: write failed for " + path.string());
        }

        nlohmann::json manifest = manifest_info;
        manifest["curves"] = nlohmann::json::array();
        for (const auto& [name, curve] : results) manifest["curves"].push_back(name + ".csv");

        const fs::path manifest_path = fs::path(out_dir) / "manifest.json";
        std::ofstream mout(manifest_path);
        if (!mout) throw IoError("write_report: cannot open " + manifest_path.string());
        written.push_back(manifest_path);
        mout << manifest.dump(2) << "\n";
        if (!mout) throw IoError("write_report: write failed for " + manifest_path.string());
    } catch (...) {
        cleanup();
        throw;
    }
}

/// Parse a curve CSV written by write_report.
inline Curve read_curve_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("read_curve_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != "n,value,stderr")
        throw ParseError("read_curve_csv: bad header in " + path);
    Curve curve;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        CurvePoint pt;
        if (std::sscanf(line.c_str(), "%zu,%lg,%lg", &pt.perturbation_count, &pt.value,
                        &pt.stderr_) != 3)
            throw ParseError("read_curve_csv: bad row at line " + std::to_string(line_no));
        curve.push_back(pt);
    }
    return curve;
}

} // namespace climex
