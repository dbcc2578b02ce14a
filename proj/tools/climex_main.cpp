// Command-line front door: train the built-in MLP, explain single points,
// and run the experiment suites. All machine-readable output goes to stdout,
// diagnostics to stderr; nonzero exits leave no partial output files.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "climex/dataset.hpp"
#include "climex/errors.hpp"
#include "climex/experiments.hpp"
#include "climex/explainers.hpp"
#include "climex/mlp.hpp"

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::vector<std::string>& allowed,
                const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        bool ok = false;
        for (const auto& a : allowed)
            if (key == a) {
                ok = true;
                break;
            }
        if (!ok) throw climex::ConfigError("config: unknown key '" + key + "' in " + where);
    }
}

json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw climex::IoError("cannot open config file: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw climex::ParseError("config " + path + ": " + e.what());
    }
    return doc;
}

climex::Dataset build_dataset(const json& cfg) {
    check_keys(cfg, {"source", "n", "seed", "path", "target", "drop", "train_fraction",
                     "split_seed"},
               "dataset");
    const std::string source = cfg.at("source").get<std::string>();
    climex::Dataset raw;
    if (source == "simulated") {
        raw = climex::generate_simulated(cfg.value("n", 1000u), cfg.value("seed", 0ull));
    } else if (source == "csv") {
        raw = climex::load_csv(cfg.at("path").get<std::string>(),
                               cfg.at("target").get<std::string>(),
                               cfg.value("drop", std::vector<std::string>{}));
    } else {
        throw climex::ConfigError("dataset.source must be 'simulated' or 'csv'");
    }
    return climex::split_and_normalize(raw, cfg.value("train_fraction", 0.8),
                                       cfg.value("split_seed", 0ull));
}

climex::TrainConfig build_train_config(const json& cfg) {
    check_keys(cfg, {"epochs", "learning_rate", "adam_beta1", "adam_beta2", "adam_eps",
                     "batch_size", "seed"},
               "train");
    climex::TrainConfig tc;
    tc.epochs = cfg.value("epochs", tc.epochs);
    tc.learning_rate = cfg.value("learning_rate", tc.learning_rate);
    tc.adam_beta1 = cfg.value("adam_beta1", tc.adam_beta1);
    tc.adam_beta2 = cfg.value("adam_beta2", tc.adam_beta2);
    tc.adam_eps = cfg.value("adam_eps", tc.adam_eps);
    tc.batch_size = cfg.value("batch_size", tc.batch_size);
    tc.seed = cfg.value("seed", tc.seed);
    tc.validate();
    return tc;
}

climex::ExperimentConfig build_experiment_config(const json& cfg) {
    check_keys(cfg, {"sigma2", "n_grid", "neighbor_sigma2", "neighbors_per_point",
                     "test_subset_size", "base_seed", "norm", "epochs_list", "sigma2_list",
                     "oracle_draws", "convergence_subset_size"},
               "experiment");
    climex::ExperimentConfig ec;
    ec.sigma2 = cfg.value("sigma2", ec.sigma2);
    ec.n_grid = cfg.value("n_grid", ec.n_grid);
    ec.neighbor_sigma2 = cfg.value("neighbor_sigma2", ec.neighbor_sigma2);
    ec.neighbors_per_point = cfg.value("neighbors_per_point", ec.neighbors_per_point);
    ec.test_subset_size = cfg.value("test_subset_size", ec.test_subset_size);
    ec.base_seed = cfg.value("base_seed", ec.base_seed);
    ec.epochs_list = cfg.value("epochs_list", ec.epochs_list);
    ec.sigma2_list = cfg.value("sigma2_list", ec.sigma2_list);
    ec.oracle_draws = cfg.value("oracle_draws", ec.oracle_draws);
    ec.convergence_subset_size = cfg.value("convergence_subset_size", ec.convergence_subset_size);
    const std::string norm_name = cfg.value("norm", std::string("L1"));
    if (norm_name == "L1")
        ec.norm = climex::NormKind::L1;
    else if (norm_name == "L2")
        ec.norm = climex::NormKind::L2;
    else
        throw climex::ConfigError("experiment.norm must be 'L1' or 'L2'");
    ec.validate();
    return ec;
}

std::string git_describe() {
    FILE* pipe = popen("git describe --always --dirty 2>/dev/null", "r");
    if (!pipe) return "unknown";
    char buf[256];
    std::string out;
    while (fgets(buf, sizeof(buf), pipe)) out += buf;
    pclose(pipe);
    while (!out.empty() && (out.back() == '\n' || out.back() == '\r')) out.pop_back();
    return out.empty() ? "unknown" : out;
}

std::string format_sigma(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%g", v);
    std::string s = buf;
    for (char& c : s)
        if (c == '.') c = 'p';
    return s;
}

int cmd_train(const std::string& config_path, std::optional<std::uint64_t> seed_override) {
    json cfg = load_config(config_path);
    check_keys(cfg, {"dataset", "train", "hidden_dims", "model_out", "metrics_out"}, "top level");

    const climex::Dataset data = build_dataset(cfg.at("dataset"));
    climex::TrainConfig tc = build_train_config(cfg.value("train", json::object()));
    if (seed_override) tc.seed = *seed_override;

    std::vector<std::size_t> dims = {data.dim()};
    for (std::size_t h : cfg.value("hidden_dims", std::vector<std::size_t>{10, 10}))
        dims.push_back(h);
    dims.push_back(2);

    climex::Mlp model = climex::Mlp::init(dims, tc.seed);
    const climex::TrainMetrics metrics = climex::train(model, data, tc);

    const std::string model_out = cfg.at("model_out").get<std::string>();
    const std::string metrics_out = cfg.at("metrics_out").get<std::string>();
    try {
        model.save(model_out);
        json mdoc = {{"train_acc", metrics.train_accuracy},
                     {"test_acc", metrics.test_accuracy},
                     {"loss_curve", metrics.loss_curve},
                     {"seed", tc.seed},
                     {"epochs", tc.epochs}};
        std::ofstream mout(metrics_out);
        if (!mout) throw climex::IoError("cannot open " + metrics_out);
        mout << mdoc.dump(2) << "\n";
        if (!mout) throw climex::IoError("write failed for " + metrics_out);
    } catch (...) {
        std::error_code ec;
        std::filesystem::remove(model_out, ec);
        std::filesystem::remove(metrics_out, ec);
        throw;
    }

    std::cerr << "trained " << tc.epochs << " epochs: train_acc=" << metrics.train_accuracy
              << " test_acc=" << metrics.test_accuracy << "\n";
    std::cout << model_out << "\n";
    return 0;
}

int cmd_explain(const std::string& model_path, const std::string& method,
                const std::string& x_inline, std::optional<std::size_t> row,
                const std::string& config_path, double sigma2, std::size_t n, double lambda,
                std::uint64_t seed) {
    const climex::Mlp model = climex::Mlp::load(model_path);
    const climex::BlackBox f = climex::BlackBox::from_mlp(model);

    climex::Vector x;
    if (!x_inline.empty()) {
        std::stringstream ss(x_inline);
        std::string tok;
        while (std::getline(ss, tok, ','))
            x.push_back(std::stod(tok));
    } else if (row) {
        if (config_path.empty())
            throw climex::ConfigError("--row requires --config with a dataset section");
        json cfg = load_config(config_path);
        const climex::Dataset data = build_dataset(cfg.at("dataset"));
        if (*row >= data.size()) throw climex::ConfigError("--row out of range");
        x = data.features.row(*row);
    } else {
        throw climex::ConfigError("provide the point via --x or --row");
    }
    if (x.size() != model.input_dim())
        throw climex::DimensionMismatch("point has " + std::to_string(x.size()) +
                                        " features, model expects " +
                                        std::to_string(model.input_dim()));

    climex::PerturbationConfig pcfg{x, sigma2, n, seed};
    climex::AttributionVector attribution;
    if (method == "smoothgrad")
        attribution = climex::smoothgrad(f, pcfg);
    else if (method == "clime")
        attribution = climex::clime(f, pcfg);
    else if (method == "clime_ridge")
        attribution = climex::clime_ridge(f, pcfg, lambda);
    else if (method == "oracle")
        attribution = climex::expected_explanation_mc(f, x, sigma2, n, seed);
    else
        throw climex::ConfigError("--method must be smoothgrad, clime, clime_ridge or oracle");

    std::cout << attribution.to_json().dump() << "\n";
    return 0;
}

int cmd_experiment(const std::string& kind, const std::string& config_path,
                   std::optional<std::uint64_t> seed_override,
                   const std::string& out_override) {
    json cfg = load_config(config_path);
    check_keys(cfg, {"dataset", "model", "train", "experiment", "out_dir"}, "top level");

    const climex::Dataset data = build_dataset(cfg.at("dataset"));
    climex::ExperimentConfig ec = build_experiment_config(cfg.value("experiment", json::object()));
    if (seed_override) ec.base_seed = *seed_override;
    const climex::TrainConfig tc = build_train_config(cfg.value("train", json::object()));

    std::string out_dir = out_override.empty()
                              ? cfg.value("out_dir", std::string("climex-out"))
                              : out_override;

    climex::Mlp model;
    if (cfg.contains("model")) {
        model = climex::Mlp::load(cfg.at("model").get<std::string>());
    } else if (kind != "accuracy-sweep") {
        model = climex::Mlp::init({data.dim(), 10, 10, 2}, tc.seed);
        const auto metrics = climex::train(model, data, tc);
        std::cerr << "trained model: test_acc=" << metrics.test_accuracy << "\n";
    }
    const climex::BlackBox f = climex::BlackBox::from_mlp(model);

    std::map<std::string, climex::Curve> results;
    json timings = json::object();
    const auto timed = [&](const std::string& name, auto&& fn) {
        const auto start = std::chrono::steady_clock::now();
        results[name] = fn();
        timings[name] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };

    if (kind == "equivalence") {
        timed("equivalence", [&] { return climex::run_equivalence(f, data, ec); });
    } else if (kind == "robustness") {
        timed("robustness_smoothgrad", [&] {
            return climex::run_robustness(climex::ExplainerMethod::SmoothGrad, f, data, ec);
        });
        timed("robustness_clime", [&] {
            return climex::run_robustness(climex::ExplainerMethod::CLime, f, data, ec);
        });
    } else if (kind == "sigma-sweep") {
        const auto start = std::chrono::steady_clock::now();
        for (const auto& [sigma2, curves] : climex::run_sigma_sweep(f, data, ec)) {
            const std::string tag = "_sigma2_" + format_sigma(sigma2);
            results["equivalence" + tag] = curves.equivalence;
            results["robustness_smoothgrad" + tag] = curves.robustness_smoothgrad;
            results["robustness_clime" + tag] = curves.robustness_clime;
        }
        timings["sigma-sweep"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    } else if (kind == "accuracy-sweep") {
        const auto start = std::chrono::steady_clock::now();
        for (const auto& [epochs, entry] : climex::run_accuracy_sweep(data, ec, tc)) {
            const std::string tag = "_epochs_" + std::to_string(epochs);
            results["equivalence" + tag] = entry.curves.equivalence;
            results["robustness_smoothgrad" + tag] = entry.curves.robustness_smoothgrad;
            results["robustness_clime" + tag] = entry.curves.robustness_clime;
        }
        timings["accuracy-sweep"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    } else if (kind == "convergence") {
        const auto start = std::chrono::steady_clock::now();
        const climex::ConvergenceReport report = climex::run_convergence(f, data, ec);
        climex::Curve sg, cl;
        for (std::size_t j = 0; j < report.n_grid.size(); ++j) {
            sg.push_back({report.n_grid[j], report.smoothgrad_error[j], 0.0});
            cl.push_back({report.n_grid[j], report.clime_error[j], 0.0});
        }
        results["convergence_smoothgrad"] = sg;
        results["convergence_clime"] = cl;
        timings["convergence"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        timings["smoothgrad_slope"] = report.smoothgrad_slope;
        timings["clime_slope"] = report.clime_slope;
    } else {
        throw climex::ConfigError(
            "unknown experiment kind '" + kind +
            "'; valid kinds: equivalence, robustness, sigma-sweep, accuracy-sweep, convergence");
    }

    json manifest = {{"kind", kind},
                     {"config", cfg},
                     {"base_seed", ec.base_seed},
                     {"git", git_describe()},
                     {"timings", timings}};
    climex::write_report(results, manifest, out_dir);

    std::cout << (std::filesystem::path(out_dir) / "manifest.json").string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"SmoothGrad / C-LIME feature attribution toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_dir, model_path, method = "smoothgrad", x_inline, kind;
    std::uint64_t seed = 0;
    bool seed_given = false;
    double sigma2 = 1.0, lambda = 0.0;
    std::size_t n = 1000;
    std::optional<std::size_t> row;

    auto* train_cmd = app.add_subcommand("train", "train the built-in MLP from a JSON config");
    train_cmd->add_option("--config", config_path, "JSON config file")->required();
    train_cmd->add_option("--seed", seed, "override the training seed")
        ->each([&](const std::string&) { seed_given = true; });

    auto* explain_cmd = app.add_subcommand("explain", "explain one point of a saved model");
    explain_cmd->add_option("--model", model_path, "model JSON file")->required();
    explain_cmd->add_option("--method", method, "smoothgrad|clime|clime_ridge|oracle");
    explain_cmd->add_option("--x", x_inline, "comma-separated point, e.g. 0.5,-1.0");
    explain_cmd->add_option("--row", row, "dataset row index (requires --config)");
    explain_cmd->add_option("--config", config_path, "config with a dataset section");
    explain_cmd->add_option("--sigma2", sigma2, "perturbation variance");
    explain_cmd->add_option("--n", n, "perturbation count");
    explain_cmd->add_option("--lambda", lambda, "ridge penalty for clime_ridge");
    explain_cmd->add_option("--seed", seed, "stream seed");

    auto* exp_cmd = app.add_subcommand("experiment", "run an experiment suite");
    exp_cmd
        ->add_option("kind", kind,
                     "equivalence|robustness|sigma-sweep|accuracy-sweep|convergence")
        ->required();
    exp_cmd->add_option("--config", config_path, "JSON config file")->required();
    exp_cmd->add_option("--out", out_dir, "output directory override");
    exp_cmd->add_option("--seed", seed, "override the base seed")
        ->each([&](const std::string&) { seed_given = true; });

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_cmd->parsed())
            return cmd_train(config_path,
                             seed_given ? std::optional<std::uint64_t>(seed) : std::nullopt);
        if (explain_cmd->parsed())
            return cmd_explain(model_path, method, x_inline, row, config_path, sigma2, n, lambda,
                               seed);
        if (exp_cmd->parsed())
            return cmd_experiment(kind, config_path,
                                  seed_given ? std::optional<std::uint64_t>(seed) : std::nullopt,
                                  out_dir);
    } catch (const climex::RankDeficient& e) {
        std::cerr << "error: " << e.what()
                  << "\nhint: increase --n (need at least d+1 perturbations) or use "
                     "--method clime_ridge with --lambda > 0\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
