#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "climex/dataset.hpp"
#include "climex/errors.hpp"
#include "climex/linalg.hpp"
#include "climex/rng.hpp"

namespace climex {

/// Hidden-layer activation. Elu is the production choice; Square exists for
/// analytic fixture models (e.g. a network computing x1^2 exactly).
enum class Activation { Elu, Square };

struct TrainConfig {
    std::size_t epochs = 15;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;

    void validate() const {
        if (epochs < 1) throw ConfigError("TrainConfig: epochs must be >= 1");
        if (!(learning_rate > 0.0)) throw ConfigError("TrainConfig: learning_rate must be > 0");
        if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0 && adam_beta2 > 0.0 && adam_beta2 < 1.0))
            throw ConfigError("TrainConfig: betas must be in (0,1)");
    }
};

struct TrainMetrics {
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
    std::vector<double> loss_curve; // mean train loss per epoch
};

/// Empirical gradient-norm bound over a probe set; the Lipschitz constant of
/// the expected explanation map is grad_max/(2σ) for a given σ.
struct LipschitzEstimate {
    double grad_max = 0.0;
    double bound_for_sigma(double sigma) const { return grad_max / (2.0 * sigma); }
};

/// A small fully-connected network. Two-output nets are binary classifiers
/// whose forward() is the softmax probability of class 1; one-output nets are
/// raw scalar functions (used for analytic fixtures). Immutable once trained;
/// forward/input_gradient are pure and safe for concurrent use.
class Mlp {
public:
    Mlp() = default;

    /// Glorot-uniform initialization, bounds ±√(6/(fan_in+fan_out)), from the
    /// pinned generator.
    static Mlp init(const std::vector<std::size_t>& dims, std::uint64_t seed,
                    Activation act = Activation::Elu) {
        if (dims.size() < 2) throw ConfigError("Mlp: need at least input and output dims");
        Mlp m;
        m.dims_ = dims;
        m.activation_ = act;
        Xoshiro256pp rng(seed);
        for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
            const std::size_t fan_in = dims[l];
            const std::size_t fan_out = dims[l + 1];
            const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
            Matrix w(fan_out, fan_in);
            for (double& v : w.data) v = bound * (2.0 * rng.uniform01() - 1.0);
            m.weights_.push_back(std::move(w));
            m.biases_.emplace_back(fan_out, 0.0);
        }
        return m;
    }

    static Mlp from_parameters(std::vector<std::size_t> dims, std::vector<Matrix> weights,
                               std::vector<Vector> biases, Activation act = Activation::Elu) {
        Mlp m;
        m.dims_ = std::move(dims);
        m.weights_ = std::move(weights);
        m.biases_ = std::move(biases);
        m.activation_ = act;
        for (std::size_t l = 0; l + 1 < m.dims_.size(); ++l) {
            if (m.weights_[l].rows != m.dims_[l + 1] || m.weights_[l].cols != m.dims_[l] ||
                m.biases_[l].size() != m.dims_[l + 1])
                throw DimensionMismatch("Mlp: inconsistent parameter shapes");
        }
        return m;
    }

    std::size_t input_dim() const { return dims_.front(); }
    std::size_t output_dim() const { return dims_.back(); }
    const std::vector<std::size_t>& dims() const { return dims_; }
    Activation activation() const { return activation_; }

    /// Class-1 probability for two-output nets, raw scalar otherwise.
    double forward(const Vector& x) const {
        check_input(x);
        Vector h = x;
        for (std::size_t l = 0; l < weights_.size(); ++l) {
            h = affine(l, h);
            if (l + 1 < weights_.size()) activate(h);
        }
        if (output_dim() == 2) return softmax1(h);
        return h[0];
    }

    /// Analytic reverse-mode gradient of forward() with respect to the input.
    Vector input_gradient(const Vector& x) const {
        check_input(x);
        std::vector<Vector> pre; // pre-activation per layer
        Vector h = x;
        for (std::size_t l = 0; l < weights_.size(); ++l) {
            h = affine(l, h);
            pre.push_back(h);
            if (l + 1 < weights_.size()) activate(h);
        }

        Vector delta;
        if (output_dim() == 2) {
            // d softmax[1] / d logits = p1·p0·(-1, +1)
            const double p1 = softmax1(h);
            const double p0 = 1.0 - p1;
            delta = {-p1 * p0, p1 * p0};
        } else {
            delta = {1.0};
        }

        for (std::size_t li = weights_.size(); li-- > 0;) {
            Vector prev(dims_[li], 0.0);
            const Matrix& w = weights_[li];
            for (std::size_t r = 0; r < w.rows; ++r)
                for (std::size_t c = 0; c < w.cols; ++c) prev[c] += w(r, c) * delta[r];
            if (li > 0)
                for (std::size_t c = 0; c < prev.size(); ++c)
                    prev[c] *= activation_derivative(pre[li - 1][c]);
            delta = std::move(prev);
        }
        return delta;
    }

    /// Central finite differences, the test oracle for input_gradient.
    template <typename Fn>
    static Vector finite_diff_gradient(Fn&& f, const Vector& x, double h) {
        if (!(h > 0.0)) throw ConfigError("finite_diff_gradient: step must be > 0");
        Vector grad(x.size());
        Vector probe = x;
        for (std::size_t i = 0; i < x.size(); ++i) {
            probe[i] = x[i] + h;
            const double up = f(probe);
            probe[i] = x[i] - h;
            const double down = f(probe);
            probe[i] = x[i];
            grad[i] = (up - down) / (2.0 * h);
        }
        return grad;
    }

    Vector finite_diff_gradient(const Vector& x, double h) const {
        return finite_diff_gradient([this](const Vector& p) { return forward(p); }, x, h);
    }

    /// Max gradient L2 norm over the probe rows.
    LipschitzEstimate estimate_grad_max(const Matrix& probes) const {
        if (probes.rows == 0) throw ConfigError("estimate_grad_max: empty probe set");
        LipschitzEstimate est;
        for (std::size_t r = 0; r < probes.rows; ++r)
            est.grad_max = std::max(est.grad_max, norm(input_gradient(probes.row(r)), NormKind::L2));
        return est;
    }

    nlohmann::json to_json() const {
        nlohmann::json doc;
        doc["dims"] = dims_;
        doc["activation"] = activation_ == Activation::Elu ? "elu" : "square";
        doc["alpha"] = 1.0;
        auto& w = doc["weights"] = nlohmann::json::array();
        auto& b = doc["biases"] = nlohmann::json::array();
        for (std::size_t l = 0; l < weights_.size(); ++l) {
            w.push_back(weights_[l].data);
            b.push_back(biases_[l]);
        }
        return doc;
    }

    static Mlp from_json(const nlohmann::json& doc) {
        const auto dims = doc.at("dims").get<std::vector<std::size_t>>();
        const std::string act_name = doc.at("activation").get<std::string>();
        Activation act;
        if (act_name == "elu")
            act = Activation::Elu;
        else if (act_name == "square")
            act = Activation::Square;
        else
            throw ConfigError("Mlp::from_json: unknown activation '" + act_name + "'");
        std::vector<Matrix> weights;
        std::vector<Vector> biases;
        for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
            Matrix w(dims[l + 1], dims[l]);
            w.data = doc.at("weights").at(l).get<std::vector<double>>();
            if (w.data.size() != w.rows * w.cols)
                throw ConfigError("Mlp::from_json: weight matrix size mismatch at layer " +
                                  std::to_string(l));
            weights.push_back(std::move(w));
            auto bias = doc.at("biases").at(l).get<Vector>();
            if (bias.size() != dims[l + 1])
                throw ConfigError("Mlp::from_json: bias size mismatch at layer " + std::to_string(l));
            biases.push_back(std::move(bias));
        }
        return from_parameters(dims, std::move(weights), std::move(biases), act);
    }

    void save(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw IoError("Mlp::save: cannot open " + path);
        out << to_json().dump(2) << "\n";
    }

    static Mlp load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw IoError("Mlp::load: cannot open " + path);
        nlohmann::json doc;
        in >> doc;
        return from_json(doc);
    }

private:
    friend TrainMetrics train(Mlp& model, const Dataset& data, const TrainConfig& cfg);

    void check_input(const Vector& x) const {
        if (x.size() != input_dim()) throw DimensionMismatch("Mlp: input length != model dim");
    }

    Vector affine(std::size_t layer, const Vector& h) const {
        const Matrix& w = weights_[layer];
        Vector out = biases_[layer];
        for (std::size_t r = 0; r < w.rows; ++r) {
            double acc = 0.0;
            for (std::size_t c = 0; c < w.cols; ++c) acc += w(r, c) * h[c];
            out[r] += acc;
        }
        return out;
    }

    void activate(Vector& h) const {
        if (activation_ == Activation::Elu) {
            for (double& v : h)
                if (v < 0.0) v = std::expm1(v); // ELU with alpha = 1
        } else {
            for (double& v : h) v = v * v;
        }
    }

    double activation_derivative(double pre) const {
        if (activation_ == Activation::Elu) return pre < 0.0 ? std::exp(pre) : 1.0;
        return 2.0 * pre;
    }

    static double softmax1(const Vector& logits) {
        // numerically stable two-class softmax
        const double m = std::max(logits[0], logits[1]);
        const double e0 = std::exp(logits[0] - m);
        const double e1 = std::exp(logits[1] - m);
        return e1 / (e0 + e1);
    }

    std::vector<std::size_t> dims_;
    std::vector<Matrix> weights_;
    std::vector<Vector> biases_;
    Activation activation_ = Activation::Elu;
};

namespace detail {

struct AdamState {
    std::vector<double> m, v;
    std::size_t step = 0;

    explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}

    void apply(std::vector<double*>& params, const std::vector<double>& grad,
               const TrainConfig& cfg) {
        ++step;
        const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(step));
        const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(step));
        for (std::size_t i = 0; i < grad.size(); ++i) {
            m[i] = cfg.adam_beta1 * m[i] + (1.0 - cfg.adam_beta1) * grad[i];
            v[i] = cfg.adam_beta2 * v[i] + (1.0 - cfg.adam_beta2) * grad[i] * grad[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            *params[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_eps);
        }
    }
};

} // namespace detail

/// Adam / cross-entropy training on the train split; returns accuracies and
/// the per-epoch loss curve. Deterministic for a fixed config seed.
inline TrainMetrics train(Mlp& model, const Dataset& data, const TrainConfig& cfg) {
    cfg.validate();
    if (data.train_indices.empty() || data.test_indices.empty())
        throw EmptySplit("train: dataset has no assigned split");
    if (model.output_dim() != 2)
        throw ConfigError("train: only two-output classifiers are trainable");

    std::vector<double*> params;
    for (std::size_t l = 0; l < model.weights_.size(); ++l) {
        for (double& v : model.weights_[l].data) params.push_back(&v);
        for (double& v : model.biases_[l]) params.push_back(&v);
    }
    detail::AdamState adam(params.size());
    std::vector<double> grad(params.size());

    const std::size_t n_layers = model.weights_.size();
    Xoshiro256pp shuffle_rng(derive_seed(cfg.seed, 0x5u));
    std::vector<std::size_t> order = data.train_indices;
    TrainMetrics metrics;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = order.size(); i-- > 1;)
            std::swap(order[i], order[shuffle_rng() % (i + 1)]);

        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(start + cfg.batch_size, order.size());
            std::fill(grad.begin(), grad.end(), 0.0);

            for (std::size_t k = start; k < stop; ++k) {
                const std::size_t idx = order[k];
                const Vector x = data.features.row(idx);
                const int label = data.labels[idx] > 0.5 ? 1 : 0;

                // forward, keeping pre- and post-activation values
                std::vector<Vector> post{x};
                std::vector<Vector> pre;
                Vector h = x;
                for (std::size_t l = 0; l < n_layers; ++l) {
                    h = model.affine(l, h);
                    pre.push_back(h);
                    if (l + 1 < n_layers) {
                        model.activate(h);
                        post.push_back(h);
                    }
                }
                const double p1 = Mlp::softmax1(h);
                const double p = label == 1 ? p1 : 1.0 - p1;
                epoch_loss += -std::log(std::max(p, 1e-300));

                // backward: dL/dlogits = softmax - onehot
                const double p0 = 1.0 - p1;
                Vector delta = {p0 - (label == 0 ? 1.0 : 0.0), p1 - (label == 1 ? 1.0 : 0.0)};

                std::size_t offset = grad.size();
                for (std::size_t li = n_layers; li-- > 0;) {
                    const Matrix& w = model.weights_[li];
                    offset -= w.rows * w.cols + w.rows;
                    double* gw = grad.data() + offset;
                    double* gb = gw + w.rows * w.cols;
                    const Vector& input = post[li];
                    for (std::size_t r = 0; r < w.rows; ++r) {
                        gb[r] += delta[r];
                        for (std::size_t c = 0; c < w.cols; ++c)
                            gw[r * w.cols + c] += delta[r] * input[c];
                    }
                    if (li > 0) {
                        Vector prev(w.cols, 0.0);
                        for (std::size_t r = 0; r < w.rows; ++r)
                            for (std::size_t c = 0; c < w.cols; ++c) prev[c] += w(r, c) * delta[r];
                        for (std::size_t c = 0; c < prev.size(); ++c)
                            prev[c] *= model.activation_derivative(pre[li - 1][c]);
                        delta = std::move(prev);
                    }
                }
            }

            const double inv_batch = 1.0 / static_cast<double>(stop - start);
            for (double& g : grad) g *= inv_batch;
            adam.apply(params, grad, cfg);
        }
        metrics.loss_curve.push_back(epoch_loss / static_cast<double>(order.size()));
    }

    auto accuracy = [&](const std::vector<std::size_t>& indices) {
        std::size_t hits = 0;
        for (std::size_t idx : indices) {
            const double p1 = model.forward(data.features.row(idx));
            const int predicted = p1 > 0.5 ? 1 : 0;
            if (predicted == (data.labels[idx] > 0.5 ? 1 : 0)) ++hits;
        }
        return static_cast<double>(hits) / static_cast<double>(indices.size());
    };
    metrics.train_accuracy = accuracy(data.train_indices);
    metrics.test_accuracy = accuracy(data.test_indices);
    return metrics;
}

} // namespace climex
