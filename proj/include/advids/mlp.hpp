#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "advids/dataset.hpp"
#include "advids/error.hpp"
#include "advids/matrix.hpp"
#include "advids/rng.hpp"

namespace advids {

// Feed-forward net with TanH hidden layers and an element-wise Sigmoid
// output head (both the 2-class and the 5-class head use Sigmoid).
struct MlpArchitecture {
    std::vector<std::size_t> layer_sizes;

    static MlpArchitecture paper(std::size_t output_classes) {
        return {{10, 20, 60, 80, 90, output_classes}};
    }

    std::size_t input_size() const { return layer_sizes.front(); }
    std::size_t output_size() const { return layer_sizes.back(); }

    bool operator==(const MlpArchitecture&) const = default;
};

struct MlpModel {
    MlpArchitecture architecture;
    std::vector<Matrix> weights;              // weights[l]: sizes[l+1] x sizes[l]
    std::vector<std::vector<double>> biases;  // biases[l]: sizes[l+1]

    std::size_t layer_count() const { return weights.size(); }

    bool operator==(const MlpModel&) const = default;
};

struct MlpTrainConfig {
    std::size_t epochs = 20;
    std::size_t batch_size = 512;
    double learning_rate = 0.01;
    std::uint64_t seed = 42;
    std::optional<std::vector<double>> class_weights;

    bool operator==(const MlpTrainConfig&) const = default;
};

struct MlpTrainResult {
    MlpModel model;
    std::vector<double> epoch_loss;
};

inline constexpr double kProbClampLo = 1e-7;
inline constexpr double kProbClampHi = 1.0 - 1e-7;

// Glorot-uniform weights, zero biases.
inline MlpModel init_mlp(const MlpArchitecture& arch, std::uint64_t seed) {
    if (arch.layer_sizes.size() < 2) throw ConfigError("architecture needs at least two layers");
    for (const std::size_t s : arch.layer_sizes) {
        if (s == 0) throw ConfigError("layer sizes must be positive");
    }
    std::mt19937_64 gen(seed);
    MlpModel m;
    m.architecture = arch;
    for (std::size_t l = 0; l + 1 < arch.layer_sizes.size(); ++l) {
        const std::size_t fan_in = arch.layer_sizes[l];
        const std::size_t fan_out = arch.layer_sizes[l + 1];
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        Matrix w(fan_out, fan_in);
        for (double& v : w.data()) v = rng::uniform(gen, -limit, limit);
        m.weights.push_back(std::move(w));
        m.biases.emplace_back(fan_out, 0.0);
    }
    return m;
}

namespace detail {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

inline double clamp_prob(double p) { return std::min(std::max(p, kProbClampLo), kProbClampHi); }

// Activations per layer: [0] is the input batch, [L] the sigmoid output.
inline std::vector<Matrix> forward_all(const MlpModel& m, const Matrix& x) {
    if (x.cols() != m.architecture.input_size()) {
        throw ShapeError("input has " + std::to_string(x.cols()) + " features, network expects " +
                         std::to_string(m.architecture.input_size()));
    }
    std::vector<Matrix> acts;
    acts.reserve(m.layer_count() + 1);
    acts.push_back(x);
    for (std::size_t l = 0; l < m.layer_count(); ++l) {
        const Matrix& w = m.weights[l];
        const auto& b = m.biases[l];
        const Matrix& in = acts.back();
        Matrix out(in.rows(), w.rows());
        const bool last = l + 1 == m.layer_count();
        for (std::size_t r = 0; r < in.rows(); ++r) {
            for (std::size_t j = 0; j < w.rows(); ++j) {
                double z = b[j];
                for (std::size_t i = 0; i < w.cols(); ++i) z += w(j, i) * in(r, i);
                out(r, j) = last ? sigmoid(z) : std::tanh(z);
            }
        }
        acts.push_back(std::move(out));
    }
    return acts;
}

struct Gradients {
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;
    Matrix inputs;
};

// Backpropagation of the mean summed binary cross-entropy. The gradient is
// consistent with the clamped loss value: components saturated past the clamp
// contribute zero.
inline Gradients backward(const MlpModel& m, const std::vector<Matrix>& acts, const Matrix& y,
                          std::span<const double> row_weights) {
    const Matrix& output = acts.back();
    if (y.rows() != output.rows() || y.cols() != output.cols()) {
        throw ShapeError("target matrix must match the network output shape");
    }
    const std::size_t n = output.rows();
    const double inv_n = 1.0 / static_cast<double>(n);

    Gradients g;
    g.weights.reserve(m.layer_count());
    g.biases.reserve(m.layer_count());
    for (std::size_t l = 0; l < m.layer_count(); ++l) {
        g.weights.emplace_back(m.weights[l].rows(), m.weights[l].cols());
        g.biases.emplace_back(m.biases[l].size(), 0.0);
    }

    Matrix delta(n, output.cols());
    for (std::size_t r = 0; r < n; ++r) {
        const double w = row_weights.empty() ? 1.0 : row_weights[r];
        for (std::size_t k = 0; k < output.cols(); ++k) {
            const double p = output(r, k);
            delta(r, k) = (p >= kProbClampLo && p <= kProbClampHi)
                              ? w * inv_n * (p - y(r, k))
                              : 0.0;
        }
    }

    for (std::size_t l = m.layer_count(); l-- > 0;) {
        const Matrix& in = acts[l];
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t j = 0; j < delta.cols(); ++j) {
                const double d = delta(r, j);
                if (d == 0.0) continue;
                g.biases[l][j] += d;
                for (std::size_t i = 0; i < in.cols(); ++i) {
                    g.weights[l](j, i) += d * in(r, i);
                }
            }
        }
        Matrix prev(n, m.weights[l].cols());
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t i = 0; i < m.weights[l].cols(); ++i) {
                double s = 0.0;
                for (std::size_t j = 0; j < delta.cols(); ++j) {
                    s += m.weights[l](j, i) * delta(r, j);
                }
                if (l > 0) {
                    const double a = in(r, i);
                    s *= 1.0 - a * a;  // tanh'
                }
                prev(r, i) = s;
            }
        }
        delta = std::move(prev);
    }
    g.inputs = std::move(delta);
    return g;
}

}  // namespace detail

inline Matrix forward(const MlpModel& m, const Matrix& x) {
    return detail::forward_all(m, x).back();
}

// Mean over rows of the summed element-wise binary cross-entropy, with
// probabilities clamped away from 0 and 1. Optional per-row weights.
inline double loss(const MlpModel& m, const Matrix& x, const Matrix& y_onehot,
                   std::span<const double> row_weights = {}) {
    const Matrix p = forward(m, x);
    if (y_onehot.rows() != p.rows() || y_onehot.cols() != p.cols()) {
        throw ShapeError("target matrix must match the network output shape");
    }
    double total = 0.0;
    for (std::size_t r = 0; r < p.rows(); ++r) {
        const double w = row_weights.empty() ? 1.0 : row_weights[r];
        double row_loss = 0.0;
        for (std::size_t k = 0; k < p.cols(); ++k) {
            const double prob = detail::clamp_prob(p(r, k));
            const double y = y_onehot(r, k);
            row_loss -= y * std::log(prob) + (1.0 - y) * std::log(1.0 - prob);
        }
        total += w * row_loss;
    }
    return total / static_cast<double>(p.rows());
}

// Gradient of the loss with respect to the inputs, same shape as x.
inline Matrix input_gradient(const MlpModel& m, const Matrix& x, const Matrix& y_onehot,
                             std::span<const double> row_weights = {}) {
    const auto acts = detail::forward_all(m, x);
    return detail::backward(m, acts, y_onehot, row_weights).inputs;
}

inline std::vector<int> predict(const MlpModel& m, const Matrix& x) {
    const Matrix p = forward(m, x);
    std::vector<int> labels(p.rows());
    for (std::size_t r = 0; r < p.rows(); ++r) {
        std::size_t best = 0;
        for (std::size_t k = 1; k < p.cols(); ++k) {
            if (p(r, k) > p(r, best)) best = k;  // ties keep the lowest class
        }
        labels[r] = static_cast<int>(best);
    }
    return labels;
}

// Mini-batch gradient descent with a seed-fixed batch order. The binary head
// trains on the attack label, wider heads on the category label.
inline MlpTrainResult train_mlp(const MlpModel& init, const Dataset& ds,
                                const MlpTrainConfig& cfg) {
    const std::size_t n = ds.row_count();
    const std::size_t out = init.architecture.output_size();
    if (cfg.epochs == 0) throw ConfigError("epochs must be positive");
    if (cfg.batch_size == 0 || cfg.batch_size > n) {
        throw ConfigError("batch_size must lie in [1, dataset rows]");
    }
    if (cfg.learning_rate < 0.0) throw ConfigError("learning_rate must be nonnegative");
    if (cfg.class_weights) {
        if (cfg.class_weights->size() != out) {
            throw ConfigError("class_weights must list one weight per output class");
        }
        for (const double w : *cfg.class_weights) {
            if (w <= 0.0) throw ConfigError("class weights must be positive");
        }
    }

    if (init.architecture.input_size() != ds.feature_count()) {
        throw ShapeError("dataset features do not match the input layer");
    }
    const auto& labels = out == 2 ? ds.binary_labels : ds.category_labels;
    const Matrix targets = one_hot(labels, out);
    std::vector<double> row_weights;
    if (cfg.class_weights) {
        row_weights.resize(n);
        for (std::size_t r = 0; r < n; ++r) {
            row_weights[r] = (*cfg.class_weights)[static_cast<std::size_t>(labels[r])];
        }
    }

    MlpTrainResult result;
    result.model = init;
    std::mt19937_64 gen(cfg.seed);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng::shuffle(order, gen);
        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t count = std::min(cfg.batch_size, n - start);
            const std::span<const std::size_t> batch(order.data() + start, count);
            const Matrix x = ds.features.select_rows(batch);
            const Matrix y = targets.select_rows(batch);
            std::vector<double> batch_weights;
            if (!row_weights.empty()) {
                batch_weights.reserve(count);
                for (const auto r : batch) batch_weights.push_back(row_weights[r]);
            }
            const auto acts = detail::forward_all(result.model, x);
            const auto grads = detail::backward(result.model, acts, y, batch_weights);
            for (std::size_t l = 0; l < result.model.layer_count(); ++l) {
                auto& w = result.model.weights[l].data();
                const auto& gw = grads.weights[l].data();
                for (std::size_t i = 0; i < w.size(); ++i) w[i] -= cfg.learning_rate * gw[i];
                auto& b = result.model.biases[l];
                for (std::size_t i = 0; i < b.size(); ++i) {
                    b[i] -= cfg.learning_rate * grads.biases[l][i];
                }
            }
        }
        const double epoch_loss = loss(result.model, ds.features, targets, row_weights);
        if (!std::isfinite(epoch_loss)) {
            throw DivergenceError("training diverged at epoch " + std::to_string(epoch + 1));
        }
        result.epoch_loss.push_back(epoch_loss);
    }
    return result;
}

inline nlohmann::json mlp_to_json(const MlpModel& m) {
    std::vector<std::string> activations(m.layer_count(), "tanh");
    if (!activations.empty()) activations.back() = "sigmoid";
    nlohmann::json weights = nlohmann::json::array();
    for (const auto& w : m.weights) {
        nlohmann::json layer = nlohmann::json::array();
        for (std::size_t r = 0; r < w.rows(); ++r) {
            layer.push_back(std::vector<double>(w.row(r).begin(), w.row(r).end()));
        }
        weights.push_back(std::move(layer));
    }
    return nlohmann::json{{"layer_sizes", m.architecture.layer_sizes},
                          {"activations", activations},
                          {"weights", weights},
                          {"biases", m.biases}};
}

inline MlpModel mlp_from_json(const nlohmann::json& j) {
    MlpModel m;
    m.architecture.layer_sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
    if (m.architecture.layer_sizes.size() < 2) {
        throw ParseError("model document needs at least two layer sizes");
    }
    for (const auto& layer : j.at("weights")) {
        const auto rows = layer.get<std::vector<std::vector<double>>>();
        if (rows.empty()) throw ParseError("empty weight matrix in model document");
        Matrix w(rows.size(), rows.front().size());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (rows[r].size() != w.cols()) throw ParseError("ragged weight matrix");
            std::copy(rows[r].begin(), rows[r].end(), w.row(r).begin());
        }
        m.weights.push_back(std::move(w));
    }
    m.biases = j.at("biases").get<std::vector<std::vector<double>>>();
    if (m.weights.size() + 1 != m.architecture.layer_sizes.size() ||
        m.biases.size() != m.weights.size()) {
        throw ParseError("layer_sizes, weights and biases disagree");
    }
    for (std::size_t l = 0; l < m.weights.size(); ++l) {
        if (m.weights[l].rows() != m.architecture.layer_sizes[l + 1] ||
            m.weights[l].cols() != m.architecture.layer_sizes[l] ||
            m.biases[l].size() != m.architecture.layer_sizes[l + 1]) {
            throw ParseError("weight shapes disagree with layer_sizes");
        }
    }
    return m;
}

}  // namespace advids
