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
#include "advids/metrics.hpp"
#include "advids/rng.hpp"

namespace advids {

struct SvmTrainConfig {
    double penalty_c = 1.0;
    std::size_t max_iterations = 100000;  // one iteration = one full epoch
    double tolerance = 1e-4;
    std::uint64_t seed = 42;
    std::optional<std::vector<double>> class_weights;  // {benign, attack}

    bool operator==(const SvmTrainConfig&) const = default;
};

struct LinearSvmModel {
    std::vector<double> weights;
    double bias = 0.0;
    std::size_t train_iterations_used = 0;
    bool converged = false;
    std::vector<double> objective_trace;  // best hinge objective after each epoch

    double decision(std::span<const double> x) const {
        return std::inner_product(weights.begin(), weights.end(), x.begin(), bias);
    }
};

// Row indices sorted ascending by geometric distance to the hyperplane,
// |w.x + b| / ||w||, ties broken by row index.
struct MarginRanking {
    std::vector<std::size_t> indices;
    std::vector<double> distances;
};

namespace detail {

struct SvmProblem {
    const Matrix& x;
    std::vector<double> sign;    // +1 attack, -1 benign
    std::vector<double> weight;  // per-row class weight
};

// L2-regularized hinge objective 0.5*||w||^2 + C * sum_i c_i * hinge_i.
inline double svm_objective(const SvmProblem& p, std::span<const double> w, double b,
                            double penalty_c) {
    double obj = 0.5 * std::inner_product(w.begin(), w.end(), w.begin(), 0.0);
    double hinge_sum = 0.0;
    for (std::size_t r = 0; r < p.x.rows(); ++r) {
        const double margin =
            p.sign[r] * std::inner_product(w.begin(), w.end(), p.x.row(r).begin(), b);
        if (margin < 1.0) hinge_sum += p.weight[r] * (1.0 - margin);
    }
    return obj + penalty_c * hinge_sum;
}

}  // namespace detail

// Deterministic full-batch subgradient descent on the primal hinge objective,
// step size 1/(lambda*(t+1)) with lambda = 1/(C*n) and t the epoch index.
// The returned model is the best iterate seen; the trace records the best
// objective value after each epoch and is therefore non-increasing.
inline LinearSvmModel train_svm(const Dataset& ds, const SvmTrainConfig& cfg) {
    const std::size_t n = ds.row_count();
    const std::size_t d = ds.feature_count();
    if (n == 0) throw EmptyInputError("cannot train on an empty dataset");
    if (cfg.penalty_c <= 0.0) throw ConfigError("penalty_C must be positive");
    if (cfg.max_iterations == 0) throw ConfigError("max_iterations must be positive");
    if (cfg.tolerance <= 0.0) throw ConfigError("tolerance must be positive");
    if (cfg.class_weights && cfg.class_weights->size() != 2) {
        throw ConfigError("SVM class_weights must list exactly two values");
    }
    if (cfg.class_weights) {
        for (const double w : *cfg.class_weights) {
            if (w <= 0.0) throw ConfigError("class weights must be positive");
        }
    }

    detail::SvmProblem prob{ds.features, {}, {}};
    prob.sign.resize(n);
    prob.weight.resize(n);
    bool has_pos = false, has_neg = false;
    for (std::size_t r = 0; r < n; ++r) {
        const int y = ds.binary_labels[r];
        prob.sign[r] = y == 1 ? 1.0 : -1.0;
        prob.weight[r] = cfg.class_weights ? (*cfg.class_weights)[static_cast<std::size_t>(y)] : 1.0;
        (y == 1 ? has_pos : has_neg) = true;
    }
    if (!has_pos || !has_neg) {
        throw DegenerateError("training data must contain both classes");
    }

    const double lambda = 1.0 / (cfg.penalty_c * static_cast<double>(n));
    const double scale = cfg.penalty_c * static_cast<double>(n);  // objective / scale is O(1)
    constexpr std::size_t kStallEpochs = 3;

    std::vector<double> w(d, 0.0);
    double b = 0.0;
    std::vector<double> best_w = w;
    double best_b = b;
    double best_obj = detail::svm_objective(prob, w, b, cfg.penalty_c);

    LinearSvmModel model;
    std::vector<double> grad_w(d);
    std::size_t stall = 0;
    std::size_t epoch = 0;
    for (; epoch < cfg.max_iterations; ++epoch) {
        std::fill(grad_w.begin(), grad_w.end(), 0.0);
        double grad_b = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            const auto x = ds.features.row(r);
            const double margin =
                prob.sign[r] * std::inner_product(w.begin(), w.end(), x.begin(), b);
            if (margin < 1.0) {
                const double coeff = prob.weight[r] * prob.sign[r];
                for (std::size_t f = 0; f < d; ++f) grad_w[f] += coeff * x[f];
                grad_b += coeff;
            }
        }
        const double eta = 1.0 / (lambda * static_cast<double>(epoch + 1));
        const double inv_n = 1.0 / static_cast<double>(n);
        for (std::size_t f = 0; f < d; ++f) {
            w[f] -= eta * (lambda * w[f] - inv_n * grad_w[f]);
        }
        b += eta * inv_n * grad_b;

        const double obj = detail::svm_objective(prob, w, b, cfg.penalty_c);
        const double gain = (best_obj - obj) / scale;
        if (obj < best_obj) {
            best_obj = obj;
            best_w = w;
            best_b = b;
        }
        model.objective_trace.push_back(best_obj);
        // Converged once the iterate sits at the best objective and stops
        // improving it; the excess test keeps transient overshoot epochs from
        // counting as a stall.
        const double excess = (obj - best_obj) / scale;
        if (gain < cfg.tolerance && excess < cfg.tolerance) {
            if (++stall >= kStallEpochs) {
                model.converged = true;
                ++epoch;
                break;
            }
        } else {
            stall = 0;
        }
    }

    model.weights = std::move(best_w);
    model.bias = best_b;
    model.train_iterations_used = epoch;
    return model;
}

inline std::vector<double> decision_values(const LinearSvmModel& m, const Dataset& ds) {
    if (m.weights.size() != ds.feature_count()) {
        throw ShapeError("model has " + std::to_string(m.weights.size()) +
                         " weights, dataset has " + std::to_string(ds.feature_count()) +
                         " features");
    }
    std::vector<double> values(ds.row_count());
    for (std::size_t r = 0; r < ds.row_count(); ++r) values[r] = m.decision(ds.features.row(r));
    return values;
}

inline std::vector<int> svm_predict(const LinearSvmModel& m, const Dataset& ds) {
    std::vector<int> labels(ds.row_count());
    const auto values = decision_values(m, ds);
    for (std::size_t r = 0; r < ds.row_count(); ++r) labels[r] = values[r] >= 0.0 ? 1 : 0;
    return labels;
}

inline MarginRanking margin_ranking(const LinearSvmModel& m, const Dataset& ds) {
    const double norm =
        std::sqrt(std::inner_product(m.weights.begin(), m.weights.end(), m.weights.begin(), 0.0));
    if (norm == 0.0) throw DegenerateError("margin ranking needs a nonzero weight vector");
    const auto values = decision_values(m, ds);

    MarginRanking ranking;
    ranking.indices.resize(ds.row_count());
    std::iota(ranking.indices.begin(), ranking.indices.end(), std::size_t{0});
    std::vector<double> distance(ds.row_count());
    for (std::size_t r = 0; r < ds.row_count(); ++r) distance[r] = std::abs(values[r]) / norm;
    std::sort(ranking.indices.begin(), ranking.indices.end(), [&](std::size_t a, std::size_t b) {
        if (distance[a] != distance[b]) return distance[a] < distance[b];
        return a < b;
    });
    ranking.distances.resize(ds.row_count());
    for (std::size_t i = 0; i < ranking.indices.size(); ++i) {
        ranking.distances[i] = distance[ranking.indices[i]];
    }
    return ranking;
}

inline std::vector<MetricsReport> cross_validate(const Dataset& ds, const SvmTrainConfig& cfg,
                                                 std::size_t folds = 4) {
    if (folds < 2) throw ConfigError("cross-validation needs at least 2 folds");
    if (ds.row_count() < folds) throw EmptyInputError("fewer rows than folds");

    // Stratified assignment: shuffle each class, deal members round-robin with
    // a fold cursor that carries across classes so fold sizes stay within 1.
    std::mt19937_64 gen(rng::derive_seed(cfg.seed, 0xf01d));
    std::vector<std::size_t> fold_of(ds.row_count());
    std::size_t cursor = 0;
    for (const int cls : {0, 1}) {
        std::vector<std::size_t> members;
        for (std::size_t r = 0; r < ds.row_count(); ++r) {
            if (ds.binary_labels[r] == cls) members.push_back(r);
        }
        if (members.empty()) {
            throw DegenerateError("cross-validation data must contain both classes");
        }
        rng::shuffle(members, gen);
        for (const auto r : members) fold_of[r] = cursor++ % folds;
    }
    for (std::size_t k = 0; k < folds; ++k) {
        bool pos = false, neg = false;
        for (std::size_t r = 0; r < ds.row_count(); ++r) {
            if (fold_of[r] == k) (ds.binary_labels[r] == 1 ? pos : neg) = true;
        }
        if (!pos || !neg) {
            throw FoldingError("fold " + std::to_string(k) +
                               " is missing a class; need more rows per class");
        }
    }

    std::vector<MetricsReport> reports;
    reports.reserve(folds);
    for (std::size_t k = 0; k < folds; ++k) {
        std::vector<std::size_t> train_idx, test_idx;
        for (std::size_t r = 0; r < ds.row_count(); ++r) {
            (fold_of[r] == k ? test_idx : train_idx).push_back(r);
        }
        SvmTrainConfig fold_cfg = cfg;
        fold_cfg.seed = rng::derive_seed(cfg.seed, k);
        const Dataset train = select_rows(ds, train_idx);
        const Dataset held_out = select_rows(ds, test_idx);
        const LinearSvmModel model = train_svm(train, fold_cfg);
        const auto predicted = svm_predict(model, held_out);
        reports.push_back(compute_metrics(confusion(held_out.binary_labels, predicted, 2)));
    }
    return reports;
}

inline nlohmann::json svm_to_json(const LinearSvmModel& m, const SvmTrainConfig& cfg) {
    nlohmann::json config{{"penalty_C", cfg.penalty_c},
                          {"max_iterations", cfg.max_iterations},
                          {"tolerance", cfg.tolerance},
                          {"seed", cfg.seed}};
    if (cfg.class_weights) {
        config["class_weights"] = *cfg.class_weights;
    } else {
        config["class_weights"] = nullptr;
    }
    return nlohmann::json{{"weights", m.weights},
                          {"bias", m.bias},
                          {"config", config},
                          {"converged", m.converged}};
}

inline std::pair<LinearSvmModel, SvmTrainConfig> svm_from_json(const nlohmann::json& j) {
    LinearSvmModel m;
    m.weights = j.at("weights").get<std::vector<double>>();
    m.bias = j.at("bias").get<double>();
    m.converged = j.at("converged").get<bool>();
    SvmTrainConfig cfg;
    const auto& config = j.at("config");
    cfg.penalty_c = config.at("penalty_C").get<double>();
    cfg.max_iterations = config.at("max_iterations").get<std::size_t>();
    cfg.tolerance = config.at("tolerance").get<double>();
    cfg.seed = config.at("seed").get<std::uint64_t>();
    if (!config.at("class_weights").is_null()) {
        cfg.class_weights = config.at("class_weights").get<std::vector<double>>();
    }
    return {std::move(m), cfg};
}

}  // namespace advids
