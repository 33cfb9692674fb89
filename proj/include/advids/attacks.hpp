#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "advids/dataset.hpp"
#include "advids/error.hpp"
#include "advids/mlp.hpp"
#include "advids/rng.hpp"
#include "advids/svm.hpp"

namespace advids {

struct LabelFlipSpec {
    enum class Mode { random, targeted };

    Mode mode = Mode::random;
    double fraction = 0.0;  // share of rows whose label is flipped
    std::uint64_t seed = 42;
};

// 0.05 .. 0.50 in 5% steps, preceded by the clean baseline point.
inline std::vector<double> default_flip_grid() {
    std::vector<double> grid;
    for (int i = 0; i <= 10; ++i) grid.push_back(static_cast<double>(i) / 20.0);
    return grid;
}

struct FgsmSpec {
    double epsilon = 0.0;
    bool targeted = false;
    std::optional<int> target_class;              // targeted mode; class to imitate
    std::optional<std::array<double, 2>> clip_range;
};

// 0.0 .. 1.0 in 0.1 steps.
inline std::vector<double> default_fgsm_grid() {
    std::vector<double> grid;
    for (int i = 0; i <= 10; ++i) grid.push_back(static_cast<double>(i) / 10.0);
    return grid;
}

// Which rows were flipped and what they said before, so a poisoned dataset is
// auditable and revertible.
struct FlipRecord {
    std::vector<std::size_t> flipped_indices;  // sorted ascending
    std::vector<int> original_labels;

    bool operator==(const FlipRecord&) const = default;
};

namespace detail {

inline std::size_t flip_budget(double fraction, std::size_t rows) {
    if (fraction < 0.0 || fraction > 1.0) {
        throw ConfigError("flip fraction must lie in [0, 1], got " + format_double(fraction));
    }
    return static_cast<std::size_t>(fraction * static_cast<double>(rows));
}

inline std::pair<Dataset, FlipRecord> apply_flip(const Dataset& ds,
                                                 std::vector<std::size_t> indices) {
    std::sort(indices.begin(), indices.end());
    Dataset out = ds;
    FlipRecord rec;
    rec.flipped_indices = std::move(indices);
    rec.original_labels.reserve(rec.flipped_indices.size());
    for (const auto r : rec.flipped_indices) {
        rec.original_labels.push_back(ds.binary_labels[r]);
        out.binary_labels[r] ^= 1;
    }
    return {std::move(out), std::move(rec)};
}

}  // namespace detail

// Flips floor(fraction * n) uniformly sampled binary labels; features and the
// input dataset are untouched.
inline std::pair<Dataset, FlipRecord> random_flip(const Dataset& ds, const LabelFlipSpec& spec) {
    if (spec.mode != LabelFlipSpec::Mode::random) {
        throw ConfigError("random_flip needs a spec with mode=random");
    }
    const std::size_t k = detail::flip_budget(spec.fraction, ds.row_count());
    std::mt19937_64 gen(spec.seed);
    return detail::apply_flip(ds, rng::sample_indices(ds.row_count(), k, gen));
}

// Flips the floor(fraction * n) rows closest to the model's hyperplane. The
// model is expected to be the one trained on the unpoisoned data.
inline std::pair<Dataset, FlipRecord> targeted_flip(const Dataset& ds, const LinearSvmModel& m,
                                                    const LabelFlipSpec& spec) {
    if (spec.mode != LabelFlipSpec::Mode::targeted) {
        throw ConfigError("targeted_flip needs a spec with mode=targeted");
    }
    const std::size_t k = detail::flip_budget(spec.fraction, ds.row_count());
    const MarginRanking ranking = margin_ranking(m, ds);
    std::vector<std::size_t> chosen(ranking.indices.begin(), ranking.indices.begin() + static_cast<std::ptrdiff_t>(k));
    return detail::apply_flip(ds, std::move(chosen));
}

inline Dataset flip_revert(const Dataset& ds, const FlipRecord& rec) {
    if (rec.flipped_indices.size() != rec.original_labels.size()) {
        throw LineageError("flip record is internally inconsistent");
    }
    Dataset out = ds;
    for (std::size_t i = 0; i < rec.flipped_indices.size(); ++i) {
        const std::size_t r = rec.flipped_indices[i];
        if (r >= ds.row_count()) {
            throw LineageError("flip record row " + std::to_string(r) +
                               " is outside the dataset");
        }
        out.binary_labels[r] = rec.original_labels[i];
    }
    return out;
}

// One-step sign perturbation: x + eps*sign(grad) away from the reference
// labels, or x - eps*sign(grad) toward the target labels. sign(0) = 0, so
// coordinates without gradient signal stay put.
inline Matrix fgsm(const MlpModel& m, const Matrix& x, const Matrix& y_reference,
                   const FgsmSpec& spec) {
    if (spec.epsilon < 0.0 || spec.epsilon > 1.0) {
        throw ConfigError("epsilon must lie in [0, 1], got " + format_double(spec.epsilon));
    }
    if (spec.clip_range && (*spec.clip_range)[0] > (*spec.clip_range)[1]) {
        throw ConfigError("clip range is inverted");
    }
    if (spec.epsilon == 0.0) return x;

    const std::size_t out = m.architecture.output_size();
    Matrix reference = y_reference;
    if (spec.targeted) {
        if (spec.target_class) {
            const int t = *spec.target_class;
            if (t < 0 || static_cast<std::size_t>(t) >= out) {
                throw ConfigError("target_class " + std::to_string(t) +
                                  " is out of range for " + std::to_string(out) + " classes");
            }
            reference = Matrix(x.rows(), out);
            for (std::size_t r = 0; r < x.rows(); ++r) {
                reference(r, static_cast<std::size_t>(t)) = 1.0;
            }
        } else if (y_reference.rows() != x.rows() || y_reference.cols() != out) {
            throw ConfigError(
                "targeted FGSM needs a target_class or per-row target labels");
        }
    }

    const Matrix grad = input_gradient(m, x, reference);
    const double step = spec.targeted ? -spec.epsilon : spec.epsilon;
    Matrix adv = x;
    for (std::size_t r = 0; r < x.rows(); ++r) {
        for (std::size_t c = 0; c < x.cols(); ++c) {
            const double g = grad(r, c);
            const double sign = static_cast<double>(g > 0.0) - static_cast<double>(g < 0.0);
            adv(r, c) = x(r, c) + step * sign;
        }
    }
    if (spec.clip_range) {
        const auto [lo, hi] = *spec.clip_range;
        for (double& v : adv.data()) v = std::min(std::max(v, lo), hi);
    }
    return adv;
}

inline nlohmann::json flip_record_to_json(const FlipRecord& rec) {
    return nlohmann::json{{"flipped_indices", rec.flipped_indices},
                          {"original_labels", rec.original_labels}};
}

inline FlipRecord flip_record_from_json(const nlohmann::json& j) {
    FlipRecord rec;
    rec.flipped_indices = j.at("flipped_indices").get<std::vector<std::size_t>>();
    rec.original_labels = j.at("original_labels").get<std::vector<int>>();
    return rec;
}

}  // namespace advids
