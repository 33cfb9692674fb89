#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "advids/error.hpp"
#include "advids/util.hpp"

namespace advids {

// Rows are true classes, columns predicted classes. For the binary case
// class 1 is the attack class.
struct ConfusionMatrix {
    std::vector<std::vector<long long>> counts;
    std::vector<std::string> class_names;

    std::size_t class_count() const { return counts.size(); }

    long long total() const {
        long long t = 0;
        for (const auto& row : counts) t = std::accumulate(row.begin(), row.end(), t);
        return t;
    }

    long long tp() const { return counts[1][1]; }
    long long tn() const { return counts[0][0]; }
    long long fp() const { return counts[0][1]; }
    long long fn() const { return counts[1][0]; }

    bool operator==(const ConfusionMatrix&) const = default;
};

enum class Averaging { binary, macro, micro };

inline std::string to_string(Averaging a) {
    switch (a) {
        case Averaging::binary: return "binary";
        case Averaging::macro: return "macro";
        case Averaging::micro: return "micro";
    }
    return "binary";
}

inline Averaging averaging_from_string(std::string_view s) {
    if (s == "binary") return Averaging::binary;
    if (s == "macro") return Averaging::macro;
    if (s == "micro") return Averaging::micro;
    throw ConfigError("unknown averaging mode '" + std::string(s) + "'");
}

// Bits marking metrics whose denominator was zero; such metrics are reported
// as 0 rather than NaN.
namespace metric_flag {
inline constexpr unsigned tpr = 1u << 0;
inline constexpr unsigned tnr = 1u << 1;
inline constexpr unsigned fpr = 1u << 2;
inline constexpr unsigned fnr = 1u << 3;
inline constexpr unsigned precision = 1u << 4;
inline constexpr unsigned recall = 1u << 5;
inline constexpr unsigned f1 = 1u << 6;
}  // namespace metric_flag

struct MetricsReport {
    double accuracy = 0.0;
    double tpr = 0.0;
    double tnr = 0.0;
    double fpr = 0.0;
    double fnr = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    Averaging averaging = Averaging::binary;
    std::optional<double> loss;
    unsigned zero_denominator = 0;  // metric_flag bits

    bool operator==(const MetricsReport&) const = default;
};

inline ConfusionMatrix confusion(std::span<const int> true_labels,
                                 std::span<const int> predicted, std::size_t class_count) {
    if (true_labels.size() != predicted.size()) {
        throw ShapeError("label vectors differ in length: " + std::to_string(true_labels.size()) +
                         " vs " + std::to_string(predicted.size()));
    }
    ConfusionMatrix cm;
    cm.counts.assign(class_count, std::vector<long long>(class_count, 0));
    for (std::size_t i = 0; i < true_labels.size(); ++i) {
        const int t = true_labels[i];
        const int p = predicted[i];
        if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= class_count ||
            static_cast<std::size_t>(p) >= class_count) {
            throw ValueError("label out of range at row " + std::to_string(i));
        }
        ++cm.counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
    }
    cm.class_names.resize(class_count);
    for (std::size_t c = 0; c < class_count; ++c) cm.class_names[c] = "class" + std::to_string(c);
    return cm;
}

namespace detail {

inline double safe_ratio(long long num, long long den, unsigned flag, unsigned& mask) {
    if (den == 0) {
        mask |= flag;
        return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
}

inline double f1_of(double precision, double recall, unsigned& mask) {
    const double denom = precision + recall;
    if (denom == 0.0) {
        mask |= metric_flag::f1;
        return 0.0;
    }
    return 2.0 * precision * recall / denom;
}

struct ClassTotals {
    long long tp = 0, fp = 0, fn = 0, tn = 0;
};

inline ClassTotals one_vs_rest(const ConfusionMatrix& cm, std::size_t k) {
    ClassTotals t;
    const std::size_t n = cm.class_count();
    long long row_sum = 0, col_sum = 0;
    for (std::size_t j = 0; j < n; ++j) row_sum += cm.counts[k][j];
    for (std::size_t i = 0; i < n; ++i) col_sum += cm.counts[i][k];
    t.tp = cm.counts[k][k];
    t.fn = row_sum - t.tp;
    t.fp = col_sum - t.tp;
    t.tn = cm.total() - t.tp - t.fn - t.fp;
    return t;
}

}  // namespace detail

inline MetricsReport compute_metrics(const ConfusionMatrix& cm,
                                     std::optional<Averaging> averaging = std::nullopt) {
    const long long total = cm.total();
    if (total == 0) throw EmptyInputError("confusion matrix has no observations");
    const std::size_t k = cm.class_count();
    const Averaging mode =
        averaging.value_or(k == 2 ? Averaging::binary : Averaging::macro);
    if (mode == Averaging::binary && k != 2) {
        throw ConfigError("binary averaging needs a 2x2 confusion matrix");
    }

    MetricsReport rep;
    rep.averaging = mode;
    long long diag = 0;
    for (std::size_t i = 0; i < k; ++i) diag += cm.counts[i][i];
    rep.accuracy = static_cast<double>(diag) / static_cast<double>(total);

    auto& mask = rep.zero_denominator;
    if (mode == Averaging::binary) {
        rep.tpr = detail::safe_ratio(cm.tp(), cm.tp() + cm.fn(), metric_flag::tpr, mask);
        rep.tnr = detail::safe_ratio(cm.tn(), cm.tn() + cm.fp(), metric_flag::tnr, mask);
        rep.fpr = detail::safe_ratio(cm.fp(), cm.fp() + cm.tn(), metric_flag::fpr, mask);
        rep.fnr = detail::safe_ratio(cm.fn(), cm.tp() + cm.fn(), metric_flag::fnr, mask);
        rep.precision =
            detail::safe_ratio(cm.tp(), cm.tp() + cm.fp(), metric_flag::precision, mask);
        rep.recall = detail::safe_ratio(cm.tp(), cm.tp() + cm.fn(), metric_flag::recall, mask);
        rep.f1 = detail::f1_of(rep.precision, rep.recall, mask);
    } else if (mode == Averaging::macro) {
        // One-vs-rest rates per class, averaged with equal class weight;
        // F1 is derived per class before averaging.
        double tpr = 0, tnr = 0, fpr = 0, fnr = 0, prec = 0, rec = 0, f1 = 0;
        for (std::size_t c = 0; c < k; ++c) {
            const auto t = detail::one_vs_rest(cm, c);
            const double p = detail::safe_ratio(t.tp, t.tp + t.fp, metric_flag::precision, mask);
            const double r = detail::safe_ratio(t.tp, t.tp + t.fn, metric_flag::recall, mask);
            tpr += detail::safe_ratio(t.tp, t.tp + t.fn, metric_flag::tpr, mask);
            tnr += detail::safe_ratio(t.tn, t.tn + t.fp, metric_flag::tnr, mask);
            fpr += detail::safe_ratio(t.fp, t.fp + t.tn, metric_flag::fpr, mask);
            fnr += detail::safe_ratio(t.fn, t.tp + t.fn, metric_flag::fnr, mask);
            f1 += detail::f1_of(p, r, mask);
            prec += p;
            rec += r;
        }
        const auto kd = static_cast<double>(k);
        rep.tpr = tpr / kd;
        rep.tnr = tnr / kd;
        rep.fpr = fpr / kd;
        rep.fnr = fnr / kd;
        rep.precision = prec / kd;
        rep.recall = rec / kd;
        rep.f1 = f1 / kd;
    } else {
        long long tp = 0, fp = 0, fn = 0, tn = 0;
        for (std::size_t c = 0; c < k; ++c) {
            const auto t = detail::one_vs_rest(cm, c);
            tp += t.tp;
            fp += t.fp;
            fn += t.fn;
            tn += t.tn;
        }
        rep.tpr = detail::safe_ratio(tp, tp + fn, metric_flag::tpr, mask);
        rep.tnr = detail::safe_ratio(tn, tn + fp, metric_flag::tnr, mask);
        rep.fpr = detail::safe_ratio(fp, fp + tn, metric_flag::fpr, mask);
        rep.fnr = detail::safe_ratio(fn, tp + fn, metric_flag::fnr, mask);
        rep.precision = detail::safe_ratio(tp, tp + fp, metric_flag::precision, mask);
        rep.recall = detail::safe_ratio(tp, tp + fn, metric_flag::recall, mask);
        rep.f1 = detail::f1_of(rep.precision, rep.recall, mask);
    }
    return rep;
}

struct RocCurve {
    std::vector<std::array<double, 2>> points;  // (fpr, tpr), fpr nondecreasing
    double auc = 0.0;
};

// Threshold sweep over the unique score values (plus the +inf sentinel that
// yields the (0,0) point); equal scores advance the curve in one step. AUC by
// the trapezoidal rule.
inline RocCurve roc_auc(std::span<const double> scores, std::span<const int> true_labels) {
    if (scores.size() != true_labels.size()) {
        throw ShapeError("scores and labels differ in length");
    }
    long long n_pos = 0, n_neg = 0;
    for (const int y : true_labels) (y == 1 ? n_pos : n_neg)++;
    if (n_pos == 0 || n_neg == 0) {
        throw CurveError("ROC curve needs at least one positive and one negative label");
    }

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocCurve curve;
    curve.points.push_back({0.0, 0.0});
    long long tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double threshold = scores[order[i]];
        while (i < order.size() && scores[order[i]] == threshold) {
            (true_labels[order[i]] == 1 ? tp : fp)++;
            ++i;
        }
        curve.points.push_back({static_cast<double>(fp) / static_cast<double>(n_neg),
                                static_cast<double>(tp) / static_cast<double>(n_pos)});
    }
    for (std::size_t p = 1; p < curve.points.size(); ++p) {
        const auto& a = curve.points[p - 1];
        const auto& b = curve.points[p];
        curve.auc += (b[0] - a[0]) * (a[1] + b[1]) / 2.0;
    }
    return curve;
}

inline nlohmann::json report_to_json(const MetricsReport& rep) {
    nlohmann::json j;
    j["accuracy"] = rep.accuracy;
    j["tpr"] = rep.tpr;
    j["tnr"] = rep.tnr;
    j["fpr"] = rep.fpr;
    j["fnr"] = rep.fnr;
    j["precision"] = rep.precision;
    j["recall"] = rep.recall;
    j["f1"] = rep.f1;
    if (rep.loss) {
        j["loss"] = *rep.loss;
    } else {
        j["loss"] = nullptr;
    }
    j["averaging"] = to_string(rep.averaging);
    return j;
}

inline MetricsReport report_from_json(const nlohmann::json& j) {
    MetricsReport rep;
    rep.accuracy = j.at("accuracy").get<double>();
    rep.tpr = j.at("tpr").get<double>();
    rep.tnr = j.at("tnr").get<double>();
    rep.fpr = j.at("fpr").get<double>();
    rep.fnr = j.at("fnr").get<double>();
    rep.precision = j.at("precision").get<double>();
    rep.recall = j.at("recall").get<double>();
    rep.f1 = j.at("f1").get<double>();
    if (!j.at("loss").is_null()) rep.loss = j.at("loss").get<double>();
    rep.averaging = averaging_from_string(j.at("averaging").get<std::string>());
    return rep;
}

inline nlohmann::json confusion_to_json(const ConfusionMatrix& cm) {
    return nlohmann::json{{"class_names", cm.class_names}, {"counts", cm.counts}};
}

inline ConfusionMatrix confusion_from_json(const nlohmann::json& j) {
    ConfusionMatrix cm;
    cm.class_names = j.at("class_names").get<std::vector<std::string>>();
    cm.counts = j.at("counts").get<std::vector<std::vector<long long>>>();
    return cm;
}

inline std::string metrics_csv_header() {
    return "accuracy,tpr,tnr,fpr,fnr,precision,recall,f1,loss";
}

inline std::string metrics_csv_row(const MetricsReport& rep) {
    std::string row = format_double(rep.accuracy) + ',' + format_double(rep.tpr) + ',' +
                      format_double(rep.tnr) + ',' + format_double(rep.fpr) + ',' +
                      format_double(rep.fnr) + ',' + format_double(rep.precision) + ',' +
                      format_double(rep.recall) + ',' + format_double(rep.f1) + ',';
    if (rep.loss) row += format_double(*rep.loss);
    return row;
}

}  // namespace advids
