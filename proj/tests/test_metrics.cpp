#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "advids/metrics.hpp"
#include "advids/rng.hpp"

using namespace advids;

namespace {

ConfusionMatrix binary_cm(long long tn, long long fp, long long fn, long long tp) {
    ConfusionMatrix cm;
    cm.counts = {{tn, fp}, {fn, tp}};
    cm.class_names = {"class0", "class1"};
    return cm;
}

}  // namespace

TEST_CASE("confusion counts by true and predicted class") {
    const std::vector<int> truth{1, 1, 0};
    const std::vector<int> pred{1, 0, 0};
    const auto cm = confusion(truth, pred, 2);
    CHECK(cm.tp() == 1);
    CHECK(cm.fn() == 1);
    CHECK(cm.tn() == 1);
    CHECK(cm.fp() == 0);

    const auto diag = confusion(truth, truth, 2);
    CHECK(diag.counts[0][0] == 1);
    CHECK(diag.counts[1][1] == 2);
    CHECK(diag.counts[0][1] == 0);
    CHECK(diag.counts[1][0] == 0);

    const std::vector<int> short_pred{1};
    CHECK_THROWS_AS(confusion(truth, short_pred, 2), ShapeError);
}

TEST_CASE("confusion matches a brute-force counting loop") {
    std::mt19937_64 gen(91);
    const std::size_t n = 10000;
    const std::size_t k = 4;
    std::vector<int> truth(n), pred(n);
    for (std::size_t i = 0; i < n; ++i) {
        truth[i] = static_cast<int>(rng::below(gen, k));
        pred[i] = static_cast<int>(rng::below(gen, k));
    }
    const auto cm = confusion(truth, pred, k);
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = 0; b < k; ++b) {
            long long count = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (truth[i] == static_cast<int>(a) && pred[i] == static_cast<int>(b)) ++count;
            }
            CHECK(cm.counts[a][b] == count);
        }
    }
}

TEST_CASE("compute_metrics evaluates the binary formulas") {
    const auto perfect = compute_metrics(binary_cm(1, 0, 0, 1));
    CHECK(perfect.accuracy == 1.0);
    CHECK(perfect.f1 == 1.0);

    // TP=50, FP=50, FN=0.
    const auto skewed = compute_metrics(binary_cm(0, 50, 0, 50));
    CHECK(skewed.precision == 0.5);
    CHECK(skewed.recall == 1.0);
    CHECK(skewed.f1 == Catch::Approx(2.0 / 3.0).margin(1e-15));

    CHECK_THROWS_AS(compute_metrics(binary_cm(0, 0, 0, 0)), EmptyInputError);

    ConfusionMatrix three;
    three.counts = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    three.class_names = {"a", "b", "c"};
    CHECK_THROWS_AS(compute_metrics(three, Averaging::binary), ConfigError);
}

TEST_CASE("published precision/recall pairs reproduce their F1") {
    unsigned mask = 0;
    CHECK(detail::f1_of(0.621, 0.913, mask) == Catch::Approx(0.737).margin(0.01));
    CHECK(detail::f1_of(0.610, 0.613, mask) == Catch::Approx(0.612).margin(0.01));
    CHECK(mask == 0);
}

TEST_CASE("rate identities hold for random confusion matrices") {
    std::mt19937_64 gen(5);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto tn = static_cast<long long>(rng::below(gen, 1000000));
        const auto fp = static_cast<long long>(rng::below(gen, 1000000));
        const auto fn = static_cast<long long>(rng::below(gen, 1000000));
        const auto tp = static_cast<long long>(rng::below(gen, 1000000));
        if (tn + fp + fn + tp == 0) continue;
        const auto rep = compute_metrics(binary_cm(tn, fp, fn, tp));

        const auto total = static_cast<double>(tn + fp + fn + tp);
        CHECK(rep.accuracy == static_cast<double>(tp + tn) / total);
        CHECK(rep.recall == rep.tpr);
        if (tp + fn > 0) {
            CHECK(rep.tpr == static_cast<double>(tp) / static_cast<double>(tp + fn));
            CHECK(rep.fnr + rep.tpr == Catch::Approx(1.0).margin(1e-12));
        }
        if (tn + fp > 0) {
            CHECK(rep.fpr + rep.tnr == Catch::Approx(1.0).margin(1e-12));
        }
        if (rep.precision + rep.recall > 0) {
            CHECK(rep.f1 == Catch::Approx(2.0 * rep.precision * rep.recall /
                                          (rep.precision + rep.recall))
                                .margin(1e-15));
        }

        // Scale invariance: multiplying every count leaves the report as is.
        const auto scaled = compute_metrics(binary_cm(3 * tn, 3 * fp, 3 * fn, 3 * tp));
        CHECK(scaled.accuracy == rep.accuracy);
        CHECK(scaled.precision == rep.precision);
        CHECK(scaled.recall == rep.recall);
        CHECK(scaled.f1 == rep.f1);
    }
}

TEST_CASE("macro averaging over a diagonal matrix gives recall 1") {
    ConfusionMatrix cm;
    cm.counts = {{3, 0, 0, 0, 0},
                 {0, 9, 0, 0, 0},
                 {0, 0, 4, 0, 0},
                 {0, 0, 0, 1, 0},
                 {0, 0, 0, 0, 2}};
    cm.class_names = {"a", "b", "c", "d", "e"};
    const auto rep = compute_metrics(cm);
    CHECK(rep.averaging == Averaging::macro);
    CHECK(rep.recall == 1.0);
    CHECK(rep.accuracy == 1.0);

    const auto micro = compute_metrics(cm, Averaging::micro);
    CHECK(micro.precision == 1.0);
}

TEST_CASE("zero-denominator metrics are zero and flagged") {
    // No true positives anywhere: the positive row is empty.
    const auto rep = compute_metrics(binary_cm(5, 3, 0, 0));
    CHECK(rep.tpr == 0.0);
    CHECK(rep.recall == 0.0);
    CHECK((rep.zero_denominator & metric_flag::tpr) != 0);
    CHECK((rep.zero_denominator & metric_flag::recall) != 0);
    CHECK((rep.zero_denominator & metric_flag::fnr) != 0);
    CHECK(std::isfinite(rep.f1));
}

TEST_CASE("roc_auc separates the trivial cases") {
    const std::vector<double> scores{0.9, 0.8, 0.2, 0.1};
    const std::vector<int> labels{1, 1, 0, 0};
    const auto curve = roc_auc(scores, labels);
    CHECK(curve.auc == 1.0);
    CHECK(curve.points.front() == std::array<double, 2>{0.0, 0.0});
    CHECK(curve.points.back() == std::array<double, 2>{1.0, 1.0});

    const std::vector<int> single{1, 1, 1, 1};
    CHECK_THROWS_AS(roc_auc(scores, single), CurveError);
}

TEST_CASE("roc_auc of label-independent scores is about one half") {
    std::mt19937_64 gen(23);
    const std::size_t n = 10000;
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        scores[i] = rng::uniform01(gen);
        labels[i] = static_cast<int>(rng::below(gen, 2));
    }
    const auto curve = roc_auc(scores, labels);
    CHECK(curve.auc == Catch::Approx(0.5).margin(0.02));
    for (std::size_t p = 1; p < curve.points.size(); ++p) {
        CHECK(curve.points[p][0] >= curve.points[p - 1][0]);
    }
}

TEST_CASE("roc_auc equals the pairwise ranking probability") {
    std::mt19937_64 gen(37);
    for (int trial = 0; trial < 5; ++trial) {
        const std::size_t n = 500;
        std::vector<double> scores(n);
        std::vector<int> labels(n);
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = static_cast<double>(rng::below(gen, 40));  // coarse grid forces ties
            labels[i] = static_cast<int>(rng::below(gen, 2));
        }
        labels[0] = 1;
        labels[1] = 0;
        const auto curve = roc_auc(scores, labels);

        double wins = 0.0;
        long long pairs = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (labels[i] != 1) continue;
            for (std::size_t j = 0; j < n; ++j) {
                if (labels[j] != 0) continue;
                ++pairs;
                if (scores[i] > scores[j]) {
                    wins += 1.0;
                } else if (scores[i] == scores[j]) {
                    wins += 0.5;
                }
            }
        }
        CHECK(curve.auc == Catch::Approx(wins / static_cast<double>(pairs)).margin(1e-9));
    }
}

TEST_CASE("roc_auc is invariant under strictly monotone score transforms") {
    std::mt19937_64 gen(53);
    const std::size_t n = 300;
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        scores[i] = rng::uniform(gen, -3.0, 3.0);
        labels[i] = static_cast<int>(rng::below(gen, 2));
    }
    labels[0] = 1;
    labels[1] = 0;
    std::vector<double> transformed(n);
    for (std::size_t i = 0; i < n; ++i) transformed[i] = std::exp(scores[i]) + 1.0;
    CHECK(roc_auc(scores, labels).auc == roc_auc(transformed, labels).auc);
}

TEST_CASE("report JSON carries exactly the agreed fields") {
    MetricsReport rep;
    rep.accuracy = 0.5;
    rep.tpr = 0.25;
    rep.loss = 1.25;
    rep.averaging = Averaging::macro;
    const auto j = report_to_json(rep);
    CHECK(j.size() == 10);
    for (const char* key : {"accuracy", "tpr", "tnr", "fpr", "fnr", "precision", "recall", "f1",
                            "loss", "averaging"}) {
        CHECK(j.contains(key));
    }
    CHECK(report_from_json(j) == rep);

    rep.loss.reset();
    const auto no_loss = report_to_json(rep);
    CHECK(no_loss.at("loss").is_null());
    CHECK(report_from_json(no_loss) == rep);
}

TEST_CASE("report CSV rows round-trip") {
    MetricsReport rep;
    rep.accuracy = 1.0 / 3.0;
    rep.tpr = 0.123456789012345;
    rep.precision = 0.9999999999999;
    const std::string row = metrics_csv_row(rep);
    CHECK(metrics_csv_header() == "accuracy,tpr,tnr,fpr,fnr,precision,recall,f1,loss");
    CHECK(row.find(format_double(1.0 / 3.0)) == 0);
}
