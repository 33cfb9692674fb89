#pragma once

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "advids/attacks.hpp"
#include "advids/dataset.hpp"
#include "advids/error.hpp"
#include "advids/experiment.hpp"
#include "advids/metrics.hpp"
#include "advids/mlp.hpp"
#include "advids/svm.hpp"
#include "advids/util.hpp"

namespace advids {

struct SweepRow {
    double param = 0.0;
    MetricsReport report;
    ConfusionMatrix confusion;
};

struct SweepMetadata {
    std::string parameter;  // "fraction" or "epsilon"
    std::string config_hash;
    std::string started_at;
    std::string dataset_fingerprint;
    std::string notes;
};

struct SweepResult {
    SweepMetadata metadata;
    std::vector<SweepRow> rows;
};

// Train/test views of the experiment's dataset, scaled with the
// training-split extrema.
struct PreparedData {
    Dataset train;
    Dataset test;
    Dataset combined;  // train rows then test rows
    ScalingState scaling;
    std::string fingerprint;
};

namespace detail {

inline std::string iso8601_utc_now() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
    return buf;
}

inline std::string dataset_fingerprint(const Dataset& ds) {
    std::uint64_t h = fnv1a64({reinterpret_cast<const char*>(ds.features.data().data()),
                               ds.features.data().size() * sizeof(double)});
    h = fnv1a64({reinterpret_cast<const char*>(ds.binary_labels.data()),
                 ds.binary_labels.size() * sizeof(int)},
                h);
    h = fnv1a64({reinterpret_cast<const char*>(ds.category_labels.data()),
                 ds.category_labels.size() * sizeof(int)},
                h);
    return hex64(h);
}

inline Dataset concat(const Dataset& a, const Dataset& b) {
    Dataset out = a;
    out.features = Matrix(a.row_count() + b.row_count(), a.feature_count());
    std::copy(a.features.data().begin(), a.features.data().end(), out.features.data().begin());
    std::copy(b.features.data().begin(), b.features.data().end(),
              out.features.data().begin() + static_cast<std::ptrdiff_t>(a.features.data().size()));
    out.binary_labels.insert(out.binary_labels.end(), b.binary_labels.begin(),
                             b.binary_labels.end());
    out.category_labels.insert(out.category_labels.end(), b.category_labels.begin(),
                               b.category_labels.end());
    return out;
}

inline unsigned worker_count(std::size_t jobs) {
    if (jobs < 2) return 1;
    unsigned workers = std::thread::hardware_concurrency();
    if (const char* env = std::getenv("ADVIDS_THREADS")) {
        try {
            workers = static_cast<unsigned>(std::stoul(env));
        } catch (const std::exception&) {
            throw ConfigError("ADVIDS_THREADS must be a nonnegative integer");
        }
    }
    if (workers == 0) workers = 1;  // 0 = sequential
    return static_cast<unsigned>(std::min<std::size_t>(workers, jobs));
}

// Runs fn(0..count-1), possibly on worker threads; ADVIDS_THREADS caps the
// worker pool. Each job writes only its own slot, so results do not depend on
// the execution order.
template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn) {
    const unsigned workers = worker_count(count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    const auto body = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                const std::scoped_lock lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

[[noreturn]] inline void annotate_grid_error(const Error& e, const std::string& parameter,
                                             double value) {
    const std::string message =
        std::string(e.what()) + " (at " + parameter + " = " + format_double(value) + ")";
    if (dynamic_cast<const ConfigError*>(&e)) throw ConfigError(message);
    throw Error(message);
}

}  // namespace detail

inline PreparedData prepare_data(const ExperimentConfig& cfg) {
    Dataset raw;
    if (cfg.dataset.source == DatasetSection::Source::csv) {
        const auto schema =
            cfg.dataset.format == "botiot" ? ColumnSchema::bot_iot() : ColumnSchema::canonical();
        raw = load_csv(cfg.dataset.path, schema);
    } else {
        SynthSpec spec;
        spec.row_count = cfg.dataset.synth_rows;
        spec.class_mix = cfg.dataset.synth_mix;
        spec.separation = cfg.dataset.synth_separation;
        spec.seed = cfg.dataset.synth_seed.value_or(rng::derive_seed(cfg.seed, 0xda7a));
        raw = generate_synthetic(spec);
    }

    PreparedData pd;
    pd.fingerprint = detail::dataset_fingerprint(raw);
    SplitSpec split_spec;
    split_spec.train_fraction = cfg.train_fraction;
    split_spec.seed = rng::derive_seed(cfg.seed, 0x5b17);
    split_spec.stratified = cfg.stratified;
    auto [train, test] = split(raw, split_spec);
    pd.scaling = fit_min_max(train);
    pd.train = apply_min_max(train, pd.scaling);
    pd.test = apply_min_max(test, pd.scaling);
    pd.combined = detail::concat(pd.train, pd.test);
    return pd;
}

inline const Dataset& evaluation_view(const PreparedData& pd, const ExperimentConfig& cfg) {
    const auto scope = cfg.evaluation.scope.value_or(cfg.model.type == ModelSection::Type::svm
                                                         ? EvaluationSection::Scope::combined
                                                         : EvaluationSection::Scope::test);
    return scope == EvaluationSection::Scope::combined ? pd.combined : pd.test;
}

// Retrains the SVM from scratch at every flip level; level 0 is the clean
// baseline. Flip index sets are resampled independently per level.
inline SweepResult run_svm_flip_sweep(const ExperimentConfig& cfg) {
    if (cfg.model.type != ModelSection::Type::svm) {
        throw ConfigError("flip sweeps attack the SVM; set model type = svm");
    }
    if (cfg.attack.type == AttackSection::Type::fgsm) {
        throw ConfigError("config selects an fgsm attack; use the fgsm sweep");
    }
    const std::vector<double> grid =
        cfg.attack.grid.empty() ? default_flip_grid() : cfg.attack.grid;
    for (const double f : grid) {
        if (f < 0.0 || f > 1.0) {
            throw ConfigError("flip fraction " + format_double(f) + " outside [0, 1]");
        }
    }

    const PreparedData pd = prepare_data(cfg);
    SvmTrainConfig train_cfg = cfg.model.svm;
    train_cfg.seed = rng::derive_seed(cfg.seed, 0x0b5e);
    const LinearSvmModel baseline = train_svm(pd.train, train_cfg);
    const Dataset& eval_data = evaluation_view(pd, cfg);

    SweepResult result;
    result.metadata.parameter = "fraction";
    result.metadata.config_hash = config_hash(cfg);
    result.metadata.started_at = detail::iso8601_utc_now();
    result.metadata.dataset_fingerprint = pd.fingerprint;
    result.metadata.notes = "flip indices resampled independently per level";
    result.rows.resize(grid.size());

    detail::parallel_for(grid.size(), [&](std::size_t i) {
        try {
            LabelFlipSpec spec;
            spec.mode = cfg.attack.flip_mode;
            spec.fraction = grid[i];
            spec.seed = rng::derive_seed(cfg.seed, 0x1000 + i);
            LinearSvmModel model;
            if (grid[i] == 0.0) {
                model = baseline;
            } else {
                const Dataset poisoned =
                    spec.mode == LabelFlipSpec::Mode::random
                        ? random_flip(pd.train, spec).first
                        : targeted_flip(pd.train, baseline, spec).first;
                model = train_svm(poisoned, train_cfg);
            }
            const auto predicted = svm_predict(model, eval_data);
            SweepRow row;
            row.param = grid[i];
            row.confusion = confusion(eval_data.binary_labels, predicted, 2);
            row.report = compute_metrics(row.confusion, cfg.evaluation.averaging);
            result.rows[i] = std::move(row);
        } catch (const Error& e) {
            detail::annotate_grid_error(e, "fraction", grid[i]);
        }
    });
    return result;
}

// Trains the MLP once on clean data, then evaluates the perturbed test split
// at every epsilon; epsilon 0 is the clean test evaluation.
inline SweepResult run_fgsm_sweep(const ExperimentConfig& cfg) {
    if (cfg.model.type != ModelSection::Type::mlp) {
        throw ConfigError("fgsm sweeps attack the MLP; set model type = mlp");
    }
    if (cfg.attack.type == AttackSection::Type::flip) {
        throw ConfigError("config selects a flip attack; use the flip sweep");
    }
    const std::vector<double> grid =
        cfg.attack.grid.empty() ? default_fgsm_grid() : cfg.attack.grid;
    for (const double e : grid) {
        if (e < 0.0 || e > 1.0) {
            throw ConfigError("epsilon " + format_double(e) + " outside [0, 1]");
        }
    }

    const PreparedData pd = prepare_data(cfg);
    MlpArchitecture arch{cfg.model.mlp_layers};
    if (arch.layer_sizes.size() < 2 || arch.input_size() != pd.train.feature_count()) {
        throw ConfigError("mlp layers must start at the dataset feature count");
    }
    const std::size_t classes = arch.output_size();
    MlpTrainConfig train_cfg = cfg.model.mlp;
    train_cfg.seed = rng::derive_seed(cfg.seed, 0x3a1d);
    train_cfg.batch_size = std::min(train_cfg.batch_size, pd.train.row_count());
    const MlpModel model =
        train_mlp(init_mlp(arch, rng::derive_seed(cfg.seed, 0x1417)), pd.train, train_cfg).model;

    const Dataset& eval_data = evaluation_view(pd, cfg);
    const auto& true_labels =
        classes == 2 ? eval_data.binary_labels : eval_data.category_labels;
    const Matrix y_true = one_hot(true_labels, classes);

    SweepResult result;
    result.metadata.parameter = "epsilon";
    result.metadata.config_hash = config_hash(cfg);
    result.metadata.started_at = detail::iso8601_utc_now();
    result.metadata.dataset_fingerprint = pd.fingerprint;
    result.rows.resize(grid.size());

    detail::parallel_for(grid.size(), [&](std::size_t i) {
        try {
            FgsmSpec spec;
            spec.epsilon = grid[i];
            spec.targeted = cfg.attack.fgsm_targeted;
            spec.clip_range = cfg.attack.clip_range;
            if (spec.targeted) {
                // The reference attack takes an arbitrary target; default to
                // the benign class when the config names none.
                spec.target_class = cfg.attack.target_class.value_or(0);
            }
            const Matrix adversarial = fgsm(model, eval_data.features, y_true, spec);
            const auto predicted = predict(model, adversarial);
            SweepRow row;
            row.param = grid[i];
            row.confusion = confusion(true_labels, predicted, classes);
            row.report = compute_metrics(row.confusion, cfg.evaluation.averaging);
            row.report.loss = loss(model, adversarial, y_true);
            result.rows[i] = std::move(row);
        } catch (const Error& e) {
            detail::annotate_grid_error(e, "epsilon", grid[i]);
        }
    });
    return result;
}

inline nlohmann::json sweep_to_json(const SweepResult& result) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : result.rows) {
        rows.push_back(nlohmann::json{{"param", row.param},
                                      {"report", report_to_json(row.report)},
                                      {"confusion", confusion_to_json(row.confusion)}});
    }
    return nlohmann::json{{"metadata",
                           {{"parameter", result.metadata.parameter},
                            {"config_hash", result.metadata.config_hash},
                            {"started_at", result.metadata.started_at},
                            {"dataset_fingerprint", result.metadata.dataset_fingerprint},
                            {"notes", result.metadata.notes}}},
                          {"rows", rows}};
}

inline std::string sweep_csv_text(const SweepResult& result) {
    std::string text = result.metadata.parameter + ',' + metrics_csv_header() + '\n';
    for (const auto& row : result.rows) {
        text += format_double(row.param) + ',' + metrics_csv_row(row.report) + '\n';
    }
    return text;
}

inline std::string plotdata_csv_text(const SweepResult& result) {
    std::string text = "parameter,metric,value\n";
    static constexpr std::array<std::string_view, 8> kNames = {
        "accuracy", "tpr", "tnr", "fpr", "fnr", "precision", "recall", "f1"};
    for (const auto& row : result.rows) {
        const std::array<double, 8> values = {row.report.accuracy,  row.report.tpr,
                                              row.report.tnr,       row.report.fpr,
                                              row.report.fnr,       row.report.precision,
                                              row.report.recall,    row.report.f1};
        const std::string param = format_double(row.param);
        for (std::size_t m = 0; m < kNames.size(); ++m) {
            text += param + ',' + std::string(kNames[m]) + ',' + format_double(values[m]) + '\n';
        }
        if (row.report.loss) {
            text += param + ",loss," + format_double(*row.report.loss) + '\n';
        }
    }
    return text;
}

// Writes sweep.csv, sweep.json, plotdata.csv and one confusion_<param>.json
// per grid point. Re-emitting the same SweepResult is byte-identical.
inline void emit_reports(const SweepResult& result, const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir + "'");

    const auto write_file = [&](const std::string& name, const std::string& content) {
        const std::string path = (fs::path(dir) / name).string();
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot write '" + path + "'");
        out << content;
        if (!out) throw IoError("write failed for '" + path + "'");
    };

    write_file("sweep.csv", sweep_csv_text(result));
    write_file("sweep.json", sweep_to_json(result).dump(2) + "\n");
    write_file("plotdata.csv", plotdata_csv_text(result));
    for (const auto& row : result.rows) {
        write_file("confusion_" + format_double(row.param) + ".json",
                   confusion_to_json(row.confusion).dump(2) + "\n");
    }
}

struct SweepCsvRow {
    double param = 0.0;
    MetricsReport report;
};

// Reads back a sweep.csv produced by emit_reports (numeric columns only).
inline std::vector<SweepCsvRow> read_sweep_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw ParseError("'" + path + "' is empty");
    std::vector<SweepCsvRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (line.back() == ',') cells.push_back("");
        if (cells.size() != 10) throw ParseError("'" + path + "' row has wrong column count");
        SweepCsvRow row;
        row.param = parse_double(cells[0]);
        row.report.accuracy = parse_double(cells[1]);
        row.report.tpr = parse_double(cells[2]);
        row.report.tnr = parse_double(cells[3]);
        row.report.fpr = parse_double(cells[4]);
        row.report.fnr = parse_double(cells[5]);
        row.report.precision = parse_double(cells[6]);
        row.report.recall = parse_double(cells[7]);
        row.report.f1 = parse_double(cells[8]);
        if (!cells[9].empty()) row.report.loss = parse_double(cells[9]);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace advids
