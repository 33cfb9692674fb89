#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "advids/attacks.hpp"
#include "advids/dataset.hpp"
#include "advids/error.hpp"
#include "advids/experiment.hpp"
#include "advids/metrics.hpp"
#include "advids/mlp.hpp"
#include "advids/svm.hpp"
#include "advids/sweep.hpp"

namespace advids::cli {

namespace detail {

inline void apply_seed(ExperimentConfig& cfg, std::uint64_t seed) {
    cfg.seed = seed;
    cfg.model.svm.seed = seed;
    cfg.model.mlp.seed = seed;
}

inline void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << content;
    if (!out) throw IoError("write failed for '" + path + "'");
}

inline std::string out_path(const std::string& dir, const std::string& name) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir + "'");
    return (std::filesystem::path(dir) / name).string();
}

inline void print_report(std::ostream& os, const std::string& label, const MetricsReport& rep) {
    os << label << ": accuracy=" << format_double(rep.accuracy)
       << " precision=" << format_double(rep.precision) << " recall=" << format_double(rep.recall)
       << " f1=" << format_double(rep.f1);
    if (rep.loss) os << " loss=" << format_double(*rep.loss);
    if (rep.zero_denominator != 0) os << " (zero-denominator metrics reported as 0)";
    os << '\n';
}

struct ExperimentOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> output_dir;
};

inline ExperimentConfig load_options(const ExperimentOptions& opts) {
    ExperimentConfig cfg = load_experiment_config(opts.config_path);
    if (opts.seed) apply_seed(cfg, *opts.seed);
    if (opts.output_dir) cfg.output_dir = *opts.output_dir;
    return cfg;
}

inline std::string roc_csv_text(const RocCurve& curve) {
    std::string text = "fpr,tpr\n";
    for (const auto& point : curve.points) {
        text += format_double(point[0]) + ',' + format_double(point[1]) + '\n';
    }
    return text;
}

inline void run_train_svm(const ExperimentConfig& cfg) {
    if (cfg.model.type != ModelSection::Type::svm) {
        throw ConfigError("train-svm needs model type = svm");
    }
    const PreparedData pd = prepare_data(cfg);
    SvmTrainConfig train_cfg = cfg.model.svm;
    train_cfg.seed = rng::derive_seed(cfg.seed, 0x0b5e);
    const LinearSvmModel model = train_svm(pd.train, train_cfg);

    const Dataset& eval_data = evaluation_view(pd, cfg);
    const auto predicted = svm_predict(model, eval_data);
    const auto cm = confusion(eval_data.binary_labels, predicted, 2);
    const auto report = compute_metrics(cm, cfg.evaluation.averaging);
    const auto scores = decision_values(model, eval_data);
    const auto roc = roc_auc(scores, eval_data.binary_labels);

    write_text(out_path(cfg.output_dir, "svm_model.json"),
               svm_to_json(model, train_cfg).dump(2) + "\n");
    nlohmann::json report_doc{{"report", report_to_json(report)},
                              {"confusion", confusion_to_json(cm)},
                              {"auc", roc.auc},
                              {"converged", model.converged},
                              {"iterations", model.train_iterations_used}};
    write_text(out_path(cfg.output_dir, "report.json"), report_doc.dump(2) + "\n");
    write_text(out_path(cfg.output_dir, "roc.csv"), roc_csv_text(roc));
    print_report(std::cout, "svm", report);
    std::cout << "auc=" << format_double(roc.auc) << '\n';
}

inline void run_train_ann(const ExperimentConfig& cfg) {
    if (cfg.model.type != ModelSection::Type::mlp) {
        throw ConfigError("train-ann needs model type = mlp");
    }
    const PreparedData pd = prepare_data(cfg);
    MlpArchitecture arch{cfg.model.mlp_layers};
    if (arch.layer_sizes.size() < 2 || arch.input_size() != pd.train.feature_count()) {
        throw ConfigError("mlp layers must start at the dataset feature count");
    }
    MlpTrainConfig train_cfg = cfg.model.mlp;
    train_cfg.seed = rng::derive_seed(cfg.seed, 0x3a1d);
    train_cfg.batch_size = std::min(train_cfg.batch_size, pd.train.row_count());
    const MlpTrainResult trained =
        train_mlp(init_mlp(arch, rng::derive_seed(cfg.seed, 0x1417)), pd.train, train_cfg);

    const Dataset& eval_data = evaluation_view(pd, cfg);
    const std::size_t classes = arch.output_size();
    const auto& labels = classes == 2 ? eval_data.binary_labels : eval_data.category_labels;
    const auto predicted = predict(trained.model, eval_data.features);
    const auto cm = confusion(labels, predicted, classes);
    auto report = compute_metrics(cm, cfg.evaluation.averaging);
    report.loss = loss(trained.model, eval_data.features, one_hot(labels, classes));

    write_text(out_path(cfg.output_dir, "mlp_model.json"),
               mlp_to_json(trained.model).dump(2) + "\n");
    nlohmann::json report_doc{{"report", report_to_json(report)},
                              {"confusion", confusion_to_json(cm)},
                              {"loss_trace", trained.epoch_loss}};
    write_text(out_path(cfg.output_dir, "report.json"), report_doc.dump(2) + "\n");
    print_report(std::cout, "ann", report);
}

inline void run_evaluate(const ExperimentConfig& cfg, const std::string& model_path) {
    std::ifstream in(model_path);
    if (!in) throw IoError("cannot open model '" + model_path + "'");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("model '" + model_path + "': " + e.what());
    }

    const PreparedData pd = prepare_data(cfg);
    const Dataset& eval_data = evaluation_view(pd, cfg);
    MetricsReport report;
    ConfusionMatrix cm;
    if (doc.contains("layer_sizes")) {
        const MlpModel model = mlp_from_json(doc);
        const std::size_t classes = model.architecture.output_size();
        const auto& labels = classes == 2 ? eval_data.binary_labels : eval_data.category_labels;
        const auto predicted = predict(model, eval_data.features);
        cm = confusion(labels, predicted, classes);
        report = compute_metrics(cm, cfg.evaluation.averaging);
        report.loss = loss(model, eval_data.features, one_hot(labels, classes));
    } else {
        const auto [model, model_cfg] = svm_from_json(doc);
        const auto predicted = svm_predict(model, eval_data);
        cm = confusion(eval_data.binary_labels, predicted, 2);
        report = compute_metrics(cm, cfg.evaluation.averaging);
    }
    nlohmann::json report_doc{{"report", report_to_json(report)},
                              {"confusion", confusion_to_json(cm)}};
    write_text(out_path(cfg.output_dir, "evaluate_report.json"), report_doc.dump(2) + "\n");
    print_report(std::cout, "evaluate", report);
}

inline void run_cv(const ExperimentConfig& cfg, std::size_t folds) {
    if (cfg.model.type != ModelSection::Type::svm) {
        throw ConfigError("cv runs the SVM; set model type = svm");
    }
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
    const Dataset scaled = apply_min_max(raw, fit_min_max(raw));
    SvmTrainConfig train_cfg = cfg.model.svm;
    train_cfg.seed = cfg.seed;
    const auto reports = cross_validate(scaled, train_cfg, folds);

    nlohmann::json doc = nlohmann::json::array();
    double mean_accuracy = 0.0;
    for (std::size_t k = 0; k < reports.size(); ++k) {
        doc.push_back(report_to_json(reports[k]));
        mean_accuracy += reports[k].accuracy;
        print_report(std::cout, "fold " + std::to_string(k), reports[k]);
    }
    mean_accuracy /= static_cast<double>(reports.size());
    std::cout << "mean accuracy=" << format_double(mean_accuracy) << '\n';
    write_text(out_path(cfg.output_dir, "cv_report.json"), doc.dump(2) + "\n");
}

inline void run_preprocess(const std::string& input, const std::string& format,
                           const std::string& out_dir, double train_fraction,
                           std::uint64_t seed, bool stratified) {
    const auto schema = format == "botiot" ? ColumnSchema::bot_iot() : ColumnSchema::canonical();
    const Dataset raw = load_csv(input, schema);
    SplitSpec spec{train_fraction, rng::derive_seed(seed, 0x5b17), stratified};
    const auto [train, test] = split(raw, spec);
    const ScalingState scaling = fit_min_max(train);
    const Dataset train_scaled = apply_min_max(train, scaling);
    const Dataset test_scaled = apply_min_max(test, scaling);

    std::size_t out_of_range = 0;
    for (const double v : test_scaled.features.data()) {
        if (v < -1.0 || v > 1.0) ++out_of_range;
    }
    std::vector<long long> category_counts(kCategoryCount, 0);
    for (const int c : raw.category_labels) ++category_counts[static_cast<std::size_t>(c)];

    dump_csv(train_scaled, out_path(out_dir, "train.csv"));
    dump_csv(test_scaled, out_path(out_dir, "test.csv"));
    write_text(out_path(out_dir, "scaling.json"),
               nlohmann::json{{"min", scaling.min}, {"max", scaling.max}}.dump(2) + "\n");
    nlohmann::json counts;
    for (std::size_t c = 0; c < kCategoryCount; ++c) {
        counts[std::string(kCategoryNames[c])] = category_counts[c];
    }
    nlohmann::json report{{"rows_total", raw.row_count()},
                          {"rows_train", train.row_count()},
                          {"rows_test", test.row_count()},
                          {"category_counts", counts},
                          {"test_values_out_of_range", out_of_range}};
    write_text(out_path(out_dir, "preprocess_report.json"), report.dump(2) + "\n");
    std::cout << "preprocessed " << raw.row_count() << " rows -> " << train.row_count()
              << " train / " << test.row_count() << " test";
    if (out_of_range > 0) {
        std::cout << " (" << out_of_range << " scaled test values outside [-1, 1])";
    }
    std::cout << '\n';
}

inline void run_synth(std::size_t rows, std::uint64_t seed, const std::string& out,
                      double separation, const std::vector<double>& mix) {
    SynthSpec spec;
    spec.row_count = rows;
    spec.seed = seed;
    spec.separation = separation;
    if (!mix.empty()) {
        if (mix.size() != kCategoryCount) throw ConfigError("--mix needs five weights");
        std::copy(mix.begin(), mix.end(), spec.class_mix.begin());
    }
    const Dataset ds = generate_synthetic(spec);
    dump_csv(ds, out);
    std::cout << "wrote " << ds.row_count() << " rows to " << out << '\n';
}

}  // namespace detail

// Entry point shared by the binary and the tests. `args` excludes argv[0].
inline int dispatch(const std::vector<std::string>& args) {
    CLI::App app{"Adversarial attacks against machine-learning intrusion detection"};
    app.require_subcommand(1);

    detail::ExperimentOptions exp_opts;
    const auto add_experiment_options = [&exp_opts](CLI::App* sub) {
        sub->add_option("--config", exp_opts.config_path, "experiment config file")->required();
        sub->add_option("--seed", exp_opts.seed, "override the run seed");
        sub->add_option("--out-dir", exp_opts.output_dir, "override the output directory");
    };

    struct {
        std::string input;
        std::string format = "botiot";
        std::string out_dir;
        double train_fraction = 0.8;
        std::uint64_t seed = 42;
        bool no_stratify = false;
    } pre;
    auto* preprocess = app.add_subcommand("preprocess", "split and scale a Bot-IoT style CSV");
    preprocess->add_option("--input", pre.input, "input CSV")->required();
    preprocess->add_option("--format", pre.format, "botiot or canonical")
        ->check(CLI::IsMember({"botiot", "canonical"}));
    preprocess->add_option("--out-dir", pre.out_dir, "output directory")->required();
    preprocess->add_option("--train-fraction", pre.train_fraction, "training share");
    preprocess->add_option("--seed", pre.seed, "split seed");
    preprocess->add_flag("--no-stratify", pre.no_stratify, "plain instead of stratified split");

    struct {
        std::size_t rows = 0;
        std::uint64_t seed = 42;
        std::string out;
        double separation = 6.0;
        std::vector<double> mix;
    } synth;
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic look-alike dataset");
    synth_cmd->add_option("--rows", synth.rows, "row count")->required();
    synth_cmd->add_option("--seed", synth.seed, "generator seed");
    synth_cmd->add_option("--out", synth.out, "output CSV")->required();
    synth_cmd->add_option("--separation", synth.separation, "distance between class means");
    synth_cmd->add_option("--mix", synth.mix, "five class weights")->delimiter(',');

    auto* train_svm_cmd = app.add_subcommand("train-svm", "train and score the linear SVM");
    add_experiment_options(train_svm_cmd);
    auto* train_ann_cmd = app.add_subcommand("train-ann", "train and score the MLP");
    add_experiment_options(train_ann_cmd);

    std::string model_path;
    auto* evaluate_cmd = app.add_subcommand("evaluate", "evaluate a saved model");
    add_experiment_options(evaluate_cmd);
    evaluate_cmd->add_option("--model", model_path, "model JSON file")->required();

    std::size_t folds = 4;
    auto* cv_cmd = app.add_subcommand("cv", "k-fold cross-validation of the SVM");
    add_experiment_options(cv_cmd);
    cv_cmd->add_option("--folds", folds, "fold count");

    std::string mode_override;
    auto* flip_cmd = app.add_subcommand("flip-sweep", "label-flip poisoning sweep");
    add_experiment_options(flip_cmd);
    flip_cmd->add_option("--mode", mode_override, "random or targeted")
        ->check(CLI::IsMember({"random", "targeted"}));

    auto* fgsm_cmd = app.add_subcommand("fgsm-sweep", "FGSM evasion sweep");
    add_experiment_options(fgsm_cmd);

    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("advids");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << '\n' << app.help();
        return 1;
    }

    try {
        if (*preprocess) {
            detail::run_preprocess(pre.input, pre.format, pre.out_dir, pre.train_fraction,
                                   pre.seed, !pre.no_stratify);
        } else if (*synth_cmd) {
            detail::run_synth(synth.rows, synth.seed, synth.out, synth.separation, synth.mix);
        } else if (*train_svm_cmd) {
            detail::run_train_svm(detail::load_options(exp_opts));
        } else if (*train_ann_cmd) {
            detail::run_train_ann(detail::load_options(exp_opts));
        } else if (*evaluate_cmd) {
            detail::run_evaluate(detail::load_options(exp_opts), model_path);
        } else if (*cv_cmd) {
            detail::run_cv(detail::load_options(exp_opts), folds);
        } else if (*flip_cmd) {
            ExperimentConfig cfg = detail::load_options(exp_opts);
            if (mode_override == "random") cfg.attack.flip_mode = LabelFlipSpec::Mode::random;
            if (mode_override == "targeted") cfg.attack.flip_mode = LabelFlipSpec::Mode::targeted;
            const SweepResult result = run_svm_flip_sweep(cfg);
            emit_reports(result, cfg.output_dir);
            std::cout << "wrote " << result.rows.size() << " sweep rows to " << cfg.output_dir
                      << '\n';
        } else if (*fgsm_cmd) {
            const ExperimentConfig cfg = detail::load_options(exp_opts);
            const SweepResult result = run_fgsm_sweep(cfg);
            emit_reports(result, cfg.output_dir);
            std::cout << "wrote " << result.rows.size() << " sweep rows to " << cfg.output_dir
                      << '\n';
        }
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}

inline int dispatch(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return dispatch(args);
}

}  // namespace advids::cli
