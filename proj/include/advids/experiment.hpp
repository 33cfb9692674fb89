#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "advids/attacks.hpp"
#include "advids/dataset.hpp"
#include "advids/error.hpp"
#include "advids/metrics.hpp"
#include "advids/mlp.hpp"
#include "advids/svm.hpp"
#include "advids/util.hpp"

namespace advids {

struct DatasetSection {
    enum class Source { csv, synth };

    Source source = Source::synth;
    std::string path;                  // csv source
    std::string format = "canonical";  // csv source: canonical | botiot
    std::size_t synth_rows = 2000;
    std::array<double, kCategoryCount> synth_mix{0.5, 0.125, 0.125, 0.125, 0.125};
    double synth_separation = 6.0;
    std::optional<std::uint64_t> synth_seed;  // defaults to a stream of the run seed
};

struct ModelSection {
    enum class Type { svm, mlp };

    Type type = Type::svm;
    SvmTrainConfig svm;
    std::vector<std::size_t> mlp_layers{10, 20, 60, 80, 90, 2};
    MlpTrainConfig mlp;
};

struct AttackSection {
    enum class Type { none, flip, fgsm };

    Type type = Type::none;
    LabelFlipSpec::Mode flip_mode = LabelFlipSpec::Mode::random;
    std::vector<double> grid;  // empty means the default grid of the attack
    bool fgsm_targeted = false;
    std::optional<int> target_class;
    std::optional<std::array<double, 2>> clip_range;
};

struct EvaluationSection {
    enum class Scope { combined, test };

    std::optional<Scope> scope;  // default: combined for SVM, test for MLP
    std::optional<Averaging> averaging;
};

struct ExperimentConfig {
    DatasetSection dataset;
    ModelSection model;
    AttackSection attack;
    EvaluationSection evaluation;
    std::string output_dir = ".";
    std::uint64_t seed = 42;
    double train_fraction = 0.8;
    bool stratified = true;
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string_view::npos) return {};
    const auto end = s.find_last_not_of(" \t\r");
    return std::string(s.substr(begin, end - begin + 1));
}

inline bool parse_bool(const std::string& value, const std::string& key) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw ConfigError("key '" + key + "' expects a boolean, got '" + value + "'");
}

inline std::uint64_t parse_u64(const std::string& value, const std::string& key) {
    try {
        std::size_t used = 0;
        const auto parsed = std::stoull(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return parsed;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "' expects an unsigned integer, got '" + value + "'");
    }
}

inline double parse_real(const std::string& value, const std::string& key) {
    try {
        return parse_double(value);
    } catch (const ParseError&) {
        throw ConfigError("key '" + key + "' expects a number, got '" + value + "'");
    }
}

inline std::vector<double> parse_real_list(const std::string& value, const std::string& key) {
    std::vector<double> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_real(trim(item), key));
    if (out.empty()) throw ConfigError("key '" + key + "' expects a comma-separated list");
    return out;
}

inline std::vector<std::size_t> parse_size_list(const std::string& value, const std::string& key) {
    std::vector<std::size_t> out;
    for (const double v : parse_real_list(value, key)) {
        if (v < 1.0 || v != static_cast<double>(static_cast<std::size_t>(v))) {
            throw ConfigError("key '" + key + "' expects positive integers");
        }
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

using SectionMap = std::map<std::string, std::map<std::string, std::string>>;

// Flat key=value document with [section] headers and #/; comment lines.
inline SectionMap read_sections(std::istream& in) {
    static const std::set<std::string> kSections = {"dataset", "model", "attack", "evaluation",
                                                    "run"};
    SectionMap sections;
    std::string line;
    std::string current;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string text = trim(line);
        if (text.empty() || text.front() == '#' || text.front() == ';') continue;
        if (text.front() == '[') {
            if (text.back() != ']') {
                throw ConfigError("line " + std::to_string(line_no) + ": malformed section header");
            }
            current = trim(text.substr(1, text.size() - 2));
            if (!kSections.count(current)) {
                throw ConfigError("unknown config section '" + current + "'");
            }
            continue;
        }
        const auto eq = text.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        }
        if (current.empty()) {
            throw ConfigError("line " + std::to_string(line_no) + ": key outside any section");
        }
        const std::string key = trim(text.substr(0, eq));
        const std::string value = trim(text.substr(eq + 1));
        if (!sections[current].emplace(key, value).second) {
            throw ConfigError("duplicate key '" + key + "' in section [" + current + "]");
        }
    }
    return sections;
}

inline void require_known_keys(const SectionMap& sections, const std::string& section,
                               const std::set<std::string>& known) {
    const auto it = sections.find(section);
    if (it == sections.end()) return;
    for (const auto& [key, value] : it->second) {
        if (!known.count(key)) {
            throw ConfigError("unknown key '" + key + "' in section [" + section + "]");
        }
    }
}

inline const std::string* lookup(const SectionMap& sections, const std::string& section,
                                 const std::string& key) {
    const auto sec = sections.find(section);
    if (sec == sections.end()) return nullptr;
    const auto it = sec->second.find(key);
    return it == sec->second.end() ? nullptr : &it->second;
}

}  // namespace detail

inline ExperimentConfig parse_experiment_config(std::istream& in) {
    const auto sections = detail::read_sections(in);
    detail::require_known_keys(sections, "dataset",
                               {"source", "path", "format", "rows", "mix", "separation", "seed"});
    detail::require_known_keys(
        sections, "model",
        {"type", "penalty_c", "max_iterations", "tolerance", "class_weights", "layers", "epochs",
         "batch_size", "learning_rate"});
    detail::require_known_keys(sections, "attack",
                               {"type", "mode", "grid", "targeted", "target_class", "clip"});
    detail::require_known_keys(sections, "evaluation", {"scope", "averaging"});
    detail::require_known_keys(sections, "run",
                               {"seed", "train_fraction", "stratified", "output_dir"});

    ExperimentConfig cfg;
    using detail::lookup;

    if (const auto* v = lookup(sections, "dataset", "source")) {
        if (*v == "csv") {
            cfg.dataset.source = DatasetSection::Source::csv;
        } else if (*v == "synth") {
            cfg.dataset.source = DatasetSection::Source::synth;
        } else {
            throw ConfigError("dataset source must be csv or synth, got '" + *v + "'");
        }
    }
    if (const auto* v = lookup(sections, "dataset", "path")) cfg.dataset.path = *v;
    if (const auto* v = lookup(sections, "dataset", "format")) {
        if (*v != "canonical" && *v != "botiot") {
            throw ConfigError("dataset format must be canonical or botiot");
        }
        cfg.dataset.format = *v;
    }
    if (const auto* v = lookup(sections, "dataset", "rows")) {
        cfg.dataset.synth_rows = detail::parse_u64(*v, "rows");
    }
    if (const auto* v = lookup(sections, "dataset", "mix")) {
        const auto mix = detail::parse_real_list(*v, "mix");
        if (mix.size() != kCategoryCount) {
            throw ConfigError("mix must list five class weights");
        }
        std::copy(mix.begin(), mix.end(), cfg.dataset.synth_mix.begin());
    }
    if (const auto* v = lookup(sections, "dataset", "separation")) {
        cfg.dataset.synth_separation = detail::parse_real(*v, "separation");
    }
    if (const auto* v = lookup(sections, "dataset", "seed")) {
        cfg.dataset.synth_seed = detail::parse_u64(*v, "seed");
    }
    if (cfg.dataset.source == DatasetSection::Source::csv && cfg.dataset.path.empty()) {
        throw ConfigError("dataset source csv needs a path");
    }

    if (const auto* v = lookup(sections, "model", "type")) {
        if (*v == "svm") {
            cfg.model.type = ModelSection::Type::svm;
        } else if (*v == "mlp" || *v == "ann") {
            cfg.model.type = ModelSection::Type::mlp;
        } else {
            throw ConfigError("model type must be svm or mlp, got '" + *v + "'");
        }
    }
    if (const auto* v = lookup(sections, "model", "penalty_c")) {
        cfg.model.svm.penalty_c = detail::parse_real(*v, "penalty_c");
    }
    if (const auto* v = lookup(sections, "model", "max_iterations")) {
        cfg.model.svm.max_iterations = detail::parse_u64(*v, "max_iterations");
    }
    if (const auto* v = lookup(sections, "model", "tolerance")) {
        cfg.model.svm.tolerance = detail::parse_real(*v, "tolerance");
    }
    if (const auto* v = lookup(sections, "model", "class_weights")) {
        const auto weights = detail::parse_real_list(*v, "class_weights");
        cfg.model.svm.class_weights = weights;
        cfg.model.mlp.class_weights = weights;
    }
    if (const auto* v = lookup(sections, "model", "layers")) {
        cfg.model.mlp_layers = detail::parse_size_list(*v, "layers");
    }
    if (const auto* v = lookup(sections, "model", "epochs")) {
        cfg.model.mlp.epochs = detail::parse_u64(*v, "epochs");
    }
    if (const auto* v = lookup(sections, "model", "batch_size")) {
        cfg.model.mlp.batch_size = detail::parse_u64(*v, "batch_size");
    }
    if (const auto* v = lookup(sections, "model", "learning_rate")) {
        cfg.model.mlp.learning_rate = detail::parse_real(*v, "learning_rate");
    }

    if (const auto* v = lookup(sections, "attack", "type")) {
        if (*v == "flip") {
            cfg.attack.type = AttackSection::Type::flip;
        } else if (*v == "fgsm") {
            cfg.attack.type = AttackSection::Type::fgsm;
        } else if (*v == "none") {
            cfg.attack.type = AttackSection::Type::none;
        } else {
            throw ConfigError("attack type must be flip, fgsm or none");
        }
    }
    if (const auto* v = lookup(sections, "attack", "mode")) {
        if (*v == "random") {
            cfg.attack.flip_mode = LabelFlipSpec::Mode::random;
        } else if (*v == "targeted") {
            cfg.attack.flip_mode = LabelFlipSpec::Mode::targeted;
        } else {
            throw ConfigError("attack mode must be random or targeted");
        }
    }
    if (const auto* v = lookup(sections, "attack", "grid")) {
        cfg.attack.grid = detail::parse_real_list(*v, "grid");
        for (std::size_t i = 1; i < cfg.attack.grid.size(); ++i) {
            if (cfg.attack.grid[i] <= cfg.attack.grid[i - 1]) {
                throw ConfigError("attack grid values must be strictly increasing");
            }
        }
    }
    if (const auto* v = lookup(sections, "attack", "targeted")) {
        cfg.attack.fgsm_targeted = detail::parse_bool(*v, "targeted");
    }
    if (const auto* v = lookup(sections, "attack", "target_class")) {
        const auto t = detail::parse_u64(*v, "target_class");
        if (t >= kCategoryCount) throw ConfigError("target_class out of range");
        cfg.attack.target_class = static_cast<int>(t);
    }
    if (const auto* v = lookup(sections, "attack", "clip")) {
        const auto range = detail::parse_real_list(*v, "clip");
        if (range.size() != 2 || range[0] > range[1]) {
            throw ConfigError("clip expects 'lo,hi' with lo <= hi");
        }
        cfg.attack.clip_range = {{range[0], range[1]}};
    }

    if (const auto* v = lookup(sections, "evaluation", "scope")) {
        if (*v == "combined") {
            cfg.evaluation.scope = EvaluationSection::Scope::combined;
        } else if (*v == "test") {
            cfg.evaluation.scope = EvaluationSection::Scope::test;
        } else {
            throw ConfigError("evaluation scope must be combined or test");
        }
    }
    if (const auto* v = lookup(sections, "evaluation", "averaging")) {
        cfg.evaluation.averaging = averaging_from_string(*v);
    }

    if (const auto* v = lookup(sections, "run", "seed")) {
        cfg.seed = detail::parse_u64(*v, "seed");
        cfg.model.svm.seed = cfg.seed;
        cfg.model.mlp.seed = cfg.seed;
    }
    if (const auto* v = lookup(sections, "run", "train_fraction")) {
        cfg.train_fraction = detail::parse_real(*v, "train_fraction");
    }
    if (const auto* v = lookup(sections, "run", "stratified")) {
        cfg.stratified = detail::parse_bool(*v, "stratified");
    }
    if (const auto* v = lookup(sections, "run", "output_dir")) cfg.output_dir = *v;
    return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path + "'");
    try {
        return parse_experiment_config(in);
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

// Canonical one-line-per-field rendering; every config field appears, so the
// derived hash changes exactly when a field changes.
inline std::string canonical_config_string(const ExperimentConfig& cfg) {
    std::string s;
    const auto add = [&s](std::string_view key, const std::string& value) {
        s += key;
        s += '=';
        s += value;
        s += '\n';
    };
    add("dataset.source", cfg.dataset.source == DatasetSection::Source::csv ? "csv" : "synth");
    add("dataset.path", cfg.dataset.path);
    add("dataset.format", cfg.dataset.format);
    add("dataset.rows", std::to_string(cfg.dataset.synth_rows));
    std::string mix;
    for (const double w : cfg.dataset.synth_mix) mix += format_double(w) + ",";
    add("dataset.mix", mix);
    add("dataset.separation", format_double(cfg.dataset.synth_separation));
    add("dataset.seed", cfg.dataset.synth_seed ? std::to_string(*cfg.dataset.synth_seed) : "");
    add("model.type", cfg.model.type == ModelSection::Type::svm ? "svm" : "mlp");
    add("model.penalty_c", format_double(cfg.model.svm.penalty_c));
    add("model.max_iterations", std::to_string(cfg.model.svm.max_iterations));
    add("model.tolerance", format_double(cfg.model.svm.tolerance));
    std::string cw;
    if (cfg.model.svm.class_weights) {
        for (const double w : *cfg.model.svm.class_weights) cw += format_double(w) + ",";
    }
    add("model.class_weights", cw);
    std::string layers;
    for (const std::size_t l : cfg.model.mlp_layers) layers += std::to_string(l) + ",";
    add("model.layers", layers);
    add("model.epochs", std::to_string(cfg.model.mlp.epochs));
    add("model.batch_size", std::to_string(cfg.model.mlp.batch_size));
    add("model.learning_rate", format_double(cfg.model.mlp.learning_rate));
    switch (cfg.attack.type) {
        case AttackSection::Type::none: add("attack.type", "none"); break;
        case AttackSection::Type::flip: add("attack.type", "flip"); break;
        case AttackSection::Type::fgsm: add("attack.type", "fgsm"); break;
    }
    add("attack.mode",
        cfg.attack.flip_mode == LabelFlipSpec::Mode::random ? "random" : "targeted");
    std::string grid;
    for (const double g : cfg.attack.grid) grid += format_double(g) + ",";
    add("attack.grid", grid);
    add("attack.targeted", cfg.attack.fgsm_targeted ? "true" : "false");
    add("attack.target_class",
        cfg.attack.target_class ? std::to_string(*cfg.attack.target_class) : "");
    add("attack.clip", cfg.attack.clip_range ? format_double((*cfg.attack.clip_range)[0]) + "," +
                                                   format_double((*cfg.attack.clip_range)[1])
                                             : "");
    std::string scope;
    if (cfg.evaluation.scope) {
        scope = *cfg.evaluation.scope == EvaluationSection::Scope::combined ? "combined" : "test";
    }
    add("evaluation.scope", scope);
    add("evaluation.averaging",
        cfg.evaluation.averaging ? to_string(*cfg.evaluation.averaging) : "");
    add("run.seed", std::to_string(cfg.seed));
    add("run.train_fraction", format_double(cfg.train_fraction));
    add("run.stratified", cfg.stratified ? "true" : "false");
    add("run.output_dir", cfg.output_dir);
    return s;
}

inline std::string config_hash(const ExperimentConfig& cfg) {
    return hex64(fnv1a64(canonical_config_string(cfg)));
}

}  // namespace advids
