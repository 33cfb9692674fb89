#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "advids/error.hpp"
#include "advids/matrix.hpp"
#include "advids/rng.hpp"
#include "advids/util.hpp"

namespace advids {

// The ten model features, in canonical column order.
inline constexpr std::array<std::string_view, 10> kFeatureNames = {
    "seq",   "stddev", "N_IN_Conn_P_SrcIP", "min",   "state_number",
    "mean",  "N_IN_Conn_P_DstIP",           "drate", "srate", "max"};

// Fixed traffic-category encoding, stable across runs and files.
inline constexpr std::array<std::string_view, 5> kCategoryNames = {
    "Normal", "Reconnaissance", "DDoS", "DoS", "Theft"};

inline constexpr std::size_t kCategoryCount = kCategoryNames.size();

inline int category_index(std::string_view name) {
    for (std::size_t i = 0; i < kCategoryNames.size(); ++i) {
        if (kCategoryNames[i] == name) return static_cast<int>(i);
    }
    throw ValueError("unknown traffic category: '" + std::string(name) + "'");
}

enum class ColumnRole {
    feature,
    flow_identifier,
    row_identifier,
    label_binary,
    label_category,
    label_subcategory,
};

// Declares which columns a CSV carries and what each one means. Loading is
// order-insensitive; `names` fixes the order used when writing.
struct ColumnSchema {
    std::vector<std::string> names;
    std::map<std::string, ColumnRole> roles;

    // The 19-column layout of the published flow files.
    static ColumnSchema bot_iot() {
        ColumnSchema s;
        s.add("pkSeqID", ColumnRole::row_identifier);
        for (const char* id : {"proto", "saddr", "sport", "daddr", "dport"}) {
            s.add(id, ColumnRole::flow_identifier);
        }
        for (const auto name : kFeatureNames) s.add(std::string(name), ColumnRole::feature);
        s.add("attack", ColumnRole::label_binary);
        s.add("category", ColumnRole::label_category);
        s.add("subcategory", ColumnRole::label_subcategory);
        s.validate();
        return s;
    }

    // Reduced layout used by this library's own dumps: the ten features plus
    // both label columns.
    static ColumnSchema canonical() {
        ColumnSchema s;
        for (const auto name : kFeatureNames) s.add(std::string(name), ColumnRole::feature);
        s.add("attack", ColumnRole::label_binary);
        s.add("category", ColumnRole::label_category);
        s.validate();
        return s;
    }

    void add(std::string name, ColumnRole role) {
        roles.emplace(name, role);
        names.push_back(std::move(name));
    }

    std::vector<std::string> names_with_role(ColumnRole role) const {
        std::vector<std::string> out;
        for (const auto& name : names) {
            if (roles.at(name) == role) out.push_back(name);
        }
        return out;
    }

    void validate() const {
        if (names.size() != roles.size()) throw SchemaError("duplicate column name in schema");
        const auto features = names_with_role(ColumnRole::feature);
        if (features.size() != kFeatureNames.size()) {
            throw SchemaError("schema must carry exactly the ten model features");
        }
        for (const auto& f : features) {
            if (std::find(kFeatureNames.begin(), kFeatureNames.end(), f) == kFeatureNames.end()) {
                throw SchemaError("'" + f + "' is not one of the ten model features");
            }
        }
        static constexpr std::array<std::string_view, 5> kFlowIds = {"proto", "saddr", "sport",
                                                                     "daddr", "dport"};
        for (const auto& id : names_with_role(ColumnRole::flow_identifier)) {
            if (std::find(kFlowIds.begin(), kFlowIds.end(), id) == kFlowIds.end()) {
                throw SchemaError("'" + id + "' is not a flow identifier");
            }
        }
        const auto row_ids = names_with_role(ColumnRole::row_identifier);
        if (row_ids.size() > 1 || (row_ids.size() == 1 && row_ids[0] != "pkSeqID")) {
            throw SchemaError("at most one row identifier is allowed and it must be pkSeqID");
        }
        if (names_with_role(ColumnRole::label_binary).size() != 1 ||
            names_with_role(ColumnRole::label_category).size() != 1) {
            throw SchemaError("schema needs exactly one binary and one category label column");
        }
    }
};

// Per-feature extrema; scaling target range is fixed to [-1, 1].
struct ScalingState {
    std::vector<double> min;
    std::vector<double> max;

    bool operator==(const ScalingState&) const = default;
};

struct Dataset {
    Matrix features;                  // rows x 10
    std::vector<int> binary_labels;   // 0 = benign, 1 = attack
    std::vector<int> category_labels; // indices into kCategoryNames
    std::optional<ScalingState> scaling;

    std::size_t row_count() const { return features.rows(); }
    std::size_t feature_count() const { return features.cols(); }

    bool operator==(const Dataset&) const = default;
};

struct SplitSpec {
    double train_fraction = 0.8;
    std::uint64_t seed = 42;
    bool stratified = true;
};

struct SynthSpec {
    std::size_t row_count = 0;
    std::array<double, kCategoryCount> class_mix{1.0, 0.0, 0.0, 0.0, 0.0};
    std::uint64_t seed = 42;
    double separation = 6.0;  // pairwise distance between component means
};

namespace detail {

// RFC 4180 reader: quoted fields, doubled quotes, embedded newlines, CRLF.
inline std::vector<std::vector<std::string>> read_csv_records(const std::string& text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool quoted = false;
    bool any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        switch (c) {
            case '"':
                quoted = true;
                any = true;
                break;
            case ',':
                record.push_back(std::move(field));
                field.clear();
                any = true;
                break;
            case '\r':
                break;
            case '\n':
                if (any || !field.empty() || !record.empty()) {
                    record.push_back(std::move(field));
                    field.clear();
                    records.push_back(std::move(record));
                    record.clear();
                    any = false;
                }
                break;
            default:
                field += c;
                any = true;
                break;
        }
    }
    if (quoted) throw ParseError("unterminated quoted CSV field");
    if (any || !field.empty() || !record.empty()) {
        record.push_back(std::move(field));
        records.push_back(std::move(record));
    }
    return records;
}

inline int parse_binary_label(std::string_view cell, std::size_t row, std::size_t col) {
    if (cell == "0" || cell == "false" || cell == "False" || cell == "FALSE") return 0;
    if (cell == "1" || cell == "true" || cell == "True" || cell == "TRUE") return 1;
    throw ParseError("row " + std::to_string(row) + ", column " + std::to_string(col) +
                     ": binary label must be 0/1 or true/false, got '" + std::string(cell) + "'");
}

}  // namespace detail

inline Dataset load_csv(const std::string& path, const ColumnSchema& schema) {
    schema.validate();
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto records = detail::read_csv_records(text);
    if (records.empty()) throw ParseError("'" + path + "' has no header row");

    const auto& header = records.front();
    std::map<std::string, std::size_t> header_pos;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (!schema.roles.count(header[i])) {
            throw SchemaError("unknown extra column '" + header[i] + "' in '" + path + "'");
        }
        if (!header_pos.emplace(header[i], i).second) {
            throw SchemaError("duplicate column '" + header[i] + "' in '" + path + "'");
        }
    }
    for (const auto& name : schema.names) {
        if (!header_pos.count(name)) {
            throw SchemaError("missing column '" + name + "' in '" + path + "'");
        }
    }

    std::array<std::size_t, 10> feature_cols{};
    for (std::size_t f = 0; f < kFeatureNames.size(); ++f) {
        feature_cols[f] = header_pos.at(std::string(kFeatureNames[f]));
    }
    const std::size_t attack_col =
        header_pos.at(schema.names_with_role(ColumnRole::label_binary).front());
    const std::size_t category_col =
        header_pos.at(schema.names_with_role(ColumnRole::label_category).front());

    Dataset ds;
    const std::size_t n = records.size() - 1;
    ds.features = Matrix(n, kFeatureNames.size());
    ds.binary_labels.resize(n);
    ds.category_labels.resize(n);
    for (std::size_t r = 0; r < n; ++r) {
        const auto& cells = records[r + 1];
        if (cells.size() != header.size()) {
            throw ParseError("row " + std::to_string(r + 1) + ": expected " +
                             std::to_string(header.size()) + " cells, got " +
                             std::to_string(cells.size()));
        }
        for (std::size_t f = 0; f < feature_cols.size(); ++f) {
            const auto& cell = cells[feature_cols[f]];
            try {
                ds.features(r, f) = parse_double(cell);
            } catch (const ParseError&) {
                throw ParseError("row " + std::to_string(r + 1) + ", column '" +
                                 std::string(kFeatureNames[f]) + "': cannot parse '" + cell + "'");
            }
        }
        ds.binary_labels[r] = detail::parse_binary_label(cells[attack_col], r + 1, attack_col);
        ds.category_labels[r] = category_index(cells[category_col]);
    }
    return ds;
}

// Canonical dump: ten scaled-or-raw feature columns plus both label columns.
// Doubles are written in shortest round-trip form, so load(dump(ds)) == ds.
inline void dump_csv(const Dataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    for (std::size_t f = 0; f < kFeatureNames.size(); ++f) {
        out << kFeatureNames[f] << ',';
    }
    out << "attack,category\n";
    for (std::size_t r = 0; r < ds.row_count(); ++r) {
        for (std::size_t f = 0; f < ds.feature_count(); ++f) {
            out << format_double(ds.features(r, f)) << ',';
        }
        out << ds.binary_labels[r] << ',' << kCategoryNames[static_cast<std::size_t>(ds.category_labels[r])]
            << '\n';
    }
    if (!out) throw IoError("write failed for '" + path + "'");
}

inline ScalingState fit_min_max(const Dataset& ds) {
    if (ds.row_count() == 0) throw EmptyInputError("cannot fit scaler on an empty dataset");
    ScalingState s;
    s.min.assign(ds.feature_count(), 0.0);
    s.max.assign(ds.feature_count(), 0.0);
    for (std::size_t f = 0; f < ds.feature_count(); ++f) {
        double lo = ds.features(0, f);
        double hi = lo;
        for (std::size_t r = 1; r < ds.row_count(); ++r) {
            const double v = ds.features(r, f);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        s.min[f] = lo;
        s.max[f] = hi;
    }
    return s;
}

// x -> 2*(x - min)/(max - min) - 1. Constant columns map to 0. Values fitted
// on other data may land outside [-1, 1]; they are kept, not clipped.
inline Dataset apply_min_max(const Dataset& ds, const ScalingState& s) {
    if (s.min.size() != ds.feature_count()) {
        throw ShapeError("scaler fitted on " + std::to_string(s.min.size()) +
                         " features, dataset has " + std::to_string(ds.feature_count()));
    }
    Dataset out = ds;
    for (std::size_t f = 0; f < ds.feature_count(); ++f) {
        const double span = s.max[f] - s.min[f];
        for (std::size_t r = 0; r < ds.row_count(); ++r) {
            out.features(r, f) =
                span == 0.0 ? 0.0 : 2.0 * (ds.features(r, f) - s.min[f]) / span - 1.0;
        }
    }
    out.scaling = s;
    return out;
}

inline Dataset invert_min_max(const Dataset& ds, const ScalingState& s) {
    if (s.min.size() != ds.feature_count()) {
        throw ShapeError("scaler fitted on " + std::to_string(s.min.size()) +
                         " features, dataset has " + std::to_string(ds.feature_count()));
    }
    Dataset out = ds;
    for (std::size_t f = 0; f < ds.feature_count(); ++f) {
        const double span = s.max[f] - s.min[f];
        for (std::size_t r = 0; r < ds.row_count(); ++r) {
            out.features(r, f) =
                span == 0.0 ? s.min[f] : (ds.features(r, f) + 1.0) / 2.0 * span + s.min[f];
        }
    }
    out.scaling.reset();
    return out;
}

inline Matrix one_hot(std::span<const int> labels, std::size_t class_count) {
    Matrix out(labels.size(), class_count);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= class_count) {
            throw ValueError("label " + std::to_string(labels[i]) + " out of range for " +
                             std::to_string(class_count) + " classes");
        }
        out(i, static_cast<std::size_t>(labels[i])) = 1.0;
    }
    return out;
}

inline Dataset select_rows(const Dataset& ds, std::span<const std::size_t> indices) {
    Dataset out;
    out.features = ds.features.select_rows(indices);
    out.binary_labels.reserve(indices.size());
    out.category_labels.reserve(indices.size());
    for (const auto i : indices) {
        out.binary_labels.push_back(ds.binary_labels[i]);
        out.category_labels.push_back(ds.category_labels[i]);
    }
    out.scaling = ds.scaling;
    return out;
}

inline std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec) {
    if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
        throw ConfigError("train_fraction must lie in (0, 1), got " +
                          format_double(spec.train_fraction));
    }
    if (ds.row_count() == 0) throw EmptyInputError("cannot split an empty dataset");

    std::mt19937_64 gen(spec.seed);
    std::vector<std::size_t> train_idx;
    std::vector<std::size_t> test_idx;
    if (spec.stratified) {
        for (std::size_t c = 0; c < kCategoryCount; ++c) {
            std::vector<std::size_t> members;
            for (std::size_t r = 0; r < ds.row_count(); ++r) {
                if (ds.category_labels[r] == static_cast<int>(c)) members.push_back(r);
            }
            if (members.empty()) continue;
            rng::shuffle(members, gen);
            auto take = static_cast<std::size_t>(
                std::llround(spec.train_fraction * static_cast<double>(members.size())));
            take = std::min(take, members.size());
            train_idx.insert(train_idx.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(take));
            test_idx.insert(test_idx.end(), members.begin() + static_cast<std::ptrdiff_t>(take), members.end());
        }
    } else {
        std::vector<std::size_t> order(ds.row_count());
        std::iota(order.begin(), order.end(), std::size_t{0});
        rng::shuffle(order, gen);
        const auto take = static_cast<std::size_t>(
            spec.train_fraction * static_cast<double>(ds.row_count()));
        train_idx.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take));
        test_idx.assign(order.begin() + static_cast<std::ptrdiff_t>(take), order.end());
    }
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(test_idx.begin(), test_idx.end());
    return {select_rows(ds, train_idx), select_rows(ds, test_idx)};
}

// Ten-feature Gaussian mixture, one unit-variance component per class.
// Component means sit pairwise `separation` apart, two coordinates per class.
inline Dataset generate_synthetic(const SynthSpec& spec) {
    if (spec.row_count == 0) throw ConfigError("row_count must be positive");
    double sum = 0.0;
    for (const double w : spec.class_mix) {
        if (w < 0.0) throw ConfigError("class_mix weights must be nonnegative");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("class_mix weights must sum to 1");
    if (spec.separation < 0.0) throw ConfigError("separation must be nonnegative");

    // Largest-remainder rounding of per-class row targets.
    std::array<std::size_t, kCategoryCount> counts{};
    std::array<double, kCategoryCount> remainders{};
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < kCategoryCount; ++c) {
        const double target = spec.class_mix[c] * static_cast<double>(spec.row_count);
        counts[c] = static_cast<std::size_t>(target);
        remainders[c] = target - static_cast<double>(counts[c]);
        assigned += counts[c];
    }
    while (assigned < spec.row_count) {
        const std::size_t best = static_cast<std::size_t>(
            std::max_element(remainders.begin(), remainders.end()) - remainders.begin());
        ++counts[best];
        remainders[best] = -1.0;
        ++assigned;
    }

    std::mt19937_64 gen(spec.seed);
    std::vector<int> categories;
    categories.reserve(spec.row_count);
    for (std::size_t c = 0; c < kCategoryCount; ++c) {
        categories.insert(categories.end(), counts[c], static_cast<int>(c));
    }
    rng::shuffle(categories, gen);

    Dataset ds;
    ds.features = Matrix(spec.row_count, kFeatureNames.size());
    ds.category_labels = categories;
    ds.binary_labels.resize(spec.row_count);
    const double offset = spec.separation / 2.0;
    for (std::size_t r = 0; r < spec.row_count; ++r) {
        const auto c = static_cast<std::size_t>(categories[r]);
        for (std::size_t f = 0; f < kFeatureNames.size(); ++f) {
            double mean = 0.0;
            if (f == 2 * c || f == 2 * c + 1) mean = offset;
            ds.features(r, f) = mean + rng::gaussian(gen);
        }
        ds.binary_labels[r] = categories[r] == 0 ? 0 : 1;
    }
    return ds;
}

}  // namespace advids
