#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "advids/dataset.hpp"

using namespace advids;

namespace {

std::string temp_path(const std::string& name) {
    static const auto dir = [] {
        auto d = std::filesystem::temp_directory_path() / "advids_dataset_tests";
        std::filesystem::create_directories(d);
        return d;
    }();
    return (dir / name).string();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

std::string canonical_header() {
    std::string h;
    for (const auto name : kFeatureNames) {
        h += std::string(name) + ',';
    }
    return h + "attack,category";
}

// One canonical data row with every feature equal to `fill`.
std::string row(double fill, int attack, const std::string& category) {
    std::string r;
    for (std::size_t i = 0; i < kFeatureNames.size(); ++i) r += format_double(fill) + ',';
    return r + std::to_string(attack) + ',' + category;
}

Dataset random_dataset(std::size_t rows, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    Dataset ds;
    ds.features = Matrix(rows, kFeatureNames.size());
    for (double& v : ds.features.data()) v = rng::uniform(gen, -100.0, 100.0);
    ds.binary_labels.resize(rows);
    ds.category_labels.resize(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const auto c = static_cast<int>(rng::below(gen, kCategoryCount));
        ds.category_labels[r] = c;
        ds.binary_labels[r] = c == 0 ? 0 : 1;
    }
    return ds;
}

}  // namespace

TEST_CASE("load_csv maps categories and the attack flag") {
    const auto path = temp_path("basic.csv");
    write_file(path, canonical_header() + "\n" + row(1.0, 0, "Normal") + "\n" +
                         row(2.0, 1, "DDoS") + "\n" + row(3.0, 1, "Theft") + "\n");
    const Dataset ds = load_csv(path, ColumnSchema::canonical());
    CHECK(ds.row_count() == 3);
    CHECK(ds.binary_labels == std::vector<int>{0, 1, 1});
    CHECK(ds.category_labels == std::vector<int>{0, 2, 4});
    CHECK_FALSE(ds.scaling.has_value());
}

TEST_CASE("load_csv names the missing column") {
    const auto path = temp_path("missing.csv");
    std::string header;
    for (const auto name : kFeatureNames) {
        if (name != "srate") header += std::string(name) + ',';
    }
    header += "attack,category";
    write_file(path, header + "\n");
    CHECK_THROWS_MATCHES(load_csv(path, ColumnSchema::canonical()), SchemaError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("srate")));
}

TEST_CASE("load_csv rejects unknown extra columns") {
    const auto path = temp_path("extra.csv");
    write_file(path, canonical_header() + ",bogus\n");
    CHECK_THROWS_MATCHES(load_csv(path, ColumnSchema::canonical()), SchemaError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("bogus")));
}

TEST_CASE("load_csv reports the row and column of a bad cell") {
    const auto path = temp_path("badcell.csv");
    std::string bad = row(1.0, 1, "DoS");
    bad.replace(0, 1, "oops");  // first feature cell is the seq column
    write_file(path, canonical_header() + "\n" + bad + "\n");
    CHECK_THROWS_MATCHES(
        load_csv(path, ColumnSchema::canonical()), ParseError,
        Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("row 1") &&
                                        Catch::Matchers::ContainsSubstring("seq")));
}

TEST_CASE("load_csv rejects unknown category strings") {
    const auto path = temp_path("badcat.csv");
    write_file(path, canonical_header() + "\n" + row(1.0, 1, "Flood") + "\n");
    CHECK_THROWS_AS(load_csv(path, ColumnSchema::canonical()), ValueError);
}

TEST_CASE("load_csv is header-order insensitive and handles quoting") {
    const auto path = temp_path("botiot.csv");
    // Bot-IoT layout with two columns swapped and a quoted flow identifier.
    write_file(path,
               "proto,pkSeqID,saddr,sport,daddr,dport,seq,stddev,N_IN_Conn_P_SrcIP,min,"
               "state_number,mean,N_IN_Conn_P_DstIP,drate,srate,max,attack,category,subcategory\n"
               "tcp,1,\"192.168.100.1,lan\",80,10.0.0.1,0x0303,7,0.5,10,0.1,3,0.4,4,0,2.5,1.2,"
               "1,DDoS,UDP\n");
    const Dataset ds = load_csv(path, ColumnSchema::bot_iot());
    REQUIRE(ds.row_count() == 1);
    CHECK(ds.features(0, 0) == 7.0);       // seq
    CHECK(ds.features(0, 9) == 1.2);       // max
    CHECK(ds.binary_labels[0] == 1);
    CHECK(ds.category_labels[0] == 2);
}

TEST_CASE("load then dump then load is the identity") {
    const Dataset ds = random_dataset(57, 21);
    const auto path = temp_path("roundtrip.csv");
    dump_csv(ds, path);
    const Dataset back = load_csv(path, ColumnSchema::canonical());
    CHECK(back.features == ds.features);
    CHECK(back.binary_labels == ds.binary_labels);
    CHECK(back.category_labels == ds.category_labels);
}

TEST_CASE("fit_min_max finds the columnwise extrema") {
    Dataset ds;
    ds.features = Matrix::from_rows({{0.0}, {5.0}, {10.0}});
    ds.binary_labels = {0, 1, 1};
    ds.category_labels = {0, 2, 2};
    const auto s = fit_min_max(ds);
    CHECK(s.min[0] == 0.0);
    CHECK(s.max[0] == 10.0);

    Dataset constant;
    constant.features = Matrix::from_rows({{7.0}, {7.0}, {7.0}});
    constant.binary_labels = {0, 0, 0};
    constant.category_labels = {0, 0, 0};
    const auto cs = fit_min_max(constant);
    CHECK(cs.min[0] == 7.0);
    CHECK(cs.max[0] == 7.0);

    CHECK_THROWS_AS(fit_min_max(Dataset{}), EmptyInputError);
}

TEST_CASE("fit_min_max matches an independent linear scan") {
    const Dataset ds = random_dataset(100, 7);
    const auto s = fit_min_max(ds);
    for (std::size_t f = 0; f < ds.feature_count(); ++f) {
        double lo = ds.features(0, f), hi = ds.features(0, f);
        for (std::size_t r = 0; r < ds.row_count(); ++r) {
            lo = std::min(lo, ds.features(r, f));
            hi = std::max(hi, ds.features(r, f));
        }
        CHECK(s.min[f] == lo);
        CHECK(s.max[f] == hi);
    }
}

TEST_CASE("apply_min_max maps to [-1, 1] and zeros constant columns") {
    Dataset ds;
    ds.features = Matrix::from_rows({{0.0, 3.0}, {5.0, 3.0}, {10.0, 3.0}});
    ds.binary_labels = {0, 1, 1};
    ds.category_labels = {0, 2, 2};
    const auto s = fit_min_max(ds);
    const Dataset scaled = apply_min_max(ds, s);
    CHECK(scaled.features(0, 0) == -1.0);
    CHECK(scaled.features(1, 0) == 0.0);
    CHECK(scaled.features(2, 0) == 1.0);
    for (std::size_t r = 0; r < 3; ++r) CHECK(scaled.features(r, 1) == 0.0);
    CHECK(scaled.scaling == s);

    Dataset above;
    above.features = Matrix::from_rows({{15.0, 3.0}});
    above.binary_labels = {1};
    above.category_labels = {3};
    const Dataset out = apply_min_max(above, s);
    CHECK(out.features(0, 0) == 2.0);  // 2*(15-0)/10 - 1, outside [-1,1] and kept

    Dataset wrong;
    wrong.features = Matrix(1, 3);
    wrong.binary_labels = {0};
    wrong.category_labels = {0};
    CHECK_THROWS_AS(apply_min_max(wrong, s), ShapeError);
}

TEST_CASE("scaling is order-preserving, bounded on the fit data, invertible") {
    const Dataset ds = random_dataset(200, 11);
    const auto s = fit_min_max(ds);
    const Dataset scaled = apply_min_max(ds, s);
    for (const double v : scaled.features.data()) {
        CHECK(v >= -1.0);
        CHECK(v <= 1.0);
    }
    std::mt19937_64 gen(3);
    for (int trial = 0; trial < 200; ++trial) {
        const auto a = rng::below(gen, ds.row_count());
        const auto b = rng::below(gen, ds.row_count());
        const auto f = rng::below(gen, ds.feature_count());
        if (ds.features(a, f) <= ds.features(b, f)) {
            CHECK(scaled.features(a, f) <= scaled.features(b, f));
        }
    }
    const Dataset recovered = invert_min_max(scaled, s);
    for (std::size_t i = 0; i < recovered.features.data().size(); ++i) {
        CHECK(recovered.features.data()[i] ==
              Catch::Approx(ds.features.data()[i]).margin(1e-9));
    }
}

TEST_CASE("one_hot builds unit basis rows") {
    const std::vector<int> labels{2};
    const Matrix m = one_hot(labels, 5);
    CHECK(m.row(0)[0] == 0.0);
    CHECK(m.row(0)[2] == 1.0);

    const std::vector<int> pair{0, 4};
    const Matrix p = one_hot(pair, 5);
    CHECK(p(0, 0) == 1.0);
    CHECK(p(1, 4) == 1.0);

    const std::vector<int> bad{5};
    CHECK_THROWS_AS(one_hot(bad, 5), ValueError);
}

TEST_CASE("one_hot round-trips through argmax") {
    std::mt19937_64 gen(17);
    std::vector<int> labels(1000);
    for (auto& l : labels) l = static_cast<int>(rng::below(gen, 5));
    const Matrix m = one_hot(labels, 5);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        std::size_t argmax = 0;
        double ones = 0.0;
        for (std::size_t c = 0; c < m.cols(); ++c) {
            ones += m(r, c);
            if (m(r, c) > m(r, argmax)) argmax = c;
        }
        CHECK(ones == 1.0);
        CHECK(static_cast<int>(argmax) == labels[r]);
    }
}

TEST_CASE("split honors the fraction and is deterministic") {
    const Dataset ds = random_dataset(10, 5);
    const SplitSpec spec{0.8, 42, false};
    const auto [train, test] = split(ds, spec);
    CHECK(train.row_count() == 8);
    CHECK(test.row_count() == 2);

    const auto [train2, test2] = split(ds, spec);
    CHECK(train == train2);
    CHECK(test == test2);

    CHECK_THROWS_AS(split(ds, SplitSpec{1.5, 42, false}), ConfigError);
    CHECK_THROWS_AS(split(ds, SplitSpec{0.0, 42, false}), ConfigError);
}

TEST_CASE("split partitions the rows") {
    Dataset ds = random_dataset(101, 9);
    for (std::size_t r = 0; r < ds.row_count(); ++r) {
        ds.features(r, 0) = static_cast<double>(r);  // row tag
    }
    for (const bool stratified : {false, true}) {
        const auto [train, test] = split(ds, SplitSpec{0.7, 4, stratified});
        std::set<double> seen;
        for (std::size_t r = 0; r < train.row_count(); ++r) seen.insert(train.features(r, 0));
        for (std::size_t r = 0; r < test.row_count(); ++r) {
            CHECK_FALSE(seen.count(test.features(r, 0)));
            seen.insert(test.features(r, 0));
        }
        CHECK(seen.size() == ds.row_count());
    }
}

TEST_CASE("stratified split preserves class proportions") {
    Dataset ds;
    const std::size_t n = 1000;
    ds.features = Matrix(n, 10);
    ds.binary_labels.resize(n);
    ds.category_labels.resize(n);
    for (std::size_t r = 0; r < n; ++r) {
        const bool positive = r < 100;  // 10% positives
        ds.binary_labels[r] = positive ? 1 : 0;
        ds.category_labels[r] = positive ? 2 : 0;
    }
    const auto [train, test] = split(ds, SplitSpec{0.8, 333, true});
    const long long test_pos =
        std::count(test.binary_labels.begin(), test.binary_labels.end(), 1);
    CHECK(test_pos >= 19);
    CHECK(test_pos <= 21);
    CHECK(train.row_count() + test.row_count() == n);
}

TEST_CASE("generate_synthetic honors the class mix") {
    SynthSpec all_normal;
    all_normal.row_count = 100;
    all_normal.class_mix = {1.0, 0.0, 0.0, 0.0, 0.0};
    all_normal.seed = 7;
    const Dataset normals = generate_synthetic(all_normal);
    CHECK(std::count(normals.category_labels.begin(), normals.category_labels.end(), 0) == 100);
    CHECK(std::count(normals.binary_labels.begin(), normals.binary_labels.end(), 0) == 100);

    // Mix proportional to the published category value counts.
    const std::array<double, 5> raw{9543.0, 1821639.0, 38532480.0, 33005194.0, 1587.0};
    SynthSpec table;
    table.row_count = 5000;
    double total = 0.0;
    for (const double v : raw) total += v;
    for (std::size_t c = 0; c < 5; ++c) table.class_mix[c] = raw[c] / total;
    table.seed = 11;
    const Dataset ds = generate_synthetic(table);
    std::array<long long, 5> counts{};
    for (const int c : ds.category_labels) ++counts[static_cast<std::size_t>(c)];
    CHECK(*std::max_element(counts.begin(), counts.end()) == counts[2]);  // DDoS is modal
    for (std::size_t c = 0; c < 5; ++c) {
        const double target = table.class_mix[c] * 5000.0;
        CHECK(std::abs(static_cast<double>(counts[c]) - target) <= 1.0);
    }
}

TEST_CASE("generate_synthetic validates the spec and is deterministic") {
    SynthSpec bad;
    bad.row_count = 10;
    bad.class_mix = {1.5, -0.5, 0.0, 0.0, 0.0};
    CHECK_THROWS_AS(generate_synthetic(bad), ConfigError);

    SynthSpec off;
    off.row_count = 10;
    off.class_mix = {0.5, 0.4, 0.0, 0.0, 0.0};
    CHECK_THROWS_AS(generate_synthetic(off), ConfigError);

    SynthSpec ok;
    ok.row_count = 64;
    ok.class_mix = {0.5, 0.2, 0.1, 0.1, 0.1};
    ok.seed = 99;
    CHECK(generate_synthetic(ok) == generate_synthetic(ok));
}
