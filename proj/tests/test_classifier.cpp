#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <vector>

#include <json.hpp>

#include "oracles.hpp"
#include "support.hpp"
#include "terrabench/error.hpp"
#include "terrabench/forest.hpp"

using namespace terrabench;

namespace {

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected a terrabench::Error");
    return ErrorKind::Io;
}

std::vector<LabeledSample> separable_fixture(std::uint64_t seed, int per_class = 20, int n_features = 26) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<LabeledSample> out;
    for (int c = 0; c < 2; ++c) {
        for (int i = 0; i < per_class; ++i) {
            LabeledSample s{std::vector<double>(static_cast<std::size_t>(n_features)), label_from_index(c)};
            for (auto& v : s.features) v = u(rng);
            s.features[0] = c == 0 ? 0.05 + 0.4 * u(rng) : 0.55 + 0.4 * u(rng);
            out.push_back(std::move(s));
        }
    }
    return out;
}

ForestModel leaf_forest(std::vector<ClassCounts> leaves, int n_features = 3) {
    ForestModel m;
    m.n_features = n_features;
    m.max_features = 1;
    for (const auto& c : leaves) {
        DecisionTree t;
        TreeNode n;
        n.counts = c;
        t.nodes.push_back(n);
        m.trees.push_back(std::move(t));
    }
    return m;
}

}  // namespace

TEST_CASE("labels") {
    CHECK(kNumClasses == 6);
    CHECK(label_name(TerrainLabel::Asphalt) == "asphalt");
    CHECK(label_name(TerrainLabel::Tile) == "tile");
    for (int i = 0; i < kNumClasses; ++i) {
        CHECK(to_index(label_from_index(i)) == i);
        CHECK(label_from_name(label_name(label_from_index(i))) == label_from_index(i));
    }
    CHECK_FALSE(label_from_name("gravel").has_value());
    CHECK_THROWS_AS(label_from_index(6), Error);
}

TEST_CASE("pure dataset yields single-leaf trees") {
    std::vector<LabeledSample> data;
    std::mt19937_64 rng(2);
    for (int i = 0; i < 15; ++i) data.push_back({{double(rng() % 100), double(rng() % 100)}, TerrainLabel::Grass});
    const ForestModel m = train_forest(data, 10, 4);
    CHECK(m.trees.size() == 10);
    for (const auto& t : m.trees) CHECK(t.nodes.size() == 1);
    for (int i = 0; i < 20; ++i) {
        const auto p = predict(m, std::vector<double>{double(rng() % 1000) - 500, double(rng() % 7)});
        CHECK(p.label == TerrainLabel::Grass);
        CHECK(p.probabilities[3] == 1.0);
    }
}

TEST_CASE("separable two-class fixture is fit exactly") {
    const auto data = separable_fixture(9);
    const ForestModel m = train_forest(data, 100, 42);
    CHECK(m.n_features == 26);
    CHECK(m.max_features == 5);
    for (const auto& s : data) CHECK(predict(m, s.features).label == s.label);

    // A constant column adds no usable split; the fit stays exact.
    auto padded = data;
    for (auto& s : padded) s.features.push_back(0.25);
    const ForestModel mp = train_forest(padded, 100, 42);
    for (const auto& s : padded) CHECK(predict(mp, s.features).label == s.label);
}

TEST_CASE("training is deterministic and thread-count independent") {
    const auto data = separable_fixture(10, 30);
    TrainOptions a;
    a.n_trees = 25;
    a.seed = 7;
    a.threads = 1;
    TrainOptions b = a;
    b.threads = 4;
    const std::string ja = model_to_json(train_forest(data, a));
    CHECK(ja == model_to_json(train_forest(data, a)));
    CHECK(ja == model_to_json(train_forest(data, b)));
    TrainOptions c = a;
    c.seed = 8;
    CHECK(ja != model_to_json(train_forest(data, c)));
}

TEST_CASE("training input validation") {
    CHECK(kind_of([] { train_forest(std::vector<LabeledSample>{}, 5, 0); }) == ErrorKind::EmptyDataset);
    std::vector<LabeledSample> ragged{{{1.0, 2.0}, TerrainLabel::Asphalt}, {{1.0}, TerrainLabel::Carpet}};
    CHECK(kind_of([&] { train_forest(ragged, 5, 0); }) == ErrorKind::Shape);
    std::vector<LabeledSample> ok{{{1.0, 2.0}, TerrainLabel::Asphalt}, {{3.0, 1.0}, TerrainLabel::Carpet}};
    CHECK(kind_of([&] { train_forest(ok, 0, 0); }) == ErrorKind::Config);
    TrainOptions bad;
    bad.max_features = 3;
    CHECK(kind_of([&] { train_forest(ok, bad); }) == ErrorKind::Config);
}

TEST_CASE("predict on hand-built forests") {
    SUBCASE("single leaf") {
        const auto m = leaf_forest({{0, 5, 0, 0, 0, 0}});
        const auto p = predict(m, std::vector<double>{0.1, 0.2, 0.3});
        CHECK(p.label == TerrainLabel::Carpet);
        CHECK(p.probabilities == std::array<double, 6>{0, 1, 0, 0, 0, 0});
    }
    SUBCASE("tie resolves to the lowest ordinal") {
        const auto m = leaf_forest({{1, 0, 0, 0, 0, 0}, {0, 1, 0, 0, 0, 0}});
        const auto p = predict(m, std::vector<double>{0, 0, 0});
        CHECK(p.label == TerrainLabel::Asphalt);
        CHECK(p.probabilities == std::array<double, 6>{0.5, 0.5, 0, 0, 0, 0});
    }
    SUBCASE("feature length mismatch") {
        const auto m = leaf_forest({{1, 0, 0, 0, 0, 0}});
        CHECK(kind_of([&] { predict(m, std::vector<double>{1.0}); }) == ErrorKind::Shape);
    }
    SUBCASE("depth-2 trees traced by hand") {
        const std::string text = R"({"schema_version":1,"n_classes":6,"n_features":2,"n_trees":2,"seed":0,
            "max_features":1,"trees":[
              {"feat":0,"thr":0.5,"l":{"feat":1,"thr":0.2,"l":{"leaf":[3,0,0,0,0,0]},"r":{"leaf":[0,0,0,0,0,2]}},
               "r":{"leaf":[0,1,1,0,0,0]}},
              {"feat":1,"thr":0.7,"l":{"leaf":[0,0,0,0,0,4]},"r":{"leaf":[1,0,0,0,0,0]}}]})";
        const ForestModel m = model_from_json(text);
        CHECK(m.trees[0].depth() == 2);

        auto p = predict(m, std::vector<double>{0.3, 0.1});
        CHECK(p.label == TerrainLabel::Asphalt);
        CHECK(p.probabilities == std::array<double, 6>{0.5, 0, 0, 0, 0, 0.5});

        p = predict(m, std::vector<double>{0.6, 0.9});
        CHECK(p.label == TerrainLabel::Asphalt);
        CHECK(p.probabilities == std::array<double, 6>{0.5, 0.25, 0.25, 0, 0, 0});

        // Equality with the threshold goes left.
        p = predict(m, std::vector<double>{0.5, 0.5});
        CHECK(p.label == TerrainLabel::Tile);
        CHECK(p.probabilities[5] == 1.0);
    }
}

TEST_CASE("probabilities form a distribution") {
    const auto data = separable_fixture(12, 25, 6);
    auto mixed = data;
    std::mt19937_64 rng(1);
    for (auto& s : mixed) s.label = label_from_index(static_cast<int>(rng() % 6));
    const ForestModel m = train_forest(mixed, 30, 3);
    for (int i = 0; i < 50; ++i) {
        std::vector<double> x(6);
        for (auto& v : x) v = static_cast<double>(rng() % 1000) / 1000.0;
        const auto p = predict(m, x);
        double sum = 0;
        for (double v : p.probabilities) {
            CHECK(v >= 0.0);
            sum += v;
        }
        CHECK(std::abs(sum - 1.0) < 1e-9);
        CHECK(p.probabilities[static_cast<std::size_t>(to_index(p.label))] ==
              *std::max_element(p.probabilities.begin(), p.probabilities.end()));
    }
}

TEST_CASE("root split agrees with exhaustive Gini search") {
    std::mt19937_64 rng(2024);
    int splits = 0;
    for (int trial = 0; trial < 400; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 7);
        const int classes = 2 + static_cast<int>(rng() % 2);
        std::vector<LabeledSample> data;
        for (int i = 0; i < n; ++i) {
            // Coarse values so that ties between candidate splits are common.
            data.push_back({{static_cast<double>(rng() % 5), static_cast<double>(rng() % 4) / 2.0},
                            label_from_index(static_cast<int>(rng() % classes))});
        }
        TrainOptions opts;
        opts.n_trees = 1;
        opts.seed = static_cast<std::uint64_t>(trial);
        opts.max_features = 2;
        opts.bootstrap = false;
        const ForestModel m = train_forest(data, opts);
        const TreeNode& root = m.trees.front().nodes.front();
        const tbtest::OracleSplit want = tbtest::oracle_root_split(data);
        INFO("trial " << trial);
        REQUIRE(root.is_leaf() == want.leaf);
        if (!want.leaf) {
            ++splits;
            CHECK(root.feature == want.feature);
            CHECK(root.threshold == want.threshold);
        }
    }
    CHECK(splits > 100);
}

TEST_CASE("model persistence") {
    tbtest::TempDir dir("model");
    const auto data = separable_fixture(5, 20, 26);
    auto noisy = data;
    std::mt19937_64 rng(77);
    for (std::size_t i = 0; i < noisy.size(); i += 3) noisy[i].label = label_from_index(static_cast<int>(rng() % 6));
    const ForestModel m = train_forest(noisy, 20, 99);

    SUBCASE("round trip preserves predictions") {
        save_model(m, dir / "m.json");
        const ForestModel back = load_model(dir / "m.json");
        CHECK(model_to_json(back) == model_to_json(m));
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int i = 0; i < 100; ++i) {
            std::vector<double> x(26);
            for (auto& v : x) v = u(rng);
            const auto a = predict(m, x);
            const auto b = predict(back, x);
            CHECK(a.label == b.label);
            CHECK(a.probabilities == b.probabilities);
        }
    }

    SUBCASE("schema fields") {
        const auto j = nlohmann::json::parse(model_to_json(m));
        CHECK(j.at("schema_version") == 1);
        CHECK(j.at("n_classes") == 6);
        CHECK(j.at("n_features") == 26);
        CHECK(j.at("n_trees") == 20);
        CHECK(j.at("seed") == 99);
        CHECK(j.at("max_features") == 5);
        CHECK(j.at("trees").size() == 20);
    }

    SUBCASE("truncated file") {
        const std::string text = model_to_json(m);
        std::ofstream(dir / "cut.json") << text.substr(0, text.size() / 2);
        CHECK(kind_of([&] { load_model(dir / "cut.json"); }) == ErrorKind::ModelMalformed);
        CHECK(kind_of([] { model_from_json(""); }) == ErrorKind::ModelMalformed);
        CHECK(kind_of([] { model_from_json(R"({"schema_version":1})"); }) == ErrorKind::ModelMalformed);
    }

    SUBCASE("future schema version") {
        auto j = nlohmann::json::parse(model_to_json(m));
        j["schema_version"] = 999;
        CHECK(kind_of([&] { model_from_json(j.dump()); }) == ErrorKind::ModelVersion);
    }

    SUBCASE("out-of-range feature index") {
        const std::string text = R"({"schema_version":1,"n_classes":6,"n_features":2,"n_trees":1,"seed":0,
            "max_features":1,"trees":[{"feat":2,"thr":0.5,"l":{"leaf":[1,0,0,0,0,0]},"r":{"leaf":[0,1,0,0,0,0]}}]})";
        CHECK(kind_of([&] { model_from_json(text); }) == ErrorKind::ModelMalformed);
    }
}
