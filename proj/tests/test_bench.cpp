#include <doctest.h>

#include <chrono>
#include <cmath>
#include <thread>

#include <json.hpp>

#include "support.hpp"
#include "terrabench/bench.hpp"
#include "terrabench/error.hpp"
#include "terrabench/synth.hpp"

using namespace terrabench;
using namespace std::chrono_literals;

namespace {

ForestModel leaf_model(TerrainLabel label, int n_features = 26) {
    ForestModel m;
    m.n_features = n_features;
    m.max_features = 1;
    DecisionTree t;
    TreeNode n;
    n.counts[static_cast<std::size_t>(to_index(label))] = 3;
    t.nodes.push_back(n);
    m.trees.push_back(t);
    return m;
}

void busy_for(std::chrono::duration<double> d) {
    const auto until = std::chrono::steady_clock::now() + d;
    volatile double sink = 0;
    while (std::chrono::steady_clock::now() < until) {
        for (int i = 0; i < 1000; ++i) sink = sink + std::sqrt(static_cast<double>(i));
    }
}

}  // namespace

TEST_CASE("process accounting") {
    const ProcessUsage u = read_process_usage();
    CHECK(u.cpu_seconds >= 0.0);
    CHECK(u.resident_bytes > 0);
    CHECK(total_memory_bytes() > u.resident_bytes);
    CHECK(logical_cores() >= 1);
    CHECK_FALSE(host_descriptor().empty());
}

TEST_CASE("sampler emits one sample per period") {
    ResourceSampler sampler(100ms);
    REQUIRE(sampler.available());
    std::this_thread::sleep_for(1s);
    const auto samples = sampler.stop();
    CHECK(samples.size() >= 8);
    CHECK(samples.size() <= 12);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        CHECK(samples[i].cpu_load >= 0.0);
        CHECK(samples[i].cpu_load <= 0.05);
        CHECK(samples[i].mem_usage > 0.0);
        CHECK(samples[i].mem_usage < 1.0);
        if (i > 0) CHECK(samples[i].t > samples[i - 1].t);
    }
}

TEST_CASE("busy single thread reads one core") {
    ResourceSampler sampler(100ms);
    busy_for(1s);
    const auto samples = sampler.stop();
    REQUIRE(samples.size() >= 5);
    double mean = 0;
    for (const auto& s : samples) mean += s.cpu_load;
    mean /= static_cast<double>(samples.size());
    CHECK(std::abs(mean - 1.0 / logical_cores()) <= 0.1);
}

TEST_CASE("sample_resources stops on request") {
    std::stop_source src;
    std::jthread stopper([&] {
        std::this_thread::sleep_for(350ms);
        src.request_stop();
    });
    const auto samples = sample_resources(100ms, src.get_token());
    CHECK(samples.size() >= 2);
    CHECK(samples.size() <= 5);
    CHECK_THROWS_AS(sample_resources(0s, src.get_token()), Error);
}

TEST_CASE("BenchConfig validation") {
    BenchConfig c;
    CHECK_NOTHROW(c.validate());
    c.n_images = 0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = {};
    c.repetitions = 0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = {};
    c.sample_period = 0.0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = {};
    c.resolutions = {16};
    CHECK_THROWS_AS(c.validate(), Error);
    c = {};
    c.crop_side = 256;
    c.resolutions = {512};
    CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("time_pipeline") {
    const std::vector<GrayImage> images(10, GrayImage::filled(32, 32, 60.0));
    const ForestModel m = leaf_model(TerrainLabel::Mulch);

    const RunStats s = time_pipeline(images, m, LbpParams{});
    CHECK(s.total_wall > 0.0);
    CHECK(s.per_image_mean == s.total_wall / 10.0);
    REQUIRE(s.predictions.size() == 10);
    for (auto p : s.predictions) CHECK(p == TerrainLabel::Mulch);
    CHECK_FALSE(s.resource_samples.empty());

    // Timing sanity between identical workloads.
    const std::vector<GrayImage> work(20, gen_texture(TerrainLabel::Asphalt, 96, 1));
    const RunStats a = time_pipeline(work, m, LbpParams{});
    const RunStats b = time_pipeline(work, m, LbpParams{});
    CHECK(a.per_image_mean < 3.0 * b.per_image_mean);
    CHECK(b.per_image_mean < 3.0 * a.per_image_mean);

    const RunStats c = time_pipeline_cycled(images, 25, m, LbpParams{});
    CHECK(c.predictions.size() == 25);
    CHECK(c.per_image_mean == c.total_wall / 25.0);

    try {
        time_pipeline(images, leaf_model(TerrainLabel::Mulch, 10), LbpParams{});
        FAIL("expected shape error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Shape);
    }

    std::vector<GrayImage> mixed = images;
    mixed.insert(mixed.begin() + 3, GrayImage::filled(12, 12, 1.0));
    try {
        time_pipeline(mixed, m, LbpParams{});
        FAIL("expected partial-report error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::PartialReport);
    }
}

TEST_CASE("run_benchmark on in-memory sources") {
    std::vector<GrayImage> sources;
    for (int i = 0; i < 4; ++i) sources.push_back(gen_texture(label_from_index(i), 512, static_cast<std::uint64_t>(i)));
    std::map<int, ForestModel> models{{128, leaf_model(TerrainLabel::Tile)}, {512, leaf_model(TerrainLabel::Tile)}};

    BenchConfig cfg;
    cfg.resolutions = {128, 512};
    cfg.repetitions = 2;
    cfg.n_images = 50;
    cfg.crop_side = 512;
    cfg.image_pool = 4;

    const BenchmarkReport r = run_benchmark(cfg, sources, models);
    REQUIRE(r.rows.size() == 2);
    CHECK(r.rows[0].resolution == 128);
    CHECK(r.rows[1].avg_runtime_s > r.rows[0].avg_runtime_s);
    for (const auto& row : r.rows) {
        CHECK(row.fps == 50.0 / row.avg_runtime_s);
        REQUIRE(row.run_runtimes.size() == 2);
        const double mean = (row.run_runtimes[0] + row.run_runtimes[1]) / 2.0;
        CHECK(std::abs(row.avg_runtime_s - mean) <= 1e-12);
        REQUIRE(row.avg_cpu.has_value());
        CHECK(*row.avg_cpu >= 0.0);
        CHECK(*row.avg_cpu <= 1.0);
        REQUIRE(row.avg_mem.has_value());
        CHECK(*row.avg_mem > 0.0);
    }

    const auto j = nlohmann::json::parse(bench_to_json(r));
    CHECK(j.contains("host"));
    CHECK(j.contains("config"));
    REQUIRE(j.at("rows").size() == 2);
    for (const char* key : {"resolution", "avg_runtime_s", "fps", "avg_cpu", "avg_mem"}) CHECK(j["rows"][0].contains(key));
    CHECK(bench_to_csv(r).rfind("resolution,avg_runtime_s,fps,avg_cpu,avg_mem\n", 0) == 0);
    CHECK(bench_to_text(r).find("512") != std::string::npos);

    SUBCASE("missing model fails before timing") {
        models.erase(512);
        const auto t0 = std::chrono::steady_clock::now();
        try {
            run_benchmark(cfg, sources, models);
            FAIL("expected config error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::Config);
        }
        CHECK(std::chrono::steady_clock::now() - t0 < 1s);
    }
}

TEST_CASE("load_models_dir") {
    tbtest::TempDir dir("models");
    save_model(leaf_model(TerrainLabel::Carpet), dir / "model_64.json");
    const std::vector<int> ok{64};
    const auto m = load_models_dir(dir.path(), ok);
    REQUIRE(m.count(64) == 1);
    CHECK(m.at(64).n_features == 26);
    const std::vector<int> missing{64, 128};
    CHECK_THROWS_AS(load_models_dir(dir.path(), missing), Error);
}
