#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>
#include <sys/wait.h>

#include "cli.hpp"
#include "support.hpp"
#include "terrabench/forest.hpp"
#include "terrabench/image.hpp"
#include "terrabench/keyframe.hpp"

using namespace terrabench;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "terrabench");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

std::size_t count_pngs(const fs::path& root) {
    std::size_t n = 0;
    for (const auto& de : fs::recursive_directory_iterator(root)) n += de.path().extension() == ".png";
    return n;
}

ForestModel leaf_model(TerrainLabel label) {
    ForestModel m;
    m.n_features = 26;
    m.max_features = 5;
    DecisionTree t;
    TreeNode n;
    n.counts[static_cast<std::size_t>(to_index(label))] = 4;
    t.nodes.push_back(n);
    m.trees.push_back(t);
    return m;
}

// One small corpus shared by the data-driven cases.
const fs::path& corpus() {
    static tbtest::TempDir dir("cli_corpus");
    static const bool made = [] {
        const auto r = run_cli({"--seed", "5", "synth", "--counts", "4", "--side", "64", "--out", (dir / "data").string()});
        REQUIRE(r.code == 0);
        return true;
    }();
    (void)made;
    static const fs::path root = dir / "data";
    return root;
}

}  // namespace

TEST_CASE("usage errors exit 2 with one diagnostic line") {
    for (const auto& args : std::vector<std::vector<std::string>>{
             {},
             {"synth", "--counts", "3"},
             {"synth", "--counts", "1,2", "--out", "x"},
             {"nonsense"},
             {"train"},
             {"eval", "--data", "/definitely/not/here"},
             {"--format", "xml", "keyframe", "--imu", "a", "--frames", "b"},
             {"train", "--data", "d", "--trees", "0"},
         }) {
        const Result r = run_cli(args);
        INFO(r.err);
        CHECK(r.code == cli::kExitUsage);
        CHECK(count_lines(r.err) == 1);
    }
    const Result help = run_cli({"--help"});
    CHECK(help.code == 0);
    CHECK(help.out.find("synth") != std::string::npos);
}

TEST_CASE("synth writes the class layout") {
    tbtest::TempDir dir("cli_synth");
    const Result r = run_cli({"synth", "--counts", "10", "--side", "128", "--out", (dir / "d").string()});
    REQUIRE(r.code == 0);
    CHECK(count_pngs(dir / "d") == 60);
    CHECK(json::parse(r.out).at("files") == 60);

    const Result six = run_cli({"synth", "--counts", "1,0,2,0,0,3", "--side", "32", "--out", (dir / "e").string()});
    REQUIRE(six.code == 0);
    CHECK(count_pngs(dir / "e") == 6);
}

TEST_CASE("train, predict and the error paths around them") {
    tbtest::TempDir dir("cli_train");
    const std::string model = (dir / "m.json").string();

    Result r = run_cli({"train", "--data", corpus().string(), "--resolution", "32", "--crop", "64", "--trees", "8",
                        "--out", model});
    REQUIRE(r.code == 0);
    CHECK(fs::exists(model));
    CHECK(load_model(model).trees.size() == 8);

    SUBCASE("missing parent directories are created") {
        const fs::path nested = dir / "models" / "deep" / "m.json";
        r = run_cli({"train", "--data", corpus().string(), "--resolution", "32", "--crop", "64", "--trees", "2",
                     "--out", nested.string()});
        CHECK(r.code == 0);
        CHECK(fs::exists(nested));
    }

    SUBCASE("corrupt image is skipped with a warning") {
        tbtest::TempDir bad("cli_bad");
        fs::copy(corpus(), bad / "data", fs::copy_options::recursive);
        std::ofstream(bad / "data" / "grass" / "corrupt.png") << "\x89PNG broken";
        r = run_cli({"train", "--data", (bad / "data").string(), "--resolution", "32", "--crop", "64", "--trees", "4",
                     "--out", (bad / "m.json").string()});
        CHECK(r.code == 0);
        CHECK(r.err.find("corrupt.png") != std::string::npos);
        CHECK(json::parse(r.out).at("skipped") == 1);
    }

    SUBCASE("empty class directory is a data error") {
        tbtest::TempDir bad("cli_empty");
        fs::copy(corpus(), bad / "data", fs::copy_options::recursive);
        for (const auto& de : fs::directory_iterator(bad / "data" / "mulch")) fs::remove(de.path());
        r = run_cli({"train", "--data", (bad / "data").string(), "--resolution", "32", "--crop", "64",
                     "--out", (bad / "m.json").string()});
        CHECK(r.code == cli::kExitFailure);
        CHECK(count_lines(r.err) == 1);
    }

    SUBCASE("predict a constant image with a single-leaf model") {
        save_model(leaf_model(TerrainLabel::Cobblestone), dir / "leaf.json");
        save_png(GrayImage::filled(40, 40, 128.0), dir / "flat.png");
        r = run_cli({"predict", "--model", (dir / "leaf.json").string(), "--image", (dir / "flat.png").string()});
        REQUIRE(r.code == 0);
        const json j = json::parse(r.out);
        CHECK(j.at("label") == "cobblestone");
        CHECK(j.at("probabilities").at("cobblestone") == 1.0);
    }

    SUBCASE("feature-count mismatch") {
        save_png(GrayImage::filled(40, 40, 128.0), dir / "flat.png");
        r = run_cli({"predict", "--model", model, "--image", (dir / "flat.png").string(), "--neighbors", "8",
                     "--radius", "1"});
        CHECK(r.code == cli::kExitFailure);
        CHECK(r.err.find("shape") != std::string::npos);
    }

    SUBCASE("batch mode prints one CSV row per file") {
        r = run_cli({"predict", "--model", model, "--image", corpus().string(), "--resolution", "32", "--crop", "64"});
        REQUIRE(r.code == 0);
        CHECK(count_lines(r.out) == 1 + count_pngs(corpus()));
        CHECK(r.out.rfind("path,label,", 0) == 0);
    }
}

TEST_CASE("eval, bench and keyframe wiring") {
    tbtest::TempDir dir("cli_wiring");

    Result r = run_cli({"--seed", "2", "eval", "--data", corpus().string(), "--resolutions", "32,64", "--crop", "64",
                        "--trees", "6"});
    REQUIRE(r.code == 0);
    json j = json::parse(r.out);
    CHECK(j.at("split_seed") == 2);
    CHECK(j.at("rows").size() == 2);

    r = run_cli({"eval", "--data", corpus().string(), "--resolutions", "32", "--crop", "64", "--trees", "6",
                 "--split-seed", "9", "--format", "csv"});
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind("resolution,accuracy", 0) == 0);

    fs::create_directories(dir / "models");
    for (const char* res : {"32", "64"}) {
        REQUIRE(run_cli({"train", "--data", corpus().string(), "--resolution", res, "--crop", "64", "--trees", "4",
                         "--out", (dir / "models" / (std::string("model_") + res + ".json")).string()})
                    .code == 0);
    }
    r = run_cli({"bench", "--data", corpus().string(), "--models-dir", (dir / "models").string(), "--resolutions",
                 "32,64", "--crop", "64", "--reps", "2", "--n", "20", "--period-ms", "20"});
    REQUIRE(r.code == 0);
    j = json::parse(r.out);
    REQUIRE(j.at("rows").size() == 2);
    for (const auto& row : j["rows"])
        CHECK(row.at("fps").get<double>() == 20.0 / row.at("avg_runtime_s").get<double>());

    r = run_cli({"bench", "--data", corpus().string(), "--models-dir", (dir / "models").string(), "--resolutions",
                 "32,48", "--crop", "64", "--reps", "1", "--n", "5"});
    CHECK(r.code == cli::kExitFailure);
    CHECK(r.err.find("config") != std::string::npos);

    const GaitTrace tr = simulate_gait(4, 1.0, 3);
    write_imu_csv(tr.imu, dir / "imu.csv");
    write_frames_csv(tr.frames, dir / "frames.csv");
    r = run_cli({"keyframe", "--imu", (dir / "imu.csv").string(), "--frames", (dir / "frames.csv").string()});
    REQUIRE(r.code == 0);
    j = json::parse(r.out);
    CHECK(j.at("windows").size() == 4);
    CHECK(j.at("selected").size() == 4);
    CHECK(j.at("policy").at("epsilon") == 1.0);

    r = run_cli({"keyframe", "--imu", (dir / "imu.csv").string(), "--frames", (dir / "frames.csv").string(),
                 "--epsilon", "0.01", "--min-duration", "5"});
    REQUIRE(r.code == 0);
    CHECK(json::parse(r.out).at("windows").empty());

    r = run_cli({"--out", (dir / "sim").string(), "simulate", "--cycles", "2"});
    REQUIRE(r.code == 0);
    CHECK(read_windows_csv(dir / "sim" / "stance.csv").size() == 2);
}

TEST_CASE("seed sources: flag, environment and config file") {
    tbtest::TempDir dir("cli_seed");
    const GaitTrace tr = simulate_gait(2, 1.0, 0);
    const auto sim = [&](std::vector<std::string> extra) {
        std::vector<std::string> args = {"--out", (dir / "s").string()};
        args.insert(args.end(), extra.begin(), extra.end());
        args.insert(args.end(), {"simulate", "--cycles", "2"});
        REQUIRE(run_cli(args).code == 0);
        return slurp(dir / "s" / "imu.csv");
    };

    const std::string s7 = sim({"--seed", "7"});
    const std::string s8 = sim({"--seed", "8"});
    CHECK(s7 != s8);

    ::setenv("TERRABENCH_SEED", "7", 1);
    CHECK(sim({}) == s7);
    CHECK(sim({"--seed", "8"}) == s8);
    ::unsetenv("TERRABENCH_SEED");

    std::ofstream(dir / "cfg.ini") << "seed=8\n";
    CHECK(sim({"--config", (dir / "cfg.ini").string()}) == s8);
}

TEST_CASE("installed binary reports exit codes") {
    const std::string bin = TERRABENCH_CLI_PATH;
    int status = std::system((bin + " --help > /dev/null").c_str());
    CHECK(WEXITSTATUS(status) == 0);
    status = std::system((bin + " synth > /dev/null 2>&1").c_str());
    CHECK(WEXITSTATUS(status) == 2);
    status = std::system((bin + " keyframe --imu /dev/null --frames /dev/null > /dev/null 2>&1").c_str());
    CHECK(WEXITSTATUS(status) != 0);
}
