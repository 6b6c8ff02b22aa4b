#include "cli.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "terrabench/bench.hpp"
#include "terrabench/error.hpp"
#include "terrabench/eval.hpp"
#include "terrabench/forest.hpp"
#include "terrabench/keyframe.hpp"
#include "terrabench/lbp.hpp"
#include "terrabench/synth.hpp"

namespace terrabench::cli {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

/// Bad flag values discovered after CLI11 parsing; reported as usage errors.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Format { Json, Text, Csv };

struct GlobalOptions {
    std::uint64_t seed = 0;
    std::optional<std::string> out;
    std::optional<std::string> format;

    Format format_or(Format fallback) const {
        if (!format) return fallback;
        if (*format == "text") return Format::Text;
        if (*format == "csv") return Format::Csv;
        return Format::Json;
    }
};

void emit(const std::string& text, const std::optional<std::string>& path, std::ostream& out) {
    if (!path) {
        out << text;
        out.flush();
        return;
    }
    std::ofstream f(*path, std::ios::binary);
    if (!f) throw Error(ErrorKind::Io, "cannot write " + *path);
    f << text;
}

ClassCountsProfile parse_counts(const std::string& spec) {
    ClassCountsProfile counts{};
    std::vector<int> values;
    std::stringstream ss(spec);
    for (std::string item; std::getline(ss, item, ',');) {
        try {
            std::size_t used = 0;
            const int v = std::stoi(item, &used);
            if (used != item.size() || v < 0) throw std::invalid_argument(item);
            values.push_back(v);
        } catch (const std::exception&) {
            throw UsageError("--counts: invalid count \"" + item + "\"");
        }
    }
    if (values.size() == 1) {
        counts.fill(values[0]);
    } else if (values.size() == kNumClasses) {
        std::copy(values.begin(), values.end(), counts.begin());
    } else {
        throw UsageError("--counts takes one value or six comma-separated values");
    }
    return counts;
}

std::string lower_label(TerrainLabel l) { return std::string(label_name(l)); }

// --- synth ------------------------------------------------------------------------

struct SynthArgs {
    std::string counts = "10";
    bool field_profile = false;
    int side = 1024;
    unsigned threads = 0;
};

int cmd_synth(const SynthArgs& a, const GlobalOptions& g, std::ostream& out) {
    if (!g.out) throw UsageError("synth requires --out <directory>");
    const ClassCountsProfile counts = a.field_profile ? kFieldProfile : parse_counts(a.counts);
    const auto manifest = gen_corpus(counts, a.side, g.seed, *g.out, a.threads);

    ordered_json j;
    j["root"] = *g.out;
    j["side"] = a.side;
    j["seed"] = g.seed;
    auto& c = j["counts"];
    for (TerrainLabel l : kAllLabels) c[lower_label(l)] = counts[static_cast<std::size_t>(to_index(l))];
    j["files"] = manifest.size();
    j["manifest"] = (fs::path(*g.out) / "manifest.csv").string();
    switch (g.format_or(Format::Json)) {
        case Format::Json: out << j.dump(2) << "\n"; break;
        case Format::Csv: out << "root,side,seed,files\n" << *g.out << ',' << a.side << ',' << g.seed << ',' << manifest.size() << "\n"; break;
        case Format::Text: out << "wrote " << manifest.size() << " images to " << *g.out << "\n"; break;
    }
    return kExitOk;
}

// --- train ------------------------------------------------------------------------

struct TrainArgs {
    std::string data;
    int resolution = 512;
    int crop = 1024;
    int trees = 100;
    int neighbors = 24;
    double radius = 8.0;
    unsigned threads = 0;
};

void warn_skipped(const std::vector<SkippedFile>& skipped, std::ostream& err) {
    for (const auto& s : skipped) err << "terrabench: warning: skipped " << s.path.string() << ": " << s.reason << "\n";
}

int cmd_train(const TrainArgs& a, const GlobalOptions& g, std::ostream& out, std::ostream& err) {
    const LbpParams lbp{a.neighbors, a.radius};
    std::vector<SkippedFile> skipped;
    const auto samples = featurize_dataset(a.data, a.crop, a.resolution, lbp, &skipped, a.threads);
    warn_skipped(skipped, err);

    TrainOptions opts;
    opts.n_trees = a.trees;
    opts.seed = g.seed;
    opts.threads = a.threads;
    const ForestModel model = train_forest(samples, opts);
    const std::string path = g.out.value_or("model_" + std::to_string(a.resolution) + ".json");
    if (const fs::path parent = fs::path(path).parent_path(); !parent.empty()) {
        std::error_code ec;
        fs::create_directories(parent, ec);
    }
    save_model(model, path);

    ordered_json j;
    j["model"] = path;
    j["resolution"] = a.resolution;
    j["samples"] = samples.size();
    j["skipped"] = skipped.size();
    j["trees"] = a.trees;
    j["seed"] = g.seed;
    switch (g.format_or(Format::Json)) {
        case Format::Json: out << j.dump(2) << "\n"; break;
        case Format::Csv: out << "model,resolution,samples,skipped\n" << path << ',' << a.resolution << ',' << samples.size() << ',' << skipped.size() << "\n"; break;
        case Format::Text: out << "trained " << a.trees << " trees on " << samples.size() << " images -> " << path << "\n"; break;
    }
    return kExitOk;
}

// --- predict ----------------------------------------------------------------------

struct PredictArgs {
    std::string model;
    std::string image;
    int resolution = 0;  // 0: use the image as-is
    int crop = 0;        // 0: largest centred square
    int neighbors = 24;
    double radius = 8.0;
};

Prediction predict_file(const ForestModel& model, const fs::path& path, const PredictArgs& a) {
    GrayImage img = load_gray(path);
    if (a.resolution > 0 || a.crop > 0) {
        const int side = a.crop > 0 ? a.crop : std::min(img.width(), img.height());
        img = center_crop(img, side);
        if (a.resolution > 0) img = resize_bilinear(img, a.resolution, a.resolution);
    }
    return predict(model, lbp_histogram(img, LbpParams{a.neighbors, a.radius}).bins);
}

int cmd_predict(const PredictArgs& a, const GlobalOptions& g, std::ostream& out, std::ostream& err) {
    const ForestModel model = load_model(a.model);
    if (model.n_features != a.neighbors + 2) {
        throw Error(ErrorKind::Shape, "model has " + std::to_string(model.n_features) + " features but LBP with " +
                                          std::to_string(a.neighbors) + " neighbours yields " +
                                          std::to_string(a.neighbors + 2));
    }

    std::vector<fs::path> files;
    const bool batch = fs::is_directory(a.image);
    if (batch) {
        for (const auto& de : fs::recursive_directory_iterator(a.image)) {
            if (!de.is_regular_file()) continue;
            std::string ext = de.path().extension().string();
            std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
            if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") files.push_back(de.path());
        }
        std::sort(files.begin(), files.end());
    } else {
        files.push_back(a.image);
    }

    std::vector<std::pair<fs::path, Prediction>> results;
    for (const auto& f : files) {
        if (!batch) {
            results.emplace_back(f, predict_file(model, f, a));
            continue;
        }
        try {
            results.emplace_back(f, predict_file(model, f, a));
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::Decode) throw;
            err << "terrabench: warning: skipped " << f.string() << ": " << e.what() << "\n";
        }
    }

    std::ostringstream os;
    const Format fmt = g.format_or(batch ? Format::Csv : Format::Json);
    if (fmt == Format::Csv) {
        os << "path,label";
        for (TerrainLabel l : kAllLabels) os << ",p_" << label_name(l);
        os << "\n" << std::setprecision(17);
        for (const auto& [path, p] : results) {
            os << path.string() << ',' << label_name(p.label);
            for (double v : p.probabilities) os << ',' << v;
            os << "\n";
        }
    } else if (fmt == Format::Text) {
        for (const auto& [path, p] : results) {
            os << path.string() << ": " << label_name(p.label);
            for (std::size_t k = 0; k < kNumClasses; ++k) {
                os << ' ' << label_name(kAllLabels[k]) << '=' << std::fixed << std::setprecision(3) << p.probabilities[k];
            }
            os << "\n";
        }
    } else {
        auto row = [](const fs::path& path, const Prediction& p) {
            ordered_json j;
            j["image"] = path.string();
            j["label"] = lower_label(p.label);
            auto& probs = j["probabilities"];
            for (std::size_t k = 0; k < kNumClasses; ++k) probs[lower_label(kAllLabels[k])] = p.probabilities[k];
            return j;
        };
        if (batch) {
            ordered_json arr = ordered_json::array();
            for (const auto& [path, p] : results) arr.push_back(row(path, p));
            os << arr.dump(2) << "\n";
        } else {
            os << row(results.front().first, results.front().second).dump(2) << "\n";
        }
    }
    emit(os.str(), g.out, out);
    return kExitOk;
}

// --- eval -------------------------------------------------------------------------

struct EvalArgs {
    std::string data;
    std::vector<int> resolutions{32, 64, 128, 256, 512, 1024};
    int crop = 1024;
    std::optional<std::uint64_t> split_seed;
    std::optional<std::uint64_t> forest_seed;
    int trees = 100;
    double train_fraction = 0.7;
    int neighbors = 24;
    double radius = 8.0;
    unsigned threads = 0;
};

int cmd_eval(const EvalArgs& a, const GlobalOptions& g, std::ostream& out, std::ostream& err) {
    EvalConfig cfg;
    cfg.resolutions = a.resolutions;
    cfg.crop_side = a.crop;
    cfg.split = {a.train_fraction, a.split_seed.value_or(g.seed)};
    cfg.forest_seed = a.forest_seed.value_or(g.seed);
    cfg.lbp = {a.neighbors, a.radius};
    cfg.n_trees = a.trees;
    cfg.threads = a.threads;
    try {
        cfg.validate();
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    const auto report = per_resolution_eval(a.data, cfg);
    warn_skipped(report.skipped_files, err);
    switch (g.format_or(Format::Json)) {
        case Format::Json: emit(report_to_json(report), g.out, out); break;
        case Format::Text: emit(report_to_text(report), g.out, out); break;
        case Format::Csv: emit(report_to_csv(report), g.out, out); break;
    }
    return kExitOk;
}

// --- bench ------------------------------------------------------------------------

struct BenchArgs {
    std::string data;
    std::string models_dir;
    std::vector<int> resolutions{32, 64, 128, 256, 512, 1024};
    int reps = 10;
    int n = 1000;
    double period_ms = 100.0;
    int crop = 1024;
    int pool = 32;
    int neighbors = 24;
    double radius = 8.0;
};

int cmd_bench(const BenchArgs& a, const GlobalOptions& g, std::ostream& out) {
    BenchConfig cfg;
    cfg.resolutions = a.resolutions;
    cfg.repetitions = a.reps;
    cfg.n_images = a.n;
    cfg.sample_period = a.period_ms / 1000.0;
    cfg.crop_side = a.crop;
    cfg.image_pool = a.pool;
    cfg.lbp = {a.neighbors, a.radius};
    try {
        cfg.validate();
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    // Models are resolved before any image is loaded or timed.
    const auto models = load_models_dir(a.models_dir, cfg.resolutions);
    const auto report = run_benchmark(cfg, fs::path(a.data), models);
    switch (g.format_or(Format::Json)) {
        case Format::Json: emit(bench_to_json(report), g.out, out); break;
        case Format::Text: emit(bench_to_text(report), g.out, out); break;
        case Format::Csv: emit(bench_to_csv(report), g.out, out); break;
    }
    return kExitOk;
}

// --- keyframe / simulate ------------------------------------------------------------

struct KeyframeArgs {
    std::string imu;
    std::string frames;
    KeyframePolicy policy;
};

int cmd_keyframe(const KeyframeArgs& a, const GlobalOptions& g, std::ostream& out) {
    const auto imu = read_imu_csv(a.imu);
    const auto frames = read_frames_csv(a.frames);
    const auto windows = detect_rest_windows(imu, a.policy);
    const auto selected = select_keyframes(frames, windows);

    std::ostringstream os;
    switch (g.format_or(Format::Json)) {
        case Format::Json: {
            ordered_json j;
            j["policy"] = {{"g", a.policy.g}, {"epsilon", a.policy.epsilon}, {"min_duration", a.policy.min_duration}};
            auto& w = j["windows"] = ordered_json::array();
            for (const auto& rw : windows) w.push_back({{"t_start", rw.t_start}, {"t_end", rw.t_end}});
            j["selected"] = selected;
            os << j.dump(2) << "\n";
            break;
        }
        case Format::Csv:
            os << "frame_id\n";
            for (auto id : selected) os << id << "\n";
            break;
        case Format::Text:
            os << windows.size() << " rest windows, " << selected.size() << " key frames\n";
            for (std::size_t i = 0; i < windows.size(); ++i) {
                os << "  [" << windows[i].t_start << ", " << windows[i].t_end << "]";
                os << "\n";
            }
            os << "selected:";
            for (auto id : selected) os << ' ' << id;
            os << "\n";
            break;
    }
    emit(os.str(), g.out, out);
    return kExitOk;
}

struct SimulateArgs {
    int cycles = 20;
    double cadence = 1.0;
};

int cmd_simulate(const SimulateArgs& a, const GlobalOptions& g, std::ostream& out) {
    if (!g.out) throw UsageError("simulate requires --out <directory>");
    const auto trace = simulate_gait(a.cycles, a.cadence, g.seed);
    const fs::path dir(*g.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    write_imu_csv(trace.imu, dir / "imu.csv");
    write_frames_csv(trace.frames, dir / "frames.csv");
    write_windows_csv(trace.stance, dir / "stance.csv");
    ordered_json j;
    j["imu"] = (dir / "imu.csv").string();
    j["frames"] = (dir / "frames.csv").string();
    j["stance"] = (dir / "stance.csv").string();
    j["samples"] = trace.imu.size();
    j["frame_count"] = trace.frames.size();
    j["cycles"] = a.cycles;
    out << j.dump(2) << "\n";
    return kExitOk;
}

void add_lbp_options(CLI::App* sub, int& neighbors, double& radius) {
    sub->add_option("--neighbors", neighbors, "LBP sample points")->check(CLI::Range(4, 64));
    sub->add_option("--radius", radius, "LBP radius in pixels")->check(CLI::Range(1.0, 1e6));
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Terrain recognition pipeline and embedded benchmarking harness", "terrabench"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "key=value file providing defaults for long flags");

    GlobalOptions g;
    app.add_option("--seed", g.seed, "Seed for every random choice")->envname("TERRABENCH_SEED");
    app.add_option("--out", g.out, "Output path (file or directory depending on the command)");
    app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"json", "text", "csv"}));

    SynthArgs synth;
    auto* s = app.add_subcommand("synth", "Generate a synthetic six-class texture corpus");
    s->add_option("--counts", synth.counts, "Images per class: N or six comma-separated values");
    s->add_flag("--paper-profile", synth.field_profile, "Use the 566/648/1041/984/168/585 class profile");
    s->add_option("--side", synth.side, "Image side in pixels")->check(CLI::Range(kMinTextureSide, 8192));
    s->add_option("--threads", synth.threads, "Worker threads (0 = all cores)");

    TrainArgs train;
    auto* t = app.add_subcommand("train", "Train a random forest for one resolution");
    t->add_option("--data", train.data, "Dataset root with one directory per class")->required();
    t->add_option("--resolution", train.resolution, "Side after resizing")->check(CLI::Range(3, 8192));
    t->add_option("--crop", train.crop, "Centre-crop side before resizing")->check(CLI::Range(1, 1 << 16));
    t->add_option("--trees", train.trees, "Number of trees")->check(CLI::Range(1, 100000));
    t->add_option("--threads", train.threads, "Worker threads (0 = all cores)");
    add_lbp_options(t, train.neighbors, train.radius);

    PredictArgs pred;
    auto* p = app.add_subcommand("predict", "Classify an image or every image under a directory");
    p->add_option("--model", pred.model, "Model JSON")->required()->check(CLI::ExistingFile);
    p->add_option("--image", pred.image, "Image file or directory")->required()->check(CLI::ExistingPath);
    p->add_option("--resolution", pred.resolution, "Resize to this side first (0 keeps the image)")->check(CLI::Range(0, 8192));
    p->add_option("--crop", pred.crop, "Centre-crop side (0 = largest square)")->check(CLI::Range(0, 1 << 16));
    add_lbp_options(p, pred.neighbors, pred.radius);

    EvalArgs ev;
    auto* e = app.add_subcommand("eval", "Per-resolution accuracy with a shared 70/30 split");
    e->add_option("--data", ev.data, "Dataset root")->required()->check(CLI::ExistingDirectory);
    e->add_option("--resolutions", ev.resolutions, "Comma-separated sides")->delimiter(',');
    e->add_option("--crop", ev.crop, "Centre-crop side")->check(CLI::Range(1, 1 << 16));
    e->add_option("--split-seed", ev.split_seed, "Split seed (defaults to --seed)");
    e->add_option("--forest-seed", ev.forest_seed, "Forest seed (defaults to --seed)");
    e->add_option("--trees", ev.trees, "Trees per forest")->check(CLI::Range(1, 100000));
    e->add_option("--train-fraction", ev.train_fraction, "Training share")->check(CLI::Range(0.0, 1.0));
    e->add_option("--threads", ev.threads, "Worker threads (0 = all cores)");
    add_lbp_options(e, ev.neighbors, ev.radius);

    BenchArgs bench;
    auto* b = app.add_subcommand("bench", "Time the classification loop per resolution");
    b->add_option("--data", bench.data, "Dataset root")->required()->check(CLI::ExistingDirectory);
    b->add_option("--models-dir", bench.models_dir, "Directory with model_<resolution>.json")->required()->check(CLI::ExistingDirectory);
    b->add_option("--resolutions", bench.resolutions, "Comma-separated sides")->delimiter(',');
    b->add_option("--reps", bench.reps, "Repetitions per resolution")->check(CLI::Range(1, 100000));
    b->add_option("--n", bench.n, "Images per repetition")->check(CLI::Range(1, 100000000));
    b->add_option("--period-ms", bench.period_ms, "Resource sampling period")->check(CLI::Range(1.0, 60000.0));
    b->add_option("--crop", bench.crop, "Centre-crop side")->check(CLI::Range(1, 1 << 16));
    b->add_option("--pool", bench.pool, "Distinct images held in memory")->check(CLI::Range(1, 100000));
    add_lbp_options(b, bench.neighbors, bench.radius);

    KeyframeArgs kf;
    auto* k = app.add_subcommand("keyframe", "Select the sharpest frame of every IMU rest window");
    k->add_option("--imu", kf.imu, "IMU CSV (t,ax,ay,az)")->required()->check(CLI::ExistingFile);
    k->add_option("--frames", kf.frames, "Frame CSV (frame_id,t,sharpness)")->required()->check(CLI::ExistingFile);
    k->add_option("--epsilon", kf.policy.epsilon, "Rest band half-width, m/s^2")->check(CLI::PositiveNumber);
    k->add_option("--min-duration", kf.policy.min_duration, "Minimum rest duration, s")->check(CLI::PositiveNumber);
    k->add_option("--gravity", kf.policy.g, "Gravity magnitude, m/s^2")->check(CLI::PositiveNumber);

    SimulateArgs sim;
    auto* m = app.add_subcommand("simulate", "Write a synthetic gait trace (imu.csv, frames.csv, stance.csv)");
    m->add_option("--cycles", sim.cycles, "Gait cycles")->check(CLI::Range(1, 10000000));
    m->add_option("--cadence", sim.cadence, "Cycles per second")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& pe) {
        err << "terrabench: usage error: " << pe.what() << "\n";
        return kExitUsage;
    }

    try {
        if (s->parsed()) return cmd_synth(synth, g, out);
        if (t->parsed()) return cmd_train(train, g, out, err);
        if (p->parsed()) return cmd_predict(pred, g, out, err);
        if (e->parsed()) return cmd_eval(ev, g, out, err);
        if (b->parsed()) return cmd_bench(bench, g, out);
        if (k->parsed()) return cmd_keyframe(kf, g, out);
        if (m->parsed()) return cmd_simulate(sim, g, out);
    } catch (const UsageError& ue) {
        err << "terrabench: usage error: " << ue.what() << "\n";
        return kExitUsage;
    } catch (const Error& ex) {
        err << "terrabench: error (" << to_string(ex.kind()) << "): " << ex.what() << "\n";
        return kExitFailure;
    } catch (const std::exception& ex) {
        err << "terrabench: error: " << ex.what() << "\n";
        return kExitFailure;
    }
    return kExitUsage;
}

}  // namespace terrabench::cli
