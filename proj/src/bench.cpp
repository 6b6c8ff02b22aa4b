#include "terrabench/bench.hpp"

#include <sys/resource.h>
#include <unistd.h>

#include <algorithm>
#include <condition_variable>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "terrabench/error.hpp"
#include "terrabench/eval.hpp"

namespace terrabench {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0, Clock::time_point t1) {
    return std::chrono::duration<double>(t1 - t0).count();
}

}  // namespace

ProcessUsage read_process_usage() {
    rusage ru{};
    if (getrusage(RUSAGE_SELF, &ru) != 0) {
        throw Error(ErrorKind::PlatformUnsupported, "getrusage failed");
    }
    ProcessUsage u;
    u.cpu_seconds = static_cast<double>(ru.ru_utime.tv_sec + ru.ru_stime.tv_sec) +
                    1e-6 * static_cast<double>(ru.ru_utime.tv_usec + ru.ru_stime.tv_usec);

    std::ifstream statm("/proc/self/statm");
    std::uint64_t size_pages = 0, resident_pages = 0;
    if (!(statm >> size_pages >> resident_pages)) {
        throw Error(ErrorKind::PlatformUnsupported, "/proc/self/statm is not readable");
    }
    u.resident_bytes = resident_pages * static_cast<std::uint64_t>(sysconf(_SC_PAGESIZE));
    return u;
}

std::uint64_t total_memory_bytes() {
    const long pages = sysconf(_SC_PHYS_PAGES);
    const long page = sysconf(_SC_PAGESIZE);
    if (pages <= 0 || page <= 0) throw Error(ErrorKind::PlatformUnsupported, "physical memory size unavailable");
    return static_cast<std::uint64_t>(pages) * static_cast<std::uint64_t>(page);
}

unsigned logical_cores() {
    const long n = sysconf(_SC_NPROCESSORS_ONLN);
    if (n > 0) return static_cast<unsigned>(n);
    return std::max(1U, std::thread::hardware_concurrency());
}

std::vector<ResourceSample> sample_resources(std::chrono::duration<double> period, std::stop_token stop) {
    if (!(period.count() > 0.0)) throw Error(ErrorKind::Config, "sample period must be positive");
    const double cores = logical_cores();
    const double total_mem = static_cast<double>(total_memory_bytes());
    const auto step = std::chrono::duration_cast<Clock::duration>(period);

    std::vector<ResourceSample> samples;
    std::mutex m;
    std::condition_variable_any cv;
    const auto start = Clock::now();
    auto prev_t = start;
    auto prev = read_process_usage();
    for (long k = 1;; ++k) {
        {
            std::unique_lock lock(m);
            cv.wait_until(lock, stop, start + k * step, [] { return false; });
        }
        if (stop.stop_requested()) break;
        const auto now = Clock::now();
        const auto usage = read_process_usage();
        const double wall = seconds_since(prev_t, now);
        ResourceSample s;
        s.t = seconds_since(start, now);
        s.cpu_load = wall > 0.0 ? std::clamp((usage.cpu_seconds - prev.cpu_seconds) / (wall * cores), 0.0, 1.0) : 0.0;
        s.mem_usage = std::clamp(static_cast<double>(usage.resident_bytes) / total_mem, 0.0, 1.0);
        samples.push_back(s);
        prev = usage;
        prev_t = now;
    }
    return samples;
}

ResourceSampler::ResourceSampler(std::chrono::duration<double> period) {
    if (!(period.count() > 0.0)) throw Error(ErrorKind::Config, "sample period must be positive");
    try {
        (void)read_process_usage();
        (void)total_memory_bytes();
    } catch (const Error&) {
        available_ = false;
        return;
    }
    worker_ = std::jthread([this, period](std::stop_token st) { samples_ = sample_resources(period, st); });
}

ResourceSampler::~ResourceSampler() = default;

std::vector<ResourceSample> ResourceSampler::stop() {
    if (worker_.joinable()) {
        worker_.request_stop();
        worker_.join();
    }
    return std::move(samples_);
}

void BenchConfig::validate() const {
    if (resolutions.empty()) throw Error(ErrorKind::Config, "no resolutions configured");
    if (repetitions < 1) throw Error(ErrorKind::Config, "repetitions must be >= 1");
    if (n_images < 1) throw Error(ErrorKind::Config, "n_images must be >= 1");
    if (!(sample_period > 0.0)) throw Error(ErrorKind::Config, "sample period must be positive");
    if (crop_side < 1) throw Error(ErrorKind::Config, "crop side must be positive");
    if (image_pool < 1) throw Error(ErrorKind::Config, "image pool must be >= 1");
    lbp.validate();
    for (int r : resolutions) {
        if (r < 2 * lbp.margin() + 1) {
            throw Error(ErrorKind::Config, "resolution " + std::to_string(r) + " is too small for the LBP radius");
        }
        if (r > crop_side) {
            throw Error(ErrorKind::Config, "resolution " + std::to_string(r) + " exceeds the crop side");
        }
    }
}

std::optional<double> RunStats::mean_cpu() const {
    if (!resources_available || resource_samples.empty()) return std::nullopt;
    double s = 0.0;
    for (const auto& r : resource_samples) s += r.cpu_load;
    return s / static_cast<double>(resource_samples.size());
}

std::optional<double> RunStats::mean_mem() const {
    if (!resources_available || resource_samples.empty()) return std::nullopt;
    double s = 0.0;
    for (const auto& r : resource_samples) s += r.mem_usage;
    return s / static_cast<double>(resource_samples.size());
}

RunStats time_pipeline_cycled(std::span<const GrayImage> pool, int n_images, const ForestModel& model,
                              const LbpParams& params, double sample_period) {
    if (n_images < 1) throw Error(ErrorKind::Config, "n_images must be >= 1");
    if (pool.empty()) throw Error(ErrorKind::EmptyDataset, "no images to time");
    params.validate();
    if (model.n_features != params.n_bins()) {
        throw Error(ErrorKind::Shape, "model expects " + std::to_string(model.n_features) + " features but LBP yields " +
                                          std::to_string(params.n_bins()));
    }

    RunStats stats;
    stats.predictions.reserve(static_cast<std::size_t>(n_images));
    std::optional<ProcessUsage> before;
    try {
        before = read_process_usage();
    } catch (const Error&) {
    }

    ResourceSampler sampler{std::chrono::duration<double>(sample_period)};
    const auto t0 = Clock::now();
    int done = 0;
    try {
        for (; done < n_images; ++done) {
            const GrayImage& img = pool[static_cast<std::size_t>(done) % pool.size()];
            const LbpHistogram hist = lbp_histogram(img, params);
            stats.predictions.push_back(predict(model, hist.bins).label);
        }
    } catch (const Error& e) {
        (void)sampler.stop();
        throw Error(ErrorKind::PartialReport, "run aborted after " + std::to_string(done) + " of " +
                                                  std::to_string(n_images) + " images: " + e.what());
    }
    const auto t1 = Clock::now();
    stats.resource_samples = sampler.stop();
    stats.resources_available = sampler.available() && before.has_value();
    stats.total_wall = std::max(seconds_since(t0, t1), 1e-9);
    stats.per_image_mean = stats.total_wall / n_images;

    // Runs shorter than one period still get a whole-run reading.
    if (stats.resources_available && stats.resource_samples.empty()) {
        const auto after = read_process_usage();
        ResourceSample s;
        s.t = stats.total_wall;
        s.cpu_load = std::clamp((after.cpu_seconds - before->cpu_seconds) / (stats.total_wall * logical_cores()), 0.0, 1.0);
        s.mem_usage = std::clamp(static_cast<double>(after.resident_bytes) / static_cast<double>(total_memory_bytes()),
                                 0.0, 1.0);
        stats.resource_samples.push_back(s);
    }
    return stats;
}

RunStats time_pipeline(std::span<const GrayImage> images, const ForestModel& model, const LbpParams& params,
                       double sample_period) {
    return time_pipeline_cycled(images, static_cast<int>(images.size()), model, params, sample_period);
}

std::string host_descriptor() {
    std::string cpu = "unknown cpu";
    std::ifstream info("/proc/cpuinfo");
    for (std::string line; std::getline(info, line);) {
        if (line.rfind("model name", 0) == 0) {
            const auto colon = line.find(':');
            if (colon != std::string::npos) cpu = line.substr(line.find_first_not_of(' ', colon + 1));
            break;
        }
    }
    std::ostringstream os;
    os << cpu << ", " << logical_cores() << " logical cores";
    try {
        os << ", " << std::fixed << std::setprecision(1) << total_memory_bytes() / (1024.0 * 1024.0 * 1024.0)
           << " GiB RAM";
    } catch (const Error&) {
    }
    return os.str();
}

namespace {

void check_models(const BenchConfig& config, const std::map<int, ForestModel>& models) {
    for (int r : config.resolutions) {
        const auto it = models.find(r);
        if (it == models.end()) {
            throw Error(ErrorKind::Config, "no trained model for resolution " + std::to_string(r));
        }
        if (it->second.n_features != config.lbp.n_bins()) {
            throw Error(ErrorKind::Config, "model for resolution " + std::to_string(r) + " has " +
                                               std::to_string(it->second.n_features) + " features, expected " +
                                               std::to_string(config.lbp.n_bins()));
        }
    }
}

}  // namespace

BenchmarkReport run_benchmark(const BenchConfig& config, std::span<const GrayImage> sources,
                              const std::map<int, ForestModel>& models) {
    config.validate();
    check_models(config, models);

    std::vector<GrayImage> cropped;
    for (const auto& src : sources) {
        if (static_cast<int>(cropped.size()) >= config.image_pool) break;
        if (std::min(src.width(), src.height()) < config.crop_side) continue;
        cropped.push_back(center_crop(src, config.crop_side));
    }
    if (cropped.empty()) {
        throw Error(ErrorKind::EmptyDataset, "no source image reaches the crop side " + std::to_string(config.crop_side));
    }

    BenchmarkReport report;
    report.host = host_descriptor();
    report.config = config;
    for (int r : config.resolutions) {
        std::vector<GrayImage> pool;
        pool.reserve(cropped.size());
        for (const auto& c : cropped) pool.push_back(resize_bilinear(c, r, r));
        const ForestModel& model = models.at(r);

        BenchRow row;
        row.resolution = r;
        std::vector<double> cpu, mem;
        bool resources = true;
        for (int rep = 0; rep < config.repetitions; ++rep) {
            const RunStats stats = time_pipeline_cycled(pool, config.n_images, model, config.lbp, config.sample_period);
            row.run_runtimes.push_back(stats.total_wall);
            const auto c = stats.mean_cpu();
            const auto m = stats.mean_mem();
            if (c && m) {
                cpu.push_back(*c);
                mem.push_back(*m);
            } else {
                resources = false;
            }
        }
        const double n_runs = static_cast<double>(row.run_runtimes.size());
        row.avg_runtime_s = std::accumulate(row.run_runtimes.begin(), row.run_runtimes.end(), 0.0) / n_runs;
        row.fps = config.n_images / row.avg_runtime_s;
        if (resources) {
            row.avg_cpu = std::accumulate(cpu.begin(), cpu.end(), 0.0) / static_cast<double>(cpu.size());
            row.avg_mem = std::accumulate(mem.begin(), mem.end(), 0.0) / static_cast<double>(mem.size());
        }
        report.rows.push_back(std::move(row));
    }
    return report;
}

BenchmarkReport run_benchmark(const BenchConfig& config, const std::filesystem::path& root,
                              const std::map<int, ForestModel>& models) {
    config.validate();
    check_models(config, models);
    const auto entries = scan_dataset(root);

    // Interleave classes so a small pool still covers every terrain.
    std::array<std::vector<const DatasetEntry*>, kNumClasses> by_class;
    for (const auto& e : entries) by_class[static_cast<std::size_t>(to_index(e.label))].push_back(&e);
    std::vector<GrayImage> sources;
    for (std::size_t k = 0; static_cast<int>(sources.size()) < config.image_pool; ++k) {
        bool any = false;
        for (const auto& cls : by_class) {
            if (k >= cls.size() || static_cast<int>(sources.size()) >= config.image_pool) continue;
            any = true;
            try {
                GrayImage img = load_gray(cls[k]->path);
                if (std::min(img.width(), img.height()) >= config.crop_side) sources.push_back(std::move(img));
            } catch (const Error&) {
            }
        }
        if (!any) break;
    }
    return run_benchmark(config, std::span<const GrayImage>(sources), models);
}

std::map<int, ForestModel> load_models_dir(const std::filesystem::path& models_dir, std::span<const int> resolutions) {
    std::map<int, ForestModel> models;
    for (int r : resolutions) {
        const auto path = models_dir / ("model_" + std::to_string(r) + ".json");
        if (!std::filesystem::exists(path)) {
            throw Error(ErrorKind::Config, "missing model for resolution " + std::to_string(r) + ": " + path.string());
        }
        models.emplace(r, load_model(path));
    }
    return models;
}

// --- rendering ------------------------------------------------------------------

std::string bench_to_json(const BenchmarkReport& report) {
    nlohmann::ordered_json j;
    j["host"] = report.host;
    auto& cfg = j["config"];
    cfg["resolutions"] = report.config.resolutions;
    cfg["repetitions"] = report.config.repetitions;
    cfg["n_images"] = report.config.n_images;
    cfg["sample_period_s"] = report.config.sample_period;
    cfg["crop_side"] = report.config.crop_side;
    cfg["image_pool"] = report.config.image_pool;
    cfg["lbp"] = {{"neighbors", report.config.lbp.neighbors}, {"radius", report.config.lbp.radius}};
    auto& rows = j["rows"] = nlohmann::ordered_json::array();
    for (const auto& r : report.rows) {
        nlohmann::ordered_json row;
        row["resolution"] = r.resolution;
        row["avg_runtime_s"] = r.avg_runtime_s;
        row["fps"] = r.fps;
        row["avg_cpu"] = r.avg_cpu ? nlohmann::ordered_json(*r.avg_cpu) : nlohmann::ordered_json(nullptr);
        row["avg_mem"] = r.avg_mem ? nlohmann::ordered_json(*r.avg_mem) : nlohmann::ordered_json(nullptr);
        rows.push_back(std::move(row));
    }
    return j.dump(2) + "\n";
}

std::string bench_to_text(const BenchmarkReport& report) {
    std::ostringstream os;
    os << "host: " << report.host << "\n";
    os << "images/run " << report.config.n_images << ", repetitions " << report.config.repetitions
       << ", sample period " << report.config.sample_period * 1000.0 << " ms\n\n";
    os << std::setw(10) << "resolution" << std::setw(16) << "avg_runtime_s" << std::setw(12) << "fps" << std::setw(12)
       << "cpu_%" << std::setw(12) << "mem_%" << "\n";
    auto pct = [](const std::optional<double>& v) {
        std::ostringstream s;
        if (v) {
            s << std::fixed << std::setprecision(2) << *v * 100.0;
        } else {
            s << "n/a";
        }
        return s.str();
    };
    for (const auto& r : report.rows) {
        os << std::setw(10) << r.resolution << std::setw(16) << std::fixed << std::setprecision(4) << r.avg_runtime_s
           << std::setw(12) << std::setprecision(2) << r.fps << std::setw(12) << pct(r.avg_cpu) << std::setw(12)
           << pct(r.avg_mem) << "\n";
    }
    return os.str();
}

std::string bench_to_csv(const BenchmarkReport& report) {
    std::ostringstream os;
    os << "resolution,avg_runtime_s,fps,avg_cpu,avg_mem\n" << std::setprecision(17);
    for (const auto& r : report.rows) {
        os << r.resolution << ',' << r.avg_runtime_s << ',' << r.fps << ',';
        if (r.avg_cpu) os << *r.avg_cpu;
        os << ',';
        if (r.avg_mem) os << *r.avg_mem;
        os << "\n";
    }
    return os.str();
}

}  // namespace terrabench
