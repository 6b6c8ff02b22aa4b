#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <stop_token>
#include <string>
#include <thread>
#include <vector>

#include "terrabench/forest.hpp"
#include "terrabench/image.hpp"
#include "terrabench/lbp.hpp"

namespace terrabench {

struct ResourceSample {
    double t = 0.0;         // seconds since sampling started
    double cpu_load = 0.0;  // process CPU time / (wall * logical cores)
    double mem_usage = 0.0; // resident set / physical memory
};

/// Point-in-time readings from the OS process accounting interface.
struct ProcessUsage {
    double cpu_seconds = 0.0;
    std::uint64_t resident_bytes = 0;
};

/// Throws Error(PlatformUnsupported) when /proc or rusage is unavailable.
ProcessUsage read_process_usage();
std::uint64_t total_memory_bytes();
unsigned logical_cores();

/// Blocking sampler loop: appends one sample per period until `stop` is
/// requested, then returns them. Deadlines are absolute, so jitter does not
/// accumulate.
std::vector<ResourceSample> sample_resources(std::chrono::duration<double> period, std::stop_token stop);

/// Runs sample_resources on its own thread for the lifetime of the object.
class ResourceSampler {
public:
    explicit ResourceSampler(std::chrono::duration<double> period);
    ~ResourceSampler();

    ResourceSampler(const ResourceSampler&) = delete;
    ResourceSampler& operator=(const ResourceSampler&) = delete;

    /// Stops the sampler thread and hands over its samples. Call once.
    std::vector<ResourceSample> stop();
    /// False when the accounting interface was unavailable.
    bool available() const noexcept { return available_; }

private:
    bool available_ = true;
    std::vector<ResourceSample> samples_;
    std::jthread worker_;
};

struct BenchConfig {
    std::vector<int> resolutions{32, 64, 128, 256, 512, 1024};
    int repetitions = 10;
    int n_images = 1000;
    double sample_period = 0.100;  // seconds
    int crop_side = 1024;
    /// Distinct images held in memory per resolution; the timed loop cycles
    /// through them until n_images have been classified.
    int image_pool = 32;
    LbpParams lbp;

    void validate() const;
};

struct RunStats {
    double total_wall = 0.0;      // seconds
    double per_image_mean = 0.0;  // total_wall / n_images
    std::vector<ResourceSample> resource_samples;
    bool resources_available = true;
    std::vector<TerrainLabel> predictions;

    std::optional<double> mean_cpu() const;
    std::optional<double> mean_mem() const;
};

/// Single-threaded LBP + forest loop over `images` in order, with the
/// resource sampler running alongside.
RunStats time_pipeline(std::span<const GrayImage> images, const ForestModel& model, const LbpParams& params,
                       double sample_period = 0.100);

/// Same, classifying n_images by cycling through `pool`.
RunStats time_pipeline_cycled(std::span<const GrayImage> pool, int n_images, const ForestModel& model,
                              const LbpParams& params, double sample_period = 0.100);

struct BenchRow {
    int resolution = 0;
    double avg_runtime_s = 0.0;
    double fps = 0.0;
    std::optional<double> avg_cpu;
    std::optional<double> avg_mem;
    std::vector<double> run_runtimes;  // per repetition
};

struct BenchmarkReport {
    std::string host;
    BenchConfig config;
    std::vector<BenchRow> rows;
};

/// Human-readable CPU model, core count and memory of this machine.
std::string host_descriptor();

/// Times every configured resolution. `sources` are full-size images that get
/// centre-cropped to crop_side and resized per resolution before timing.
BenchmarkReport run_benchmark(const BenchConfig& config, std::span<const GrayImage> sources,
                              const std::map<int, ForestModel>& models);

/// Reads up to image_pool images from the class-directory layout at `root`.
BenchmarkReport run_benchmark(const BenchConfig& config, const std::filesystem::path& root,
                              const std::map<int, ForestModel>& models);

/// Loads models_dir/model_<resolution>.json for every configured resolution.
std::map<int, ForestModel> load_models_dir(const std::filesystem::path& models_dir, std::span<const int> resolutions);

std::string bench_to_json(const BenchmarkReport& report);
std::string bench_to_text(const BenchmarkReport& report);
std::string bench_to_csv(const BenchmarkReport& report);

}  // namespace terrabench
