#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace terrabench {

inline constexpr double kGravity = 9.81;

struct ImuSample {
    double t = 0.0;                    // seconds
    std::array<double, 3> accel{};     // m/s^2
};

struct FrameMeta {
    std::int64_t frame_id = 0;
    double t = 0.0;
    double sharpness = 0.0;
};

struct RestWindow {
    double t_start = 0.0;
    double t_end = 0.0;

    double duration() const noexcept { return t_end - t_start; }
    bool contains(double t) const noexcept { return t >= t_start && t <= t_end; }
    bool operator==(const RestWindow&) const = default;
};

/// A sample is "at rest" when | |a| - g | <= epsilon; a rest window is a
/// maximal run of such samples lasting at least min_duration.
struct KeyframePolicy {
    double g = kGravity;
    double epsilon = 1.0;
    double min_duration = 0.15;

    void validate() const;
};

double accel_magnitude(const ImuSample& s) noexcept;

std::vector<RestWindow> detect_rest_windows(std::span<const ImuSample> stream,
                                            const KeyframePolicy& policy = {});

/// Sharpest frame (earliest on ties) of every window that contains a frame.
std::vector<std::int64_t> select_keyframes(std::span<const FrameMeta> frames,
                                           std::span<const RestWindow> windows);

struct GaitTrace {
    std::vector<ImuSample> imu;       // 100 Hz
    std::vector<FrameMeta> frames;    // 30 Hz
    std::vector<RestWindow> stance;   // ground truth
};

struct GaitOptions {
    double imu_rate_hz = 100.0;
    double frame_rate_hz = 30.0;
    double stance_fraction = 0.6;
    double stance_noise = 0.2;     // m/s^2
    double swing_amplitude = 8.0;  // m/s^2
    double max_sharpness = 100.0;
    double sharpness_noise = 0.05; // fraction of max_sharpness
};

/// Synthetic walking trace. Each cycle lasts 1/cadence seconds and opens with
/// a stance phase where |a| = g + N(0, 0.2); the swing phase adds one full
/// sine period of amplitude 8 m/s^2. Frame sharpness falls off as
/// s_max / (1 + | |a| - g |) plus Gaussian noise.
GaitTrace simulate_gait(int cycles, double cadence, std::uint64_t seed, const GaitOptions& options = {});

// CSV interchange: t,ax,ay,az / frame_id,t,sharpness / t_start,t_end
std::vector<ImuSample> read_imu_csv(const std::filesystem::path& path);
std::vector<FrameMeta> read_frames_csv(const std::filesystem::path& path);
std::vector<RestWindow> read_windows_csv(const std::filesystem::path& path);
void write_imu_csv(std::span<const ImuSample> imu, const std::filesystem::path& path);
void write_frames_csv(std::span<const FrameMeta> frames, const std::filesystem::path& path);
void write_windows_csv(std::span<const RestWindow> windows, const std::filesystem::path& path);

}  // namespace terrabench
