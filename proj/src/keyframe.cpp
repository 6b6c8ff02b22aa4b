#include "terrabench/keyframe.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <string>

#include "csv.hpp"
#include "terrabench/error.hpp"
#include "terrabench/rng.hpp"

namespace terrabench {

void KeyframePolicy::validate() const {
    if (!(epsilon > 0.0)) throw Error(ErrorKind::Config, "epsilon must be positive");
    if (!(min_duration > 0.0)) throw Error(ErrorKind::Config, "min_duration must be positive");
}

double accel_magnitude(const ImuSample& s) noexcept {
    return std::sqrt(s.accel[0] * s.accel[0] + s.accel[1] * s.accel[1] + s.accel[2] * s.accel[2]);
}

std::vector<RestWindow> detect_rest_windows(std::span<const ImuSample> stream,
                                            const KeyframePolicy& policy) {
    policy.validate();
    for (std::size_t i = 1; i < stream.size(); ++i) {
        if (!(stream[i].t > stream[i - 1].t)) {
            throw Error(ErrorKind::Ordering,
                        "IMU timestamps must be strictly increasing (sample " + std::to_string(i) + ")");
        }
    }

    std::vector<RestWindow> windows;
    bool open = false;
    RestWindow current;
    auto close = [&] {
        if (open && current.duration() >= policy.min_duration) windows.push_back(current);
        open = false;
    };
    for (const auto& s : stream) {
        const bool rest = std::abs(accel_magnitude(s) - policy.g) <= policy.epsilon;
        if (rest) {
            if (!open) {
                current = {s.t, s.t};
                open = true;
            }
            current.t_end = s.t;
        } else {
            close();
        }
    }
    close();
    return windows;
}

std::vector<std::int64_t> select_keyframes(std::span<const FrameMeta> frames,
                                           std::span<const RestWindow> windows) {
    std::vector<std::int64_t> selected;
    for (const auto& w : windows) {
        const FrameMeta* best = nullptr;
        for (const auto& f : frames) {
            if (!w.contains(f.t)) continue;
            if (!best || f.sharpness > best->sharpness) best = &f;
        }
        if (best) selected.push_back(best->frame_id);
    }
    return selected;
}

namespace {

/// Noise-free deviation of |a| from g at time t.
double gait_deviation(double t, double period, const GaitOptions& o, bool* in_stance) {
    const double within = t - std::floor(t / period) * period;
    const double stance = o.stance_fraction * period;
    *in_stance = within < stance;
    if (*in_stance) return 0.0;
    const double v = (within - stance) / (period - stance);
    return o.swing_amplitude * std::sin(2.0 * std::numbers::pi * v);
}

}  // namespace

GaitTrace simulate_gait(int cycles, double cadence, std::uint64_t seed, const GaitOptions& o) {
    if (cycles < 1) throw Error(ErrorKind::Config, "cycles must be >= 1");
    if (!(cadence > 0.0)) throw Error(ErrorKind::Config, "cadence must be positive");

    const double period = 1.0 / cadence;
    const double duration = cycles * period;
    Rng rng(seed);
    GaitTrace trace;

    const auto n_imu = static_cast<std::int64_t>(std::floor(duration * o.imu_rate_hz + 1e-9));
    trace.imu.reserve(static_cast<std::size_t>(n_imu + 1));
    for (std::int64_t i = 0; i <= n_imu; ++i) {
        const double t = static_cast<double>(i) / o.imu_rate_hz;
        bool stance = false;
        const double mag = kGravity + gait_deviation(t, period, o, &stance) + o.stance_noise * standard_normal(rng);
        // The sensor frame sways slowly; only the magnitude carries the gait signal.
        const double tilt = 0.25 * std::sin(2.0 * std::numbers::pi * t * cadence);
        const double azimuth = 0.5 * t;
        trace.imu.push_back({t,
                             {mag * std::sin(tilt) * std::cos(azimuth), mag * std::sin(tilt) * std::sin(azimuth),
                              mag * std::cos(tilt)}});
    }

    const auto n_frames = static_cast<std::int64_t>(std::floor(duration * o.frame_rate_hz + 1e-9));
    trace.frames.reserve(static_cast<std::size_t>(n_frames + 1));
    for (std::int64_t j = 0; j <= n_frames; ++j) {
        const double t = static_cast<double>(j) / o.frame_rate_hz;
        bool stance = false;
        const double dev = gait_deviation(t, period, o, &stance) + o.stance_noise * standard_normal(rng);
        double s = o.max_sharpness / (1.0 + std::abs(dev)) +
                   o.sharpness_noise * o.max_sharpness * standard_normal(rng);
        trace.frames.push_back({j, t, std::max(0.0, s)});
    }

    for (int k = 0; k < cycles; ++k) {
        const double start = k * period;
        trace.stance.push_back({start, start + o.stance_fraction * period});
    }
    return trace;
}

// ---------------------------------------------------------------------------

std::vector<ImuSample> read_imu_csv(const std::filesystem::path& path) {
    std::vector<std::string> storage;
    const auto rows = csv::read_rows(path, "t,ax,ay,az", storage);
    std::vector<ImuSample> out;
    out.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        out.push_back({csv::parse_number<double>(r[0], path, i + 2),
                       {csv::parse_number<double>(r[1], path, i + 2), csv::parse_number<double>(r[2], path, i + 2),
                        csv::parse_number<double>(r[3], path, i + 2)}});
    }
    return out;
}

std::vector<FrameMeta> read_frames_csv(const std::filesystem::path& path) {
    std::vector<std::string> storage;
    const auto rows = csv::read_rows(path, "frame_id,t,sharpness", storage);
    std::vector<FrameMeta> out;
    out.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        out.push_back({csv::parse_number<std::int64_t>(r[0], path, i + 2),
                       csv::parse_number<double>(r[1], path, i + 2),
                       csv::parse_number<double>(r[2], path, i + 2)});
    }
    return out;
}

std::vector<RestWindow> read_windows_csv(const std::filesystem::path& path) {
    std::vector<std::string> storage;
    const auto rows = csv::read_rows(path, "t_start,t_end", storage);
    std::vector<RestWindow> out;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.push_back({csv::parse_number<double>(rows[i][0], path, i + 2),
                       csv::parse_number<double>(rows[i][1], path, i + 2)});
    }
    return out;
}

namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
    return out;
}

}  // namespace

void write_imu_csv(std::span<const ImuSample> imu, const std::filesystem::path& path) {
    auto out = open_for_write(path);
    out << "t,ax,ay,az\n";
    for (const auto& s : imu) {
        out << csv::format_double(s.t) << ',' << csv::format_double(s.accel[0]) << ','
            << csv::format_double(s.accel[1]) << ',' << csv::format_double(s.accel[2]) << '\n';
    }
}

void write_frames_csv(std::span<const FrameMeta> frames, const std::filesystem::path& path) {
    auto out = open_for_write(path);
    out << "frame_id,t,sharpness\n";
    for (const auto& f : frames) {
        out << f.frame_id << ',' << csv::format_double(f.t) << ',' << csv::format_double(f.sharpness) << '\n';
    }
}

void write_windows_csv(std::span<const RestWindow> windows, const std::filesystem::path& path) {
    auto out = open_for_write(path);
    out << "t_start,t_end\n";
    for (const auto& w : windows) {
        out << csv::format_double(w.t_start) << ',' << csv::format_double(w.t_end) << '\n';
    }
}

}  // namespace terrabench
