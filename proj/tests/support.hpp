#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "terrabench/image.hpp"

namespace tbtest {

/// Fresh directory under the system temp path, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::uint64_t counter = 0;
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("terrabench_" + tag + "_" + std::to_string(rd()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& leaf) const { return path_ / leaf; }

private:
    std::filesystem::path path_;
};

/// Integer-valued image with pixels uniform in [lo, hi].
inline terrabench::GrayImage random_image(int w, int h, std::uint64_t seed, int lo = 0, int hi = 255) {
    std::mt19937_64 rng(seed);
    std::vector<double> px(static_cast<std::size_t>(w) * h);
    for (auto& v : px) v = static_cast<double>(lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1)));
    return terrabench::GrayImage(w, h, std::move(px));
}

/// 90-degree counter-clockwise rotation of a square image.
inline terrabench::GrayImage rotate90(const terrabench::GrayImage& img) {
    const int n = img.width();
    std::vector<double> px(static_cast<std::size_t>(n) * n);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) px[static_cast<std::size_t>(n - 1 - x) * n + y] = img.at(x, y);
    return terrabench::GrayImage(n, n, std::move(px));
}

}  // namespace tbtest
