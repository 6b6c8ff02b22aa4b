#include "terrabench/lbp.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>

#include "terrabench/error.hpp"

namespace terrabench {

void LbpParams::validate() const {
    if (neighbors < 4) throw Error(ErrorKind::Config, "LBP needs at least 4 neighbours");
    if (!(radius >= 1.0)) throw Error(ErrorKind::Config, "LBP radius must be >= 1");
}

int LbpParams::margin() const { return static_cast<int>(std::ceil(radius)); }

namespace {

// Offsets are snapped to a 2^-20 grid. On 8-bit data every bilinear product
// and partial sum is then exact in double precision, so the interpolated
// value does not depend on evaluation order and a 90-degree rotation of the
// image reproduces bit-identical neighbour values.
constexpr double kOffsetGrid = 0x1.0p20;

struct Sample {
    int dx0, dx1, dy0, dy1;
    double w00, w01, w10, w11;  // w[row][col]
};

std::vector<Sample> ring_samples(const LbpParams& params) {
    std::vector<Sample> ring;
    ring.reserve(static_cast<std::size_t>(params.neighbors));
    for (int p = 0; p < params.neighbors; ++p) {
        const double angle = 2.0 * std::numbers::pi * p / params.neighbors;
        const double ox = std::round(params.radius * std::cos(angle) * kOffsetGrid) / kOffsetGrid;
        const double oy = std::round(-params.radius * std::sin(angle) * kOffsetGrid) / kOffsetGrid;
        const double fx0 = std::floor(ox);
        const double fy0 = std::floor(oy);
        const double fx = ox - fx0;
        const double fy = oy - fy0;
        Sample s{};
        s.dx0 = static_cast<int>(fx0);
        s.dy0 = static_cast<int>(fy0);
        // A zero weight never touches the second pixel, which may sit one
        // step outside the image at the margin.
        s.dx1 = fx > 0.0 ? s.dx0 + 1 : s.dx0;
        s.dy1 = fy > 0.0 ? s.dy0 + 1 : s.dy0;
        s.w00 = (1.0 - fy) * (1.0 - fx);
        s.w01 = (1.0 - fy) * fx;
        s.w10 = fy * (1.0 - fx);
        s.w11 = fy * fx;
        ring.push_back(s);
    }
    return ring;
}

int code_at(const GrayImage& img, int x, int y, const std::vector<Sample>& ring) {
    const double center = img.at(x, y);
    const int n = static_cast<int>(ring.size());
    int ones = 0;
    int transitions = 0;
    bool first = false;
    bool prev = false;
    for (int p = 0; p < n; ++p) {
        const Sample& s = ring[static_cast<std::size_t>(p)];
        const double v = s.w00 * img.at(x + s.dx0, y + s.dy0) + s.w01 * img.at(x + s.dx1, y + s.dy0) +
                         s.w10 * img.at(x + s.dx0, y + s.dy1) + s.w11 * img.at(x + s.dx1, y + s.dy1);
        const bool bit = v >= center;
        ones += bit ? 1 : 0;
        if (p == 0) {
            first = bit;
        } else if (bit != prev) {
            ++transitions;
        }
        prev = bit;
    }
    if (prev != first) ++transitions;
    return transitions <= 2 ? ones : n + 1;
}

}  // namespace

int lbp_code(const GrayImage& img, int x, int y, const LbpParams& params) {
    params.validate();
    const int m = params.margin();
    if (x < m || y < m || x > img.width() - 1 - m || y > img.height() - 1 - m) {
        throw Error(ErrorKind::OutOfRegion, "pixel (" + std::to_string(x) + ", " + std::to_string(y) +
                                                ") is within " + std::to_string(m) +
                                                " pixels of the border");
    }
    return code_at(img, x, y, ring_samples(params));
}

LbpHistogram lbp_histogram(const GrayImage& img, const LbpParams& params) {
    params.validate();
    const int m = params.margin();
    if (img.width() < 2 * m + 1 || img.height() < 2 * m + 1) {
        throw Error(ErrorKind::TooSmall, "image " + std::to_string(img.width()) + "x" +
                                             std::to_string(img.height()) +
                                             " is too small for LBP radius " +
                                             std::to_string(params.radius));
    }
    const auto ring = ring_samples(params);
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(params.n_bins()), 0);
    std::uint64_t total = 0;
    for (int y = m; y < img.height() - m; ++y) {
        for (int x = m; x < img.width() - m; ++x) {
            ++counts[static_cast<std::size_t>(code_at(img, x, y, ring))];
            ++total;
        }
    }
    LbpHistogram hist;
    hist.bins.reserve(counts.size());
    for (auto c : counts) hist.bins.push_back(static_cast<double>(c) / static_cast<double>(total));
    return hist;
}

}  // namespace terrabench
