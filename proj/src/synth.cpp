#include "terrabench/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "parallel.hpp"
#include "terrabench/error.hpp"
#include "terrabench/rng.hpp"

namespace terrabench {

namespace {

constexpr double kPi = std::numbers::pi;

struct Canvas {
    int side;
    std::vector<double> px;

    explicit Canvas(int s, double fill = 0.0) : side(s), px(static_cast<std::size_t>(s) * s, fill) {}

    double& operator()(int x, int y) { return px[static_cast<std::size_t>(y) * side + x]; }
    double operator()(int x, int y) const { return px[static_cast<std::size_t>(y) * side + x]; }

    /// Bilinear lookup with wrap-around, so fields tile seamlessly.
    double sample_wrapped(double x, double y) const {
        const double fx = std::floor(x), fy = std::floor(y);
        const double ax = x - fx, ay = y - fy;
        auto wrap = [this](long v) { return static_cast<int>(((v % side) + side) % side); };
        const int x0 = wrap(static_cast<long>(fx)), x1 = wrap(static_cast<long>(fx) + 1);
        const int y0 = wrap(static_cast<long>(fy)), y1 = wrap(static_cast<long>(fy) + 1);
        const double top = (*this)(x0, y0) + ax * ((*this)(x1, y0) - (*this)(x0, y0));
        const double bot = (*this)(x0, y1) + ax * ((*this)(x1, y1) - (*this)(x0, y1));
        return top + ay * (bot - top);
    }
};

Canvas white_noise(int side, Rng& rng) {
    Canvas c(side);
    for (auto& v : c.px) v = standard_normal(rng);
    return c;
}

void add_noise(Canvas& c, double sigma, Rng& rng) {
    for (auto& v : c.px) v += sigma * standard_normal(rng);
}

Canvas gaussian_blur(const Canvas& in, double sigma) {
    const int r = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> k(static_cast<std::size_t>(2 * r + 1));
    double sum = 0.0;
    for (int i = -r; i <= r; ++i) sum += k[static_cast<std::size_t>(i + r)] = std::exp(-0.5 * i * i / (sigma * sigma));
    for (auto& v : k) v /= sum;

    const int n = in.side;
    auto wrap = [n](int v) { return ((v % n) + n) % n; };
    Canvas tmp(n), out(n);
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            double acc = 0.0;
            for (int i = -r; i <= r; ++i) acc += k[static_cast<std::size_t>(i + r)] * in(wrap(x + i), y);
            tmp(x, y) = acc;
        }
    }
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            double acc = 0.0;
            for (int i = -r; i <= r; ++i) acc += k[static_cast<std::size_t>(i + r)] * tmp(x, wrap(y + i));
            out(x, y) = acc;
        }
    }
    return out;
}

/// Smooth lattice noise in roughly [-1, 1] with features of size `cell`.
Canvas value_noise(int side, double cell, Rng& rng) {
    const int g = std::max(2, static_cast<int>(std::ceil(side / cell)) + 1);
    std::vector<double> lattice(static_cast<std::size_t>(g) * g);
    for (auto& v : lattice) v = uniform_real(rng, -1.0, 1.0);
    auto smooth = [](double t) { return t * t * (3.0 - 2.0 * t); };
    Canvas c(side);
    for (int y = 0; y < side; ++y) {
        const double gy = y / cell;
        const int y0 = static_cast<int>(gy);
        const double ty = smooth(gy - y0);
        for (int x = 0; x < side; ++x) {
            const double gx = x / cell;
            const int x0 = static_cast<int>(gx);
            const double tx = smooth(gx - x0);
            auto at = [&](int xx, int yy) {
                return lattice[static_cast<std::size_t>(std::min(yy, g - 1)) * g + std::min(xx, g - 1)];
            };
            const double top = at(x0, y0) + tx * (at(x0 + 1, y0) - at(x0, y0));
            const double bot = at(x0, y0 + 1) + tx * (at(x0 + 1, y0 + 1) - at(x0, y0 + 1));
            c(x, y) = top + ty * (bot - top);
        }
    }
    return c;
}

void normalize(Canvas& c, double mean, double stddev) {
    double m = 0.0;
    for (double v : c.px) m += v;
    m /= static_cast<double>(c.px.size());
    double var = 0.0;
    for (double v : c.px) var += (v - m) * (v - m);
    const double s = std::sqrt(var / static_cast<double>(c.px.size()));
    const double scale = s > 0.0 ? stddev / s : 0.0;
    for (auto& v : c.px) v = mean + (v - m) * scale;
}

GrayImage finish(Canvas&& c) {
    for (auto& v : c.px) v = std::clamp(std::round(v), 0.0, 255.0);
    const int side = c.side;
    return GrayImage(side, side, std::move(c.px));
}

// --- generators -------------------------------------------------------------

GrayImage fine_noise(int side, double unit, Rng& rng) {
    Canvas grain = gaussian_blur(white_noise(side, rng), 0.7);
    normalize(grain, 0.0, 24.0);
    const Canvas patches = value_noise(side, 64.0 * unit, rng);
    const double base = uniform_real(rng, 105.0, 135.0);
    Canvas c(side);
    for (std::size_t i = 0; i < c.px.size(); ++i) c.px[i] = base + 10.0 * patches.px[i] + grain.px[i];
    // Sparse bright aggregate.
    const auto speckles = static_cast<std::size_t>(c.px.size() / 80);
    for (std::size_t k = 0; k < speckles; ++k) c.px[uniform_index(rng, c.px.size())] += 55.0;
    return finish(std::move(c));
}

GrayImage woven_stripes(int side, double unit, Rng& rng) {
    const double period = uniform_real(rng, 10.0, 14.0) * unit;
    const double block = 4.0 * period;
    const double angle = uniform_real(rng, -0.2, 0.2);
    const double phase = uniform_real(rng, 0.0, 2.0 * kPi);
    const double base = uniform_real(rng, 110.0, 150.0);
    const double ca = std::cos(angle), sa = std::sin(angle);
    Canvas c(side);
    for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) {
            const double u = ca * x + sa * y;
            const double v = -sa * x + ca * y;
            const bool across = (static_cast<long>(std::floor(u / block)) + static_cast<long>(std::floor(v / block))) % 2 == 0;
            const double coord = across ? u : v;
            c(x, y) = base + 45.0 * std::sin(2.0 * kPi * coord / period + phase);
        }
    }
    add_noise(c, 7.0, rng);
    return finish(std::move(c));
}

GrayImage cell_mosaic(int side, double unit, Rng& rng) {
    const double cell = uniform_real(rng, 20.0, 26.0) * unit;
    const int g = static_cast<int>(std::ceil(side / cell)) + 2;
    struct Stone {
        double x, y, shade;
    };
    std::vector<Stone> stones(static_cast<std::size_t>(g) * g);
    for (int j = 0; j < g; ++j) {
        for (int i = 0; i < g; ++i) {
            stones[static_cast<std::size_t>(j) * g + i] = {(i - 1 + uniform_real(rng, 0.1, 0.9)) * cell,
                                                           (j - 1 + uniform_real(rng, 0.1, 0.9)) * cell,
                                                           uniform_real(rng, 110.0, 190.0)};
        }
    }
    const double mortar = std::max(1.0, 2.0 * unit);
    Canvas c(side);
    for (int y = 0; y < side; ++y) {
        const int cj = static_cast<int>(y / cell) + 1;
        for (int x = 0; x < side; ++x) {
            const int ci = static_cast<int>(x / cell) + 1;
            double d1 = 1e300, d2 = 1e300;
            const Stone* nearest = nullptr;
            for (int j = std::max(0, cj - 2); j <= std::min(g - 1, cj + 2); ++j) {
                for (int i = std::max(0, ci - 2); i <= std::min(g - 1, ci + 2); ++i) {
                    const Stone& s = stones[static_cast<std::size_t>(j) * g + i];
                    const double d = std::hypot(x - s.x, y - s.y);
                    if (d < d1) {
                        d2 = d1;
                        d1 = d;
                        nearest = &s;
                    } else if (d < d2) {
                        d2 = d;
                    }
                }
            }
            if (d2 - d1 < mortar) {
                c(x, y) = 55.0;
            } else {
                const double r = d1 / cell;
                c(x, y) = nearest->shade - 45.0 * r * r;
            }
        }
    }
    add_noise(c, 6.0, rng);
    return finish(std::move(c));
}

GrayImage directional_streaks(int side, double unit, Rng& rng) {
    const Canvas noise = gaussian_blur(white_noise(side, rng), std::max(0.5, 0.6 * unit));
    const double angle = kPi / 2.0 + 0.25 * standard_normal(rng);
    const double length = uniform_real(rng, 14.0, 22.0) * unit;
    const int taps = std::max(3, static_cast<int>(std::ceil(length)));
    const double dx = std::cos(angle), dy = std::sin(angle);
    Canvas c(side);
    for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) {
            double acc = 0.0;
            for (int k = 0; k < taps; ++k) {
                const double s = (k - 0.5 * (taps - 1)) * length / taps;
                acc += noise.sample_wrapped(x + s * dx, y + s * dy);
            }
            c(x, y) = acc;
        }
    }
    normalize(c, uniform_real(rng, 90.0, 120.0), 32.0);
    add_noise(c, 4.0, rng);
    return finish(std::move(c));
}

GrayImage coarse_blobs(int side, double unit, Rng& rng) {
    Canvas c(side, uniform_real(rng, 60.0, 90.0));
    const double mean_area = kPi * 6.5 * 3.0 * unit * unit;
    const auto chips = static_cast<int>(2.5 * side * side / mean_area);
    for (int k = 0; k < chips; ++k) {
        const double cx = uniform_real(rng, 0.0, side);
        const double cy = uniform_real(rng, 0.0, side);
        const double a = uniform_real(rng, 4.0, 9.0) * unit;
        const double b = uniform_real(rng, 2.0, 4.0) * unit;
        const double th = uniform_real(rng, 0.0, kPi);
        const double shade = uniform_real(rng, 40.0, 200.0);
        const double ct = std::cos(th), st = std::sin(th);
        const int x0 = std::max(0, static_cast<int>(cx - a - 1)), x1 = std::min(side - 1, static_cast<int>(cx + a + 1));
        const int y0 = std::max(0, static_cast<int>(cy - a - 1)), y1 = std::min(side - 1, static_cast<int>(cy + a + 1));
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const double u = (x - cx) * ct + (y - cy) * st;
                const double v = -(x - cx) * st + (y - cy) * ct;
                if ((u * u) / (a * a) + (v * v) / (b * b) <= 1.0) c(x, y) = shade;
            }
        }
    }
    add_noise(c, 6.0, rng);
    return finish(std::move(c));
}

GrayImage grid_lines(int side, std::uint64_t seed, Rng& rng) {
    const TileLayout layout = tile_layout(side, seed);
    const int p = layout.period;
    const int cols = side / p + 2;
    std::vector<double> shades(static_cast<std::size_t>(cols) * cols);
    for (auto& s : shades) s = uniform_real(rng, 170.0, 205.0);
    Canvas c(side);
    for (int y = 0; y < side; ++y) {
        const int ty = (y + p - layout.offset_y) / p;
        const bool hline = (y + p - layout.offset_y) % p < layout.line_width;
        for (int x = 0; x < side; ++x) {
            const int tx = (x + p - layout.offset_x) / p;
            const bool vline = (x + p - layout.offset_x) % p < layout.line_width;
            c(x, y) = (hline || vline) ? 80.0 : shades[static_cast<std::size_t>(ty) * cols + tx];
        }
    }
    // Glazed surfaces: noise stays well under one gray level.
    add_noise(c, 0.4, rng);
    return finish(std::move(c));
}

}  // namespace

TileLayout tile_layout(int side, std::uint64_t seed) {
    Rng rng(mix_seed(seed, 0x711E));
    const double unit = side / 256.0;
    TileLayout t;
    t.period = std::max(4, static_cast<int>(std::lround(uniform_real(rng, 40.0, 56.0) * unit)));
    t.offset_x = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(t.period)));
    t.offset_y = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(t.period)));
    t.line_width = std::max(1, static_cast<int>(std::lround(1.5 * unit)));
    return t;
}

GrayImage gen_texture(TextureClass cls, int side, std::uint64_t seed) {
    if (side < kMinTextureSide) {
        throw Error(ErrorKind::TooSmall, "texture side must be >= " + std::to_string(kMinTextureSide));
    }
    const double unit = side / 256.0;
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(to_index(cls))));
    switch (cls) {
        case TerrainLabel::Asphalt: return fine_noise(side, unit, rng);
        case TerrainLabel::Carpet: return woven_stripes(side, unit, rng);
        case TerrainLabel::Cobblestone: return cell_mosaic(side, unit, rng);
        case TerrainLabel::Grass: return directional_streaks(side, unit, rng);
        case TerrainLabel::Mulch: return coarse_blobs(side, unit, rng);
        case TerrainLabel::Tile: return grid_lines(side, seed, rng);
    }
    throw Error(ErrorKind::Config, "unknown texture class");
}

std::uint64_t corpus_file_seed(std::uint64_t corpus_seed, TerrainLabel cls, int index) {
    return mix_seed(mix_seed(corpus_seed, static_cast<std::uint64_t>(to_index(cls))),
                    static_cast<std::uint64_t>(index));
}

std::vector<ManifestEntry> gen_corpus(const ClassCountsProfile& counts, int side, std::uint64_t seed,
                                      const std::filesystem::path& root, unsigned threads) {
    if (side < kMinTextureSide) {
        throw Error(ErrorKind::TooSmall, "texture side must be >= " + std::to_string(kMinTextureSide));
    }
    std::vector<ManifestEntry> manifest;
    for (TerrainLabel cls : kAllLabels) {
        const int n = counts[static_cast<std::size_t>(to_index(cls))];
        if (n < 0) throw Error(ErrorKind::Config, "class counts must be non-negative");
        for (int i = 0; i < n; ++i) {
            char name[32];
            std::snprintf(name, sizeof name, "_%05d.png", i);
            manifest.push_back({std::string(label_name(cls)) + "/" + std::string(label_name(cls)) + name, cls,
                                corpus_file_seed(seed, cls, i)});
        }
    }

    std::error_code ec;
    std::filesystem::create_directories(root, ec);
    for (TerrainLabel cls : kAllLabels) {
        if (counts[static_cast<std::size_t>(to_index(cls))] == 0) continue;
        std::filesystem::create_directories(root / std::string(label_name(cls)), ec);
        if (ec) throw Error(ErrorKind::Io, "cannot create " + (root / std::string(label_name(cls))).string());
    }

    detail::parallel_for(manifest.size(), threads, [&](std::size_t k) {
        const auto& e = manifest[k];
        save_png(gen_texture(e.label, side, e.seed), root / e.path);
    });

    std::ofstream out(root / "manifest.csv", std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + (root / "manifest.csv").string());
    out << "path,label,seed\n";
    for (const auto& e : manifest) out << e.path << ',' << label_name(e.label) << ',' << e.seed << '\n';
    if (!out) throw Error(ErrorKind::Io, "failed writing manifest");
    return manifest;
}

}  // namespace terrabench
