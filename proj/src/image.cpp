#include "terrabench/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "terrabench/error.hpp"

namespace terrabench {

GrayImage::GrayImage(int width, int height, std::vector<double> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
    if (width < 1 || height < 1) {
        throw Error(ErrorKind::InvalidImage,
                    "image dimensions must be positive, got " + std::to_string(width) + "x" +
                        std::to_string(height));
    }
    if (pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw Error(ErrorKind::InvalidImage, "pixel count does not match dimensions");
    }
    for (double v : pixels_) {
        if (!(v >= 0.0 && v <= 255.0)) {
            throw Error(ErrorKind::InvalidImage,
                        "pixel value outside [0, 255]: " + std::to_string(v));
        }
    }
}

GrayImage GrayImage::filled(int width, int height, double value) {
    const auto n = static_cast<std::size_t>(std::max(width, 0)) *
                   static_cast<std::size_t>(std::max(height, 0));
    return GrayImage(width, height, std::vector<double>(n, value));
}

GrayImage load_gray(const std::filesystem::path& path) {
    cv::Mat raw;
    try {
        raw = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
    } catch (const cv::Exception& e) {
        throw Error(ErrorKind::Decode, "cannot decode " + path.string() + ": " + e.what());
    }
    if (raw.empty()) {
        throw Error(ErrorKind::Decode, "cannot decode " + path.string());
    }
    if (raw.depth() != CV_8U) {
        throw Error(ErrorKind::Decode, "only 8-bit images are supported: " + path.string());
    }
    if (raw.cols < 1 || raw.rows < 1) {
        throw Error(ErrorKind::InvalidImage, "zero-sized image: " + path.string());
    }

    const int channels = raw.channels();
    std::vector<double> out(static_cast<std::size_t>(raw.cols) * raw.rows);
    for (int y = 0; y < raw.rows; ++y) {
        const auto* src = raw.ptr<unsigned char>(y);
        double* dst = out.data() + static_cast<std::size_t>(y) * raw.cols;
        for (int x = 0; x < raw.cols; ++x) {
            const unsigned char* px = src + static_cast<std::ptrdiff_t>(x) * channels;
            if (channels >= 3) {
                // OpenCV decodes colour as BGR(A); alpha is ignored.
                dst[x] = luma601(px[2], px[1], px[0]);
            } else {
                dst[x] = px[0];
            }
        }
    }
    return GrayImage(raw.cols, raw.rows, std::move(out));
}

void save_png(const GrayImage& img, const std::filesystem::path& path) {
    cv::Mat mat(img.height(), img.width(), CV_8UC1);
    for (int y = 0; y < img.height(); ++y) {
        auto* dst = mat.ptr<unsigned char>(y);
        const auto src = img.row(y);
        for (int x = 0; x < img.width(); ++x) {
            dst[x] = static_cast<unsigned char>(std::lround(src[x]));
        }
    }
    bool ok = false;
    try {
        ok = cv::imwrite(path.string(), mat, {cv::IMWRITE_PNG_COMPRESSION, 6});
    } catch (const cv::Exception& e) {
        throw Error(ErrorKind::Io, "cannot write " + path.string() + ": " + e.what());
    }
    if (!ok) throw Error(ErrorKind::Io, "cannot write " + path.string());
}

GrayImage center_crop(const GrayImage& img, int side) {
    if (side < 1) throw Error(ErrorKind::CropTooLarge, "crop side must be positive");
    if (side > std::min(img.width(), img.height())) {
        throw Error(ErrorKind::CropTooLarge,
                    "crop side " + std::to_string(side) + " exceeds image " +
                        std::to_string(img.width()) + "x" + std::to_string(img.height()));
    }
    const int x0 = (img.width() - side) / 2;
    const int y0 = (img.height() - side) / 2;
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(side) * side);
    for (int y = y0; y < y0 + side; ++y) {
        const auto r = img.row(y).subspan(static_cast<std::size_t>(x0), static_cast<std::size_t>(side));
        out.insert(out.end(), r.begin(), r.end());
    }
    return GrayImage(side, side, std::move(out));
}

namespace {

struct Tap {
    int lo;
    int hi;
    double frac;
};

std::vector<Tap> resize_taps(int in, int out) {
    const double scale = static_cast<double>(in) / out;
    std::vector<Tap> taps(static_cast<std::size_t>(out));
    for (int i = 0; i < out; ++i) {
        double src = (i + 0.5) * scale - 0.5;
        src = std::clamp(src, 0.0, static_cast<double>(in - 1));
        const int lo = static_cast<int>(std::floor(src));
        const int hi = std::min(lo + 1, in - 1);
        taps[static_cast<std::size_t>(i)] = {lo, hi, src - lo};
    }
    return taps;
}

}  // namespace

GrayImage resize_bilinear(const GrayImage& img, int out_w, int out_h) {
    if (out_w < 1 || out_h < 1) {
        throw Error(ErrorKind::InvalidImage, "resize target must be at least 1x1");
    }
    const auto xs = resize_taps(img.width(), out_w);
    const auto ys = resize_taps(img.height(), out_h);

    std::vector<double> out(static_cast<std::size_t>(out_w) * out_h);
    for (int y = 0; y < out_h; ++y) {
        const Tap ty = ys[static_cast<std::size_t>(y)];
        const auto top = img.row(ty.lo);
        const auto bottom = img.row(ty.hi);
        for (int x = 0; x < out_w; ++x) {
            const Tap tx = xs[static_cast<std::size_t>(x)];
            const double a = top[tx.lo], b = top[tx.hi];
            const double c = bottom[tx.lo], d = bottom[tx.hi];
            const double upper = a + tx.frac * (b - a);
            const double lower = c + tx.frac * (d - c);
            const double v = upper + ty.frac * (lower - upper);
            // Rounding must not push the result outside the enclosing samples.
            const double lo = std::min({a, b, c, d});
            const double hi = std::max({a, b, c, d});
            out[static_cast<std::size_t>(y) * out_w + x] = std::clamp(v, lo, hi);
        }
    }
    return GrayImage(out_w, out_h, std::move(out));
}

double sharpness(const GrayImage& img) {
    if (img.width() < 3 || img.height() < 3) {
        throw Error(ErrorKind::TooSmall, "sharpness needs at least a 3x3 image");
    }
    std::vector<double> response;
    response.reserve(static_cast<std::size_t>(img.width() - 2) * (img.height() - 2));
    for (int y = 1; y + 1 < img.height(); ++y) {
        const auto up = img.row(y - 1);
        const auto mid = img.row(y);
        const auto down = img.row(y + 1);
        for (int x = 1; x + 1 < img.width(); ++x) {
            response.push_back(up[x] + down[x] + mid[x - 1] + mid[x + 1] - 4.0 * mid[x]);
        }
    }
    const double n = static_cast<double>(response.size());
    double mean = 0.0;
    for (double r : response) mean += r;
    mean /= n;
    double var = 0.0;
    for (double r : response) var += (r - mean) * (r - mean);
    return var / n;
}

GrayImage box_blur3(const GrayImage& img) {
    const int w = img.width();
    const int h = img.height();
    std::vector<double> out(img.size());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int dy = -1; dy <= 1; ++dy) {
                const int yy = std::clamp(y + dy, 0, h - 1);
                for (int dx = -1; dx <= 1; ++dx) {
                    acc += img.at(std::clamp(x + dx, 0, w - 1), yy);
                }
            }
            out[static_cast<std::size_t>(y) * w + x] = std::clamp(acc / 9.0, 0.0, 255.0);
        }
    }
    return GrayImage(w, h, std::move(out));
}

}  // namespace terrabench
