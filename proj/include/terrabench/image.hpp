#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace terrabench {

/// Single-channel raster with real-valued luminance in [0, 255], row-major.
///
/// Images are immutable once built. Construction validates the dimensions and
/// the value range and throws Error(InvalidImage) on violation.
class GrayImage {
public:
    GrayImage(int width, int height, std::vector<double> pixels);

    static GrayImage filled(int width, int height, double value);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return pixels_.size(); }

    double at(int x, int y) const noexcept {
        return pixels_[static_cast<std::size_t>(y) * width_ + x];
    }
    std::span<const double> row(int y) const noexcept {
        return {pixels_.data() + static_cast<std::size_t>(y) * width_,
                static_cast<std::size_t>(width_)};
    }
    std::span<const double> pixels() const noexcept { return pixels_; }

    bool operator==(const GrayImage&) const = default;

private:
    int width_;
    int height_;
    std::vector<double> pixels_;
};

/// Rec. 601 luma of an 8-bit RGB triple.
constexpr double luma601(double r, double g, double b) noexcept {
    return 0.299 * r + 0.587 * g + 0.114 * b;
}

/// Decodes a PNG or JPEG (8-bit, gray or color) into luminance.
GrayImage load_gray(const std::filesystem::path& path);

/// Writes the image as an 8-bit grayscale PNG (values rounded to nearest).
void save_png(const GrayImage& img, const std::filesystem::path& path);

/// Square crop centred with floor((dim - side) / 2) offsets.
GrayImage center_crop(const GrayImage& img, int side);

/// Bilinear resampling with half-pixel centres and border clamping.
GrayImage resize_bilinear(const GrayImage& img, int out_w, int out_h);

/// Variance of the 4-neighbour Laplacian response over interior pixels.
double sharpness(const GrayImage& img);

/// One pass of a 3x3 mean filter, replicating edges.
GrayImage box_blur3(const GrayImage& img);

}  // namespace terrabench
