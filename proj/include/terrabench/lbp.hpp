#pragma once

#include <vector>

#include "terrabench/image.hpp"

namespace terrabench {

/// Rotation-invariant uniform LBP configuration. Defaults are the
/// terrain-pipeline values (24 neighbours on a radius-8 circle).
struct LbpParams {
    int neighbors = 24;
    double radius = 8.0;

    void validate() const;
    /// Pixels excluded on each side of the image: ceil(radius).
    int margin() const;
    int n_bins() const { return neighbors + 2; }
};

/// Normalized histogram of rotation-invariant uniform codes, P + 2 bins.
struct LbpHistogram {
    std::vector<double> bins;
};

/// Code in [0, P+1] for the pixel at (x, y). Neighbours are sampled at
/// (x + R cos(2 pi p / P), y - R sin(2 pi p / P)) with bilinear interpolation;
/// a neighbour contributes a 1 bit when it is >= the centre value.
int lbp_code(const GrayImage& img, int x, int y, const LbpParams& params);

/// Histogram over every pixel at least margin() from all borders.
LbpHistogram lbp_histogram(const GrayImage& img, const LbpParams& params = {});

}  // namespace terrabench
