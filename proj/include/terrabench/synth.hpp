#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "terrabench/forest.hpp"
#include "terrabench/image.hpp"

namespace terrabench {

/// Procedural stand-ins for the six terrain classes, one generator per label:
/// asphalt = fine noise, carpet = woven stripes, cobblestone = cell mosaic,
/// grass = directional streaks, mulch = coarse blobs, tile = grid lines.
using TextureClass = TerrainLabel;

inline constexpr int kMinTextureSide = 32;

/// Deterministic per (cls, side, seed). Pixel values are whole numbers so
/// a PNG round trip is lossless. Structural features scale with `side`.
GrayImage gen_texture(TextureClass cls, int side, std::uint64_t seed);

/// Grid geometry used by the tile generator for a given (side, seed).
struct TileLayout {
    int period = 0;  // pixels between grout lines
    int offset_x = 0;
    int offset_y = 0;
    int line_width = 0;
};
TileLayout tile_layout(int side, std::uint64_t seed);

using ClassCountsProfile = std::array<int, kNumClasses>;

/// Per-class image counts of the reference walking dataset (3992 images).
inline constexpr ClassCountsProfile kFieldProfile = {566, 648, 1041, 984, 168, 585};

struct ManifestEntry {
    std::string path;  // relative to the corpus root
    TerrainLabel label;
    std::uint64_t seed;
};

/// Seed of file `index` of class `cls`; independent of generation order.
std::uint64_t corpus_file_seed(std::uint64_t corpus_seed, TerrainLabel cls, int index);

/// Writes root/<class>/<class>_NNNNN.png plus root/manifest.csv.
std::vector<ManifestEntry> gen_corpus(const ClassCountsProfile& counts, int side, std::uint64_t seed,
                                      const std::filesystem::path& root, unsigned threads = 0);

}  // namespace terrabench
