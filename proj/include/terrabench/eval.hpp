#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "terrabench/forest.hpp"
#include "terrabench/image.hpp"
#include "terrabench/lbp.hpp"

namespace terrabench {

// --- dataset layout -----------------------------------------------------------

struct DatasetEntry {
    std::filesystem::path path;
    TerrainLabel label;
};

/// Lists root/<class>/*.{png,jpg,jpeg} for the six class directories, sorted
/// by class then file name. Absent class directories are allowed; an existing
/// but empty one, or a dataset with no images at all, is an EmptyDataset error.
std::vector<DatasetEntry> scan_dataset(const std::filesystem::path& root);

/// Anything that could not be used, with the reason. Such files are skipped.
struct SkippedFile {
    std::filesystem::path path;
    std::string reason;
};

// --- split --------------------------------------------------------------------

struct SplitSpec {
    double train_fraction = 0.7;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Seeded Fisher-Yates shuffle of 0..n-1; the first ceil(fraction * n) go to train.
SplitIndices split_indices(std::size_t n, const SplitSpec& spec);

template <typename T>
std::pair<std::vector<T>, std::vector<T>> split_dataset(std::span<const T> samples, const SplitSpec& spec) {
    const auto idx = split_indices(samples.size(), spec);
    std::pair<std::vector<T>, std::vector<T>> out;
    out.first.reserve(idx.train.size());
    out.second.reserve(idx.test.size());
    for (auto i : idx.train) out.first.push_back(samples[i]);
    for (auto i : idx.test) out.second.push_back(samples[i]);
    return out;
}

// --- confusion ----------------------------------------------------------------

/// counts[known][predicted].
struct ConfusionMatrix {
    std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses> counts{};

    std::uint64_t total() const noexcept;
    std::uint64_t trace() const noexcept;
    std::uint64_t row_sum(TerrainLabel known) const noexcept;
    bool operator==(const ConfusionMatrix&) const = default;
};

ConfusionMatrix accumulate_confusion(std::span<const TerrainLabel> truths, std::span<const TerrainLabel> preds);

/// trace / total; EmptyDataset error when the matrix holds no counts.
double accuracy(const ConfusionMatrix& cm);

// --- per-resolution protocol --------------------------------------------------

struct EvalConfig {
    std::vector<int> resolutions{32, 64, 128, 256, 512, 1024};
    int crop_side = 1024;
    SplitSpec split;
    LbpParams lbp;
    int n_trees = 100;
    std::uint64_t forest_seed = 0;
    unsigned threads = 0;

    void validate() const;
};

struct ResolutionResult {
    int resolution = 0;
    double accuracy = 0.0;
    ConfusionMatrix confusion;
    std::size_t skipped = 0;
};

struct AccuracyReport {
    std::uint64_t split_seed = 0;
    std::uint64_t forest_seed = 0;
    std::vector<ResolutionResult> rows;
    std::vector<SkippedFile> skipped_files;
};

/// An image already associated with its class, as consumed by the protocol.
struct LabeledImage {
    GrayImage image;
    TerrainLabel label;
};

/// Centre-crop to crop_side, resize to each resolution, extract LBP, split
/// once on sample identity, then train and test one forest per resolution.
AccuracyReport evaluate_resolutions(std::span<const LabeledImage> images, const EvalConfig& config);

/// Same protocol reading the class-directory layout from disk. Undecodable or
/// undersized files are skipped and counted.
AccuracyReport per_resolution_eval(const std::filesystem::path& root, const EvalConfig& config);

/// Loads, crops, resizes and featurizes a dataset at a single resolution,
/// the path used to train deployable models.
std::vector<LabeledSample> featurize_dataset(const std::filesystem::path& root, int crop_side, int resolution,
                                             const LbpParams& lbp, std::vector<SkippedFile>* skipped,
                                             unsigned threads = 0);

std::string report_to_json(const AccuracyReport& report);
std::string report_to_text(const AccuracyReport& report);
std::string report_to_csv(const AccuracyReport& report);

}  // namespace terrabench
