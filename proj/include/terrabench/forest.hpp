#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace terrabench {

enum class TerrainLabel : int { Asphalt = 0, Carpet, Cobblestone, Grass, Mulch, Tile };

inline constexpr int kNumClasses = 6;
inline constexpr std::array<TerrainLabel, kNumClasses> kAllLabels = {
    TerrainLabel::Asphalt, TerrainLabel::Carpet, TerrainLabel::Cobblestone,
    TerrainLabel::Grass,   TerrainLabel::Mulch,  TerrainLabel::Tile};

constexpr int to_index(TerrainLabel label) noexcept { return static_cast<int>(label); }

/// Lower-case directory name: asphalt, carpet, cobblestone, grass, mulch, tile.
std::string_view label_name(TerrainLabel label) noexcept;
std::optional<TerrainLabel> label_from_name(std::string_view name) noexcept;
TerrainLabel label_from_index(int index);

struct LabeledSample {
    std::vector<double> features;
    TerrainLabel label;
};

using ClassCounts = std::array<std::uint32_t, kNumClasses>;

/// Flat CART tree. Node 0 is the root; a node with feature < 0 is a leaf.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;  // x[feature] <= threshold goes left
    int left = -1;
    int right = -1;
    ClassCounts counts{};  // populated for leaves only

    bool is_leaf() const noexcept { return feature < 0; }
};

struct DecisionTree {
    std::vector<TreeNode> nodes;

    const TreeNode& leaf_for(std::span<const double> x) const;
    int depth() const;
};

struct ForestModel {
    std::vector<DecisionTree> trees;
    int n_classes = kNumClasses;
    int n_features = 0;
    std::uint64_t seed = 0;
    int max_features = 0;
};

struct TrainOptions {
    int n_trees = 100;
    std::uint64_t seed = 0;
    /// Features drawn per node; floor(sqrt(F)) when unset.
    std::optional<int> max_features;
    /// Train each tree on n draws with replacement; false uses every sample once.
    bool bootstrap = true;
    /// Worker threads for tree construction; 0 picks the hardware count.
    unsigned threads = 0;
};

/// Bootstrap-aggregated Gini trees. Tree i draws from an mt19937_64 seeded
/// with (seed XOR i), so results do not depend on scheduling.
ForestModel train_forest(std::span<const LabeledSample> samples, const TrainOptions& options);
ForestModel train_forest(std::span<const LabeledSample> samples, int n_trees, std::uint64_t seed);

struct Prediction {
    TerrainLabel label;
    std::array<double, kNumClasses> probabilities;
};

/// Soft vote: mean of per-tree leaf distributions, argmax with lowest-index ties.
Prediction predict(const ForestModel& model, std::span<const double> features);

inline constexpr int kModelSchemaVersion = 1;

std::string model_to_json(const ForestModel& model);
ForestModel model_from_json(std::string_view text);
void save_model(const ForestModel& model, const std::filesystem::path& path);
ForestModel load_model(const std::filesystem::path& path);

}  // namespace terrabench
