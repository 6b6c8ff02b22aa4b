#include "terrabench/forest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

#include "parallel.hpp"
#include "terrabench/error.hpp"
#include "terrabench/rng.hpp"

namespace terrabench {

namespace {

constexpr std::array<std::string_view, kNumClasses> kLabelNames = {
    "asphalt", "carpet", "cobblestone", "grass", "mulch", "tile"};

}  // namespace

std::string_view label_name(TerrainLabel label) noexcept {
    return kLabelNames[static_cast<std::size_t>(to_index(label))];
}

std::optional<TerrainLabel> label_from_name(std::string_view name) noexcept {
    for (int i = 0; i < kNumClasses; ++i) {
        if (kLabelNames[static_cast<std::size_t>(i)] == name) return static_cast<TerrainLabel>(i);
    }
    return std::nullopt;
}

TerrainLabel label_from_index(int index) {
    if (index < 0 || index >= kNumClasses) {
        throw Error(ErrorKind::Shape, "class index out of range: " + std::to_string(index));
    }
    return static_cast<TerrainLabel>(index);
}

const TreeNode& DecisionTree::leaf_for(std::span<const double> x) const {
    const TreeNode* node = &nodes.front();
    while (!node->is_leaf()) {
        const auto f = static_cast<std::size_t>(node->feature);
        node = &nodes[static_cast<std::size_t>(x[f] <= node->threshold ? node->left : node->right)];
    }
    return *node;
}

int DecisionTree::depth() const {
    std::function<int(int)> walk = [&](int i) -> int {
        const TreeNode& n = nodes[static_cast<std::size_t>(i)];
        return n.is_leaf() ? 0 : 1 + std::max(walk(n.left), walk(n.right));
    };
    return nodes.empty() ? 0 : walk(0);
}

namespace {

using u128 = unsigned __int128;

/// sum_k c_k^2 / n kept as an exact fraction so equal-impurity candidates
/// compare equal and the lowest-index tie rule is well defined.
struct Score {
    std::uint64_t num = 0;
    std::uint64_t den = 1;

    bool operator>(const Score& o) const {
        return static_cast<u128>(num) * o.den > static_cast<u128>(o.num) * den;
    }
};

std::uint64_t sum_sq(const ClassCounts& c) {
    std::uint64_t s = 0;
    for (auto v : c) s += static_cast<std::uint64_t>(v) * v;
    return s;
}

struct SplitChoice {
    int feature = -1;
    double threshold = 0.0;
};

class TreeBuilder {
public:
    TreeBuilder(std::span<const LabeledSample> samples, int n_features, int max_features, Rng& rng)
        : samples_(samples), n_features_(n_features), max_features_(max_features), rng_(rng) {}

    DecisionTree build(std::vector<std::size_t> indices) {
        grow(std::move(indices));
        return std::move(tree_);
    }

private:
    int grow(std::vector<std::size_t> idx) {
        const int id = static_cast<int>(tree_.nodes.size());
        tree_.nodes.emplace_back();

        ClassCounts counts{};
        for (auto i : idx) ++counts[static_cast<std::size_t>(to_index(samples_[i].label))];
        const int classes_present =
            static_cast<int>(std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }));

        SplitChoice split;
        if (idx.size() >= 2 && classes_present > 1) split = best_split(idx, counts);
        if (split.feature < 0) {
            tree_.nodes[static_cast<std::size_t>(id)].counts = counts;
            return id;
        }

        std::vector<std::size_t> left, right;
        const auto f = static_cast<std::size_t>(split.feature);
        for (auto i : idx) (samples_[i].features[f] <= split.threshold ? left : right).push_back(i);
        idx.clear();
        idx.shrink_to_fit();

        const int l = grow(std::move(left));
        const int r = grow(std::move(right));
        TreeNode& node = tree_.nodes[static_cast<std::size_t>(id)];
        node.feature = split.feature;
        node.threshold = split.threshold;
        node.left = l;
        node.right = r;
        return id;
    }

    std::vector<int> draw_features() {
        std::vector<int> pool(static_cast<std::size_t>(n_features_));
        for (int i = 0; i < n_features_; ++i) pool[static_cast<std::size_t>(i)] = i;
        for (int k = 0; k < max_features_; ++k) {
            const auto remaining = static_cast<std::uint64_t>(n_features_ - k);
            const auto j = static_cast<std::size_t>(k) + uniform_index(rng_, remaining);
            std::swap(pool[static_cast<std::size_t>(k)], pool[j]);
        }
        pool.resize(static_cast<std::size_t>(max_features_));
        std::sort(pool.begin(), pool.end());
        return pool;
    }

    SplitChoice best_split(const std::vector<std::size_t>& idx, const ClassCounts& counts) {
        const auto n = static_cast<std::uint64_t>(idx.size());
        // A split must strictly beat the parent's own score to reduce impurity.
        Score best{sum_sq(counts), n};
        SplitChoice choice;

        std::vector<std::pair<double, int>> column(idx.size());
        for (int f : draw_features()) {
            const auto fi = static_cast<std::size_t>(f);
            for (std::size_t k = 0; k < idx.size(); ++k) {
                const auto& s = samples_[idx[k]];
                column[k] = {s.features[fi], to_index(s.label)};
            }
            std::sort(column.begin(), column.end());

            ClassCounts left{};
            ClassCounts right = counts;
            for (std::size_t k = 0; k + 1 < column.size(); ++k) {
                const auto c = static_cast<std::size_t>(column[k].second);
                ++left[c];
                --right[c];
                const double lo = column[k].first;
                const double hi = column[k + 1].first;
                if (!(lo < hi)) continue;
                const auto nl = static_cast<std::uint64_t>(k + 1);
                const auto nr = n - nl;
                const Score candidate{sum_sq(left) * nr + sum_sq(right) * nl, nl * nr};
                if (candidate > best) {
                    best = candidate;
                    double thr = lo + (hi - lo) / 2.0;
                    if (!(thr < hi)) thr = lo;
                    choice = {f, thr};
                }
            }
        }
        return choice;
    }

    std::span<const LabeledSample> samples_;
    int n_features_;
    int max_features_;
    Rng& rng_;
    DecisionTree tree_;
};

void check_samples(std::span<const LabeledSample> samples) {
    if (samples.empty()) throw Error(ErrorKind::EmptyDataset, "training set is empty");
    const auto f = samples.front().features.size();
    if (f == 0) throw Error(ErrorKind::Shape, "feature vectors are empty");
    for (const auto& s : samples) {
        if (s.features.size() != f) {
            throw Error(ErrorKind::Shape, "inconsistent feature lengths: " + std::to_string(f) +
                                              " vs " + std::to_string(s.features.size()));
        }
        const int li = to_index(s.label);
        if (li < 0 || li >= kNumClasses) throw Error(ErrorKind::Shape, "label out of range");
    }
}

}  // namespace

ForestModel train_forest(std::span<const LabeledSample> samples, const TrainOptions& options) {
    check_samples(samples);
    if (options.n_trees < 1) throw Error(ErrorKind::Config, "n_trees must be >= 1");

    ForestModel model;
    model.n_features = static_cast<int>(samples.front().features.size());
    model.seed = options.seed;
    model.max_features = options.max_features.value_or(
        std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(model.n_features))))));
    if (model.max_features < 1 || model.max_features > model.n_features) {
        throw Error(ErrorKind::Config, "max_features must be within [1, n_features]");
    }
    model.trees.resize(static_cast<std::size_t>(options.n_trees));

    const auto n = static_cast<std::uint64_t>(samples.size());
    auto build_tree = [&](std::size_t t) {
        Rng rng(options.seed ^ static_cast<std::uint64_t>(t));
        std::vector<std::size_t> boot(samples.size());
        for (std::size_t i = 0; i < boot.size(); ++i) {
            boot[i] = options.bootstrap ? static_cast<std::size_t>(uniform_index(rng, n)) : i;
        }
        TreeBuilder builder(samples, model.n_features, model.max_features, rng);
        model.trees[t] = builder.build(std::move(boot));
    };

    detail::parallel_for(model.trees.size(), options.threads, build_tree);
    return model;
}

ForestModel train_forest(std::span<const LabeledSample> samples, int n_trees, std::uint64_t seed) {
    TrainOptions options;
    options.n_trees = n_trees;
    options.seed = seed;
    return train_forest(samples, options);
}

Prediction predict(const ForestModel& model, std::span<const double> features) {
    if (static_cast<int>(features.size()) != model.n_features) {
        throw Error(ErrorKind::Shape, "model expects " + std::to_string(model.n_features) +
                                          " features, got " + std::to_string(features.size()));
    }
    if (model.trees.empty()) throw Error(ErrorKind::ModelMalformed, "model has no trees");

    Prediction out{TerrainLabel::Asphalt, {}};
    for (const auto& tree : model.trees) {
        const auto& leaf = tree.leaf_for(features);
        double total = 0.0;
        for (auto c : leaf.counts) total += c;
        for (std::size_t k = 0; k < kNumClasses; ++k) out.probabilities[k] += leaf.counts[k] / total;
    }
    const double n_trees = static_cast<double>(model.trees.size());
    for (auto& p : out.probabilities) p /= n_trees;

    const auto best = std::max_element(out.probabilities.begin(), out.probabilities.end());
    out.label = static_cast<TerrainLabel>(best - out.probabilities.begin());
    return out;
}

// ---------------------------------------------------------------------------
// JSON model format

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json node_to_json(const DecisionTree& tree, int id) {
    const TreeNode& n = tree.nodes[static_cast<std::size_t>(id)];
    ordered_json j;
    if (n.is_leaf()) {
        j["leaf"] = n.counts;
    } else {
        j["feat"] = n.feature;
        j["thr"] = n.threshold;
        j["l"] = node_to_json(tree, n.left);
        j["r"] = node_to_json(tree, n.right);
    }
    return j;
}

[[noreturn]] void malformed(const std::string& why) {
    throw Error(ErrorKind::ModelMalformed, "malformed model: " + why);
}

int node_from_json(const ordered_json& j, int n_features, DecisionTree& tree) {
    if (!j.is_object()) malformed("tree node is not an object");
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    if (j.contains("leaf")) {
        const auto& leaf = j.at("leaf");
        if (!leaf.is_array() || leaf.size() != kNumClasses) malformed("leaf must hold 6 counts");
        ClassCounts counts{};
        std::uint64_t total = 0;
        for (std::size_t k = 0; k < kNumClasses; ++k) {
            if (!leaf[k].is_number_unsigned()) malformed("leaf counts must be non-negative integers");
            counts[k] = leaf[k].get<std::uint32_t>();
            total += counts[k];
        }
        if (total == 0) malformed("leaf counts sum to zero");
        tree.nodes[static_cast<std::size_t>(id)].counts = counts;
        return id;
    }
    for (const char* key : {"feat", "thr", "l", "r"}) {
        if (!j.contains(key)) malformed(std::string("split node missing \"") + key + "\"");
    }
    if (!j.at("feat").is_number_integer() || !j.at("thr").is_number()) malformed("bad split fields");
    const int feat = j.at("feat").get<int>();
    if (feat < 0 || feat >= n_features) malformed("feature index out of range");
    const double thr = j.at("thr").get<double>();
    const int l = node_from_json(j.at("l"), n_features, tree);
    const int r = node_from_json(j.at("r"), n_features, tree);
    TreeNode& node = tree.nodes[static_cast<std::size_t>(id)];
    node.feature = feat;
    node.threshold = thr;
    node.left = l;
    node.right = r;
    return id;
}

}  // namespace

std::string model_to_json(const ForestModel& model) {
    ordered_json j;
    j["schema_version"] = kModelSchemaVersion;
    j["n_classes"] = model.n_classes;
    j["n_features"] = model.n_features;
    j["n_trees"] = model.trees.size();
    j["seed"] = model.seed;
    j["max_features"] = model.max_features;
    auto& trees = j["trees"] = ordered_json::array();
    for (const auto& t : model.trees) trees.push_back(node_to_json(t, 0));
    return j.dump() + "\n";
}

ForestModel model_from_json(std::string_view text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::exception& e) {
        malformed(e.what());
    }
    if (!j.is_object()) malformed("top level is not an object");
    if (!j.contains("schema_version") || !j.at("schema_version").is_number_integer()) {
        malformed("missing schema_version");
    }
    const auto version = j.at("schema_version").get<long long>();
    if (version != kModelSchemaVersion) {
        throw Error(ErrorKind::ModelVersion, "unsupported model schema_version " + std::to_string(version) +
                                                 " (expected " + std::to_string(kModelSchemaVersion) + ")");
    }
    try {
        ForestModel m;
        m.n_classes = j.at("n_classes").get<int>();
        m.n_features = j.at("n_features").get<int>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.max_features = j.at("max_features").get<int>();
        const auto n_trees = j.at("n_trees").get<std::size_t>();
        const auto& trees = j.at("trees");
        if (m.n_classes != kNumClasses) malformed("n_classes must be 6");
        if (m.n_features < 1) malformed("n_features must be positive");
        if (!trees.is_array() || trees.empty() || trees.size() != n_trees) {
            malformed("trees array does not match n_trees");
        }
        for (const auto& t : trees) {
            DecisionTree tree;
            node_from_json(t, m.n_features, tree);
            m.trees.push_back(std::move(tree));
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        malformed(e.what());
    }
}

void save_model(const ForestModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
    out << model_to_json(model);
    if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

ForestModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open model " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return model_from_json(buf.str());
}

}  // namespace terrabench
