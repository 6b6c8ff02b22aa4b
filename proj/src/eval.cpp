#include "terrabench/eval.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "parallel.hpp"
#include "terrabench/error.hpp"
#include "terrabench/rng.hpp"

namespace terrabench {

namespace fs = std::filesystem;

std::vector<DatasetEntry> scan_dataset(const fs::path& root) {
    std::error_code ec;
    if (!fs::is_directory(root, ec)) {
        throw Error(ErrorKind::Io, "dataset root is not a directory: " + root.string());
    }
    std::vector<DatasetEntry> entries;
    for (TerrainLabel label : kAllLabels) {
        const fs::path dir = root / std::string(label_name(label));
        if (!fs::is_directory(dir, ec)) continue;
        std::vector<fs::path> files;
        for (const auto& de : fs::directory_iterator(dir)) {
            if (!de.is_regular_file()) continue;
            std::string ext = de.path().extension().string();
            std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
            if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") files.push_back(de.path());
        }
        if (files.empty()) {
            throw Error(ErrorKind::EmptyDataset, "class directory has no images: " + dir.string());
        }
        std::sort(files.begin(), files.end());
        for (auto& f : files) entries.push_back({std::move(f), label});
    }
    if (entries.empty()) throw Error(ErrorKind::EmptyDataset, "no class directories under " + root.string());
    return entries;
}

void SplitSpec::validate() const {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw Error(ErrorKind::Config, "train_fraction must lie in (0, 1)");
    }
}

SplitIndices split_indices(std::size_t n, const SplitSpec& spec) {
    spec.validate();
    if (n < 2) throw Error(ErrorKind::TooSmall, "need at least 2 samples to split");
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(spec.seed);
    for (std::size_t i = n - 1; i > 0; --i) {
        std::swap(order[i], order[static_cast<std::size_t>(uniform_index(rng, i + 1))]);
    }
    // The 1e-9 guard keeps 0.7 * 10 from rounding up to 8.
    auto n_train = static_cast<std::size_t>(std::ceil(spec.train_fraction * static_cast<double>(n) - 1e-9));
    n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
    SplitIndices out;
    out.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    return out;
}

std::uint64_t ConfusionMatrix::total() const noexcept {
    std::uint64_t t = 0;
    for (const auto& row : counts)
        for (auto v : row) t += v;
    return t;
}

std::uint64_t ConfusionMatrix::trace() const noexcept {
    std::uint64_t t = 0;
    for (std::size_t i = 0; i < kNumClasses; ++i) t += counts[i][i];
    return t;
}

std::uint64_t ConfusionMatrix::row_sum(TerrainLabel known) const noexcept {
    std::uint64_t t = 0;
    for (auto v : counts[static_cast<std::size_t>(to_index(known))]) t += v;
    return t;
}

ConfusionMatrix accumulate_confusion(std::span<const TerrainLabel> truths, std::span<const TerrainLabel> preds) {
    if (truths.size() != preds.size()) {
        throw Error(ErrorKind::Shape, "truth and prediction lists differ in length (" + std::to_string(truths.size()) +
                                          " vs " + std::to_string(preds.size()) + ")");
    }
    if (truths.empty()) throw Error(ErrorKind::Shape, "no predictions to tally");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < truths.size(); ++i) {
        ++cm.counts[static_cast<std::size_t>(to_index(truths[i]))][static_cast<std::size_t>(to_index(preds[i]))];
    }
    return cm;
}

double accuracy(const ConfusionMatrix& cm) {
    const auto total = cm.total();
    if (total == 0) throw Error(ErrorKind::EmptyDataset, "confusion matrix is empty");
    return static_cast<double>(cm.trace()) / static_cast<double>(total);
}

void EvalConfig::validate() const {
    if (resolutions.empty()) throw Error(ErrorKind::Config, "no resolutions configured");
    lbp.validate();
    split.validate();
    for (int r : resolutions) {
        if (r < 2 * lbp.margin() + 1) {
            throw Error(ErrorKind::Config, "resolution " + std::to_string(r) + " is too small for LBP radius " +
                                               std::to_string(lbp.radius));
        }
    }
    if (crop_side < 1) throw Error(ErrorKind::Config, "crop side must be positive");
    if (n_trees < 1) throw Error(ErrorKind::Config, "n_trees must be >= 1");
}

namespace {

using ImageSource = std::function<std::optional<GrayImage>(std::size_t, std::string*)>;

struct FeatureTable {
    // features[resolution index][usable sample index]
    std::vector<std::vector<std::vector<double>>> features;
    std::vector<TerrainLabel> labels;
    std::vector<std::size_t> skipped;  // source indices
    std::vector<std::string> reasons;
};

FeatureTable extract_features(std::size_t n, const std::vector<TerrainLabel>& labels, const ImageSource& source,
                              const EvalConfig& config) {
    const std::size_t n_res = config.resolutions.size();
    std::vector<std::vector<std::vector<double>>> per_image(n);
    std::vector<std::string> why(n);

    detail::parallel_for(n, config.threads, [&](std::size_t i) {
        auto img = source(i, &why[i]);
        if (!img) return;
        if (std::min(img->width(), img->height()) < config.crop_side) {
            why[i] = "smaller than crop side " + std::to_string(config.crop_side);
            return;
        }
        const GrayImage cropped = center_crop(*img, config.crop_side);
        img.reset();
        std::vector<std::vector<double>> feats;
        feats.reserve(n_res);
        for (int r : config.resolutions) {
            const GrayImage scaled = resize_bilinear(cropped, r, r);
            feats.push_back(lbp_histogram(scaled, config.lbp).bins);
        }
        per_image[i] = std::move(feats);
    });

    FeatureTable table;
    table.features.resize(n_res);
    for (std::size_t i = 0; i < n; ++i) {
        if (per_image[i].empty()) {
            table.skipped.push_back(i);
            table.reasons.push_back(why[i]);
            continue;
        }
        for (std::size_t r = 0; r < n_res; ++r) table.features[r].push_back(std::move(per_image[i][r]));
        table.labels.push_back(labels[i]);
    }
    return table;
}

AccuracyReport run_protocol(const FeatureTable& table, const EvalConfig& config) {
    AccuracyReport report;
    report.split_seed = config.split.seed;
    report.forest_seed = config.forest_seed;

    const std::size_t n = table.labels.size();
    if (n < 2) throw Error(ErrorKind::EmptyDataset, "fewer than 2 usable images after skipping");
    const SplitIndices split = split_indices(n, config.split);

    for (std::size_t r = 0; r < config.resolutions.size(); ++r) {
        std::vector<LabeledSample> train;
        train.reserve(split.train.size());
        for (auto i : split.train) train.push_back({table.features[r][i], table.labels[i]});

        TrainOptions opts;
        opts.n_trees = config.n_trees;
        opts.seed = config.forest_seed;
        opts.threads = config.threads;
        const ForestModel model = train_forest(train, opts);

        std::vector<TerrainLabel> truths, preds;
        for (auto i : split.test) {
            truths.push_back(table.labels[i]);
            preds.push_back(predict(model, table.features[r][i]).label);
        }
        ResolutionResult row;
        row.resolution = config.resolutions[r];
        row.confusion = accumulate_confusion(truths, preds);
        row.accuracy = accuracy(row.confusion);
        row.skipped = table.skipped.size();
        report.rows.push_back(row);
    }
    return report;
}

}  // namespace

AccuracyReport evaluate_resolutions(std::span<const LabeledImage> images, const EvalConfig& config) {
    config.validate();
    std::vector<TerrainLabel> labels;
    for (const auto& li : images) labels.push_back(li.label);
    const auto table = extract_features(
        images.size(), labels, [&](std::size_t i, std::string*) { return std::optional<GrayImage>(images[i].image); },
        config);
    auto report = run_protocol(table, config);
    for (std::size_t k = 0; k < table.skipped.size(); ++k) {
        report.skipped_files.push_back({"#" + std::to_string(table.skipped[k]), table.reasons[k]});
    }
    return report;
}

AccuracyReport per_resolution_eval(const fs::path& root, const EvalConfig& config) {
    config.validate();
    const auto entries = scan_dataset(root);
    std::vector<TerrainLabel> labels;
    for (const auto& e : entries) labels.push_back(e.label);
    const auto table = extract_features(
        entries.size(), labels,
        [&](std::size_t i, std::string* why) -> std::optional<GrayImage> {
            try {
                return load_gray(entries[i].path);
            } catch (const Error& e) {
                *why = e.what();
                return std::nullopt;
            }
        },
        config);
    auto report = run_protocol(table, config);
    for (std::size_t k = 0; k < table.skipped.size(); ++k) {
        report.skipped_files.push_back({entries[table.skipped[k]].path, table.reasons[k]});
    }
    return report;
}

std::vector<LabeledSample> featurize_dataset(const fs::path& root, int crop_side, int resolution,
                                             const LbpParams& lbp, std::vector<SkippedFile>* skipped,
                                             unsigned threads) {
    EvalConfig config;
    config.resolutions = {resolution};
    config.crop_side = crop_side;
    config.lbp = lbp;
    config.threads = threads;
    config.validate();
    const auto entries = scan_dataset(root);
    std::vector<TerrainLabel> labels;
    for (const auto& e : entries) labels.push_back(e.label);
    auto table = extract_features(
        entries.size(), labels,
        [&](std::size_t i, std::string* why) -> std::optional<GrayImage> {
            try {
                return load_gray(entries[i].path);
            } catch (const Error& e) {
                *why = e.what();
                return std::nullopt;
            }
        },
        config);
    if (skipped) {
        for (std::size_t k = 0; k < table.skipped.size(); ++k) {
            skipped->push_back({entries[table.skipped[k]].path, table.reasons[k]});
        }
    }
    std::vector<LabeledSample> samples;
    samples.reserve(table.labels.size());
    for (std::size_t i = 0; i < table.labels.size(); ++i) {
        samples.push_back({std::move(table.features[0][i]), table.labels[i]});
    }
    if (samples.empty()) throw Error(ErrorKind::EmptyDataset, "no usable images under " + root.string());
    return samples;
}

// --- rendering ------------------------------------------------------------------

std::string report_to_json(const AccuracyReport& report) {
    nlohmann::ordered_json j;
    j["split_seed"] = report.split_seed;
    j["forest_seed"] = report.forest_seed;
    auto& rows = j["rows"] = nlohmann::ordered_json::array();
    for (const auto& r : report.rows) {
        nlohmann::ordered_json row;
        row["resolution"] = r.resolution;
        row["accuracy"] = r.accuracy;
        row["confusion"] = r.confusion.counts;
        row["skipped"] = r.skipped;
        rows.push_back(std::move(row));
    }
    return j.dump(2) + "\n";
}

std::string report_to_text(const AccuracyReport& report) {
    static constexpr std::array<const char*, kNumClasses> kShort = {"As", "Ca", "Co", "Gr", "Mu", "Ti"};
    std::ostringstream os;
    os << "split_seed " << report.split_seed << "  forest_seed " << report.forest_seed << "\n\n";
    os << std::left << std::setw(12) << "resolution" << std::right << std::setw(10) << "accuracy" << std::setw(10)
       << "skipped" << "\n";
    for (const auto& r : report.rows) {
        os << std::left << std::setw(12) << r.resolution << std::right << std::setw(10) << std::fixed
           << std::setprecision(4) << r.accuracy << std::setw(10) << r.skipped << "\n";
    }
    for (const auto& r : report.rows) {
        os << "\nconfusion " << r.resolution << "x" << r.resolution << " (rows known, columns predicted)\n    ";
        for (auto s : kShort) os << std::setw(6) << s;
        os << "\n";
        for (std::size_t i = 0; i < kNumClasses; ++i) {
            os << std::left << std::setw(4) << kShort[i] << std::right;
            for (auto v : r.confusion.counts[i]) os << std::setw(6) << v;
            os << "\n";
        }
    }
    return os.str();
}

std::string report_to_csv(const AccuracyReport& report) {
    std::ostringstream os;
    os << "resolution,accuracy,skipped";
    for (TerrainLabel k : kAllLabels)
        for (TerrainLabel p : kAllLabels) os << ',' << label_name(k) << "_as_" << label_name(p);
    os << "\n";
    for (const auto& r : report.rows) {
        os << r.resolution << ',' << std::setprecision(17) << r.accuracy << ',' << r.skipped;
        for (const auto& row : r.confusion.counts)
            for (auto v : row) os << ',' << v;
        os << "\n";
    }
    return os.str();
}

}  // namespace terrabench
