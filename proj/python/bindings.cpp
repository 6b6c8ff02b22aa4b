#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <string>
#include <vector>

#include "terrabench/error.hpp"
#include "terrabench/eval.hpp"
#include "terrabench/forest.hpp"
#include "terrabench/image.hpp"
#include "terrabench/keyframe.hpp"
#include "terrabench/lbp.hpp"
#include "terrabench/synth.hpp"

namespace py = pybind11;
namespace tb = terrabench;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

tb::GrayImage to_image(const Array& a) {
    if (a.ndim() != 2) throw tb::Error(tb::ErrorKind::Shape, "image must be a 2-D array");
    const auto h = static_cast<int>(a.shape(0));
    const auto w = static_cast<int>(a.shape(1));
    std::vector<double> px(a.data(), a.data() + a.size());
    return tb::GrayImage(w, h, std::move(px));
}

Array to_array(const tb::GrayImage& img) {
    Array out({img.height(), img.width()});
    std::copy(img.pixels().begin(), img.pixels().end(), out.mutable_data());
    return out;
}

Array to_array(const std::vector<double>& v) {
    return Array(static_cast<py::ssize_t>(v.size()), v.data());
}

tb::TerrainLabel to_label(const py::object& o) {
    if (py::isinstance<py::str>(o)) {
        const auto name = o.cast<std::string>();
        if (auto l = tb::label_from_name(name)) return *l;
        throw tb::Error(tb::ErrorKind::Config, "unknown class name: " + name);
    }
    return tb::label_from_index(o.cast<int>());
}

std::vector<tb::LabeledSample> to_samples(const Array& x, const py::array_t<int, py::array::forcecast>& y) {
    if (x.ndim() != 2 || y.ndim() != 1 || x.shape(0) != y.shape(0)) {
        throw tb::Error(tb::ErrorKind::Shape, "expected X of shape (n, F) and y of shape (n,)");
    }
    const auto n = static_cast<std::size_t>(x.shape(0));
    const auto f = static_cast<std::size_t>(x.shape(1));
    std::vector<tb::LabeledSample> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = x.data() + i * f;
        out.push_back({std::vector<double>(row, row + f), tb::label_from_index(y.at(i))});
    }
    return out;
}

std::vector<tb::ImuSample> to_imu(const Array& t, const Array& accel) {
    if (t.ndim() != 1 || accel.ndim() != 2 || accel.shape(1) != 3 || accel.shape(0) != t.shape(0)) {
        throw tb::Error(tb::ErrorKind::Shape, "expected t of shape (n,) and accel of shape (n, 3)");
    }
    std::vector<tb::ImuSample> out(static_cast<std::size_t>(t.shape(0)));
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i].t = t.at(i);
        for (int k = 0; k < 3; ++k) out[i].accel[k] = accel.at(i, k);
    }
    return out;
}

py::dict prediction_dict(const tb::Prediction& p) {
    py::dict d;
    d["label"] = std::string(tb::label_name(p.label));
    d["index"] = tb::to_index(p.label);
    d["probabilities"] = to_array(std::vector<double>(p.probabilities.begin(), p.probabilities.end()));
    return d;
}

}  // namespace

PYBIND11_MODULE(_terrabench, m) {
    m.doc() = "Terrain texture recognition: LBP features, random forest, IMU key-frame selection";

    PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> error_type;
    error_type.call_once_and_store_result(
        [&]() { return py::exception<tb::Error>(m, "Error", PyExc_RuntimeError); });
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const tb::Error& e) {
            const std::string msg = "[" + std::string(tb::to_string(e.kind())) + "] " + e.what();
            py::set_error(error_type.get_stored(), msg.c_str());
        }
    });

    py::list labels;
    for (auto l : tb::kAllLabels) labels.append(std::string(tb::label_name(l)));
    m.attr("LABELS") = py::tuple(labels);

    // imaging
    m.def("load_gray", [](const std::filesystem::path& p) { return to_array(tb::load_gray(p)); }, py::arg("path"),
          "Decode a PNG/JPEG into a float64 luminance array of shape (H, W).");
    m.def("save_png", [](const Array& a, const std::filesystem::path& p) { tb::save_png(to_image(a), p); },
          py::arg("image"), py::arg("path"));
    m.def("center_crop", [](const Array& a, int side) { return to_array(tb::center_crop(to_image(a), side)); },
          py::arg("image"), py::arg("side"));
    m.def("resize_bilinear",
          [](const Array& a, int w, int h) { return to_array(tb::resize_bilinear(to_image(a), w, h)); },
          py::arg("image"), py::arg("width"), py::arg("height"));
    m.def("sharpness", [](const Array& a) { return tb::sharpness(to_image(a)); }, py::arg("image"));

    // features
    m.def(
        "lbp_histogram",
        [](const Array& a, int neighbors, double radius) {
            auto img = to_image(a);
            std::vector<double> bins;
            {
                py::gil_scoped_release nogil;
                bins = tb::lbp_histogram(img, tb::LbpParams{neighbors, radius}).bins;
            }
            return to_array(bins);
        },
        py::arg("image"), py::arg("neighbors") = 24, py::arg("radius") = 8.0,
        "Normalised rotation-invariant uniform LBP histogram with neighbors + 2 bins.");

    // classifier
    py::class_<tb::ForestModel>(m, "ForestModel")
        .def_property_readonly("n_trees", [](const tb::ForestModel& f) { return f.trees.size(); })
        .def_readonly("n_features", &tb::ForestModel::n_features)
        .def_readonly("n_classes", &tb::ForestModel::n_classes)
        .def_readonly("seed", &tb::ForestModel::seed)
        .def_readonly("max_features", &tb::ForestModel::max_features)
        .def("to_json", &tb::model_to_json)
        .def_static("from_json", [](const std::string& s) { return tb::model_from_json(s); })
        .def("save", [](const tb::ForestModel& f, const std::filesystem::path& p) { tb::save_model(f, p); })
        .def_static("load", [](const std::filesystem::path& p) { return tb::load_model(p); })
        .def(
            "predict",
            [](const tb::ForestModel& f, const Array& x) {
                return prediction_dict(tb::predict(f, std::span<const double>(x.data(), x.size())));
            },
            py::arg("features"));

    m.def(
        "train_forest",
        [](const Array& x, const py::array_t<int, py::array::forcecast>& y, int n_trees, std::uint64_t seed,
           std::optional<int> max_features) {
            auto samples = to_samples(x, y);
            tb::TrainOptions opts;
            opts.n_trees = n_trees;
            opts.seed = seed;
            opts.max_features = max_features;
            py::gil_scoped_release nogil;
            return tb::train_forest(samples, opts);
        },
        py::arg("X"), py::arg("y"), py::arg("n_trees") = 100, py::arg("seed") = 0,
        py::arg("max_features") = py::none());
    m.def(
        "predict",
        [](const tb::ForestModel& f, const Array& x) {
            return prediction_dict(tb::predict(f, std::span<const double>(x.data(), x.size())));
        },
        py::arg("model"), py::arg("features"));

    // eval
    m.def(
        "confusion_matrix",
        [](const py::array_t<int, py::array::forcecast>& truth, const py::array_t<int, py::array::forcecast>& pred) {
            std::vector<tb::TerrainLabel> t, p;
            for (py::ssize_t i = 0; i < truth.size(); ++i) t.push_back(tb::label_from_index(truth.data()[i]));
            for (py::ssize_t i = 0; i < pred.size(); ++i) p.push_back(tb::label_from_index(pred.data()[i]));
            const auto cm = tb::accumulate_confusion(t, p);
            py::array_t<long long> out({tb::kNumClasses, tb::kNumClasses});
            for (int r = 0; r < tb::kNumClasses; ++r)
                for (int c = 0; c < tb::kNumClasses; ++c) out.mutable_at(r, c) = cm.counts[r][c];
            return out;
        },
        py::arg("truth"), py::arg("pred"));
    m.def(
        "accuracy",
        [](const py::array_t<long long, py::array::forcecast>& counts) {
            if (counts.ndim() != 2 || counts.shape(0) != tb::kNumClasses || counts.shape(1) != tb::kNumClasses) {
                throw tb::Error(tb::ErrorKind::Shape, "confusion matrix must be 6x6");
            }
            tb::ConfusionMatrix cm;
            for (int r = 0; r < tb::kNumClasses; ++r)
                for (int c = 0; c < tb::kNumClasses; ++c) {
                    if (counts.at(r, c) < 0) throw tb::Error(tb::ErrorKind::Shape, "negative count");
                    cm.counts[r][c] = static_cast<std::uint64_t>(counts.at(r, c));
                }
            return tb::accuracy(cm);
        },
        py::arg("confusion"));

    // keyframe
    m.def(
        "detect_rest_windows",
        [](const Array& t, const Array& accel, double g, double epsilon, double min_duration) {
            std::vector<std::pair<double, double>> out;
            for (const auto& w : tb::detect_rest_windows(to_imu(t, accel), tb::KeyframePolicy{g, epsilon, min_duration}))
                out.emplace_back(w.t_start, w.t_end);
            return out;
        },
        py::arg("t"), py::arg("accel"), py::arg("g") = tb::kGravity, py::arg("epsilon") = 1.0,
        py::arg("min_duration") = 0.15, "Rest windows as a list of (t_start, t_end).");
    m.def(
        "select_keyframes",
        [](const std::vector<std::int64_t>& ids, const std::vector<double>& t, const std::vector<double>& sharp,
           const std::vector<std::pair<double, double>>& windows) {
            if (ids.size() != t.size() || ids.size() != sharp.size()) {
                throw tb::Error(tb::ErrorKind::Shape, "frame_ids, t and sharpness must have equal length");
            }
            std::vector<tb::FrameMeta> frames;
            for (std::size_t i = 0; i < ids.size(); ++i) frames.push_back({ids[i], t[i], sharp[i]});
            std::vector<tb::RestWindow> ws;
            for (const auto& [a, b] : windows) ws.push_back({a, b});
            return tb::select_keyframes(frames, ws);
        },
        py::arg("frame_ids"), py::arg("t"), py::arg("sharpness"), py::arg("windows"));
    m.def(
        "simulate_gait",
        [](int cycles, double cadence, std::uint64_t seed) {
            const auto tr = tb::simulate_gait(cycles, cadence, seed);
            Array t(static_cast<py::ssize_t>(tr.imu.size()));
            Array accel({static_cast<py::ssize_t>(tr.imu.size()), py::ssize_t{3}});
            for (std::size_t i = 0; i < tr.imu.size(); ++i) {
                t.mutable_at(i) = tr.imu[i].t;
                for (int k = 0; k < 3; ++k) accel.mutable_at(i, k) = tr.imu[i].accel[k];
            }
            std::vector<std::int64_t> ids;
            std::vector<double> ft, fs;
            for (const auto& f : tr.frames) {
                ids.push_back(f.frame_id);
                ft.push_back(f.t);
                fs.push_back(f.sharpness);
            }
            std::vector<std::pair<double, double>> stance;
            for (const auto& w : tr.stance) stance.emplace_back(w.t_start, w.t_end);
            py::dict d;
            d["t"] = t;
            d["accel"] = accel;
            d["frame_ids"] = ids;
            d["frame_t"] = to_array(ft);
            d["sharpness"] = to_array(fs);
            d["stance"] = stance;
            return d;
        },
        py::arg("cycles"), py::arg("cadence") = 1.0, py::arg("seed") = 0);

    // synthdata
    m.def(
        "gen_texture",
        [](const py::object& cls, int side, std::uint64_t seed) {
            const auto label = to_label(cls);
            tb::GrayImage img = [&] {
                py::gil_scoped_release nogil;
                return tb::gen_texture(label, side, seed);
            }();
            return to_array(img);
        },
        py::arg("cls"), py::arg("side"), py::arg("seed") = 0,
        "Synthetic texture for a class given by index or lower-case name.");
}
