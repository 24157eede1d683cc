// Copyright 2026 The GRT Authors
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

#include "grt/error.hpp"
#include "grt/pipeline.hpp"
#include "grt/synthbench.hpp"
#include "grt/token_file.hpp"

namespace py = pybind11;
using namespace grt;

namespace {

using U8Array = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

// Python dicts cross the boundary as JSON text.
nlohmann::json to_json_value(const py::handle& obj) {
    if (obj.is_none()) return nlohmann::json::object();
    const auto dumps = py::module_::import("json").attr("dumps");
    return nlohmann::json::parse(dumps(obj).cast<std::string>());
}

py::object from_json_value(const nlohmann::json& j) {
    return py::module_::import("json").attr("loads")(j.dump());
}

PipelineConfig config_from(const py::handle& obj) {
    PipelineConfig cfg;
    merge_json(to_json_value(obj), cfg);
    cfg.validate();
    return cfg;
}

Frame frame_from(const U8Array& a) {
    if (a.ndim() != 2 && a.ndim() != 3) throw Error(ErrorCode::ShapeMismatch, "frame must be HxW or HxWxC");
    const int h = static_cast<int>(a.shape(0)), w = static_cast<int>(a.shape(1));
    const int c = a.ndim() == 3 ? static_cast<int>(a.shape(2)) : 1;
    Frame f(w, h, c);
    std::memcpy(f.pixels.data(), a.data(), f.pixels.size());
    return f;
}

FrameSequence video_from(const U8Array& a, double fps) {
    if (a.ndim() != 3 && a.ndim() != 4) throw Error(ErrorCode::ShapeMismatch, "video must be FxHxW or FxHxWxC");
    FrameSequence seq;
    seq.native_fps = Rational::from_double(fps);
    seq.height = static_cast<int>(a.shape(1));
    seq.width = static_cast<int>(a.shape(2));
    seq.channels = a.ndim() == 4 ? static_cast<int>(a.shape(3)) : 1;
    const std::size_t stride = static_cast<std::size_t>(seq.width) * seq.height * seq.channels;
    for (py::ssize_t i = 0; i < a.shape(0); ++i) {
        Frame f(seq.width, seq.height, seq.channels, static_cast<double>(i) / seq.native_fps.value());
        std::memcpy(f.pixels.data(), a.data() + i * static_cast<py::ssize_t>(stride), stride);
        seq.frames.push_back(std::move(f));
    }
    seq.validate();
    return seq;
}

py::array_t<std::uint8_t> video_array(const FrameSequence& seq) {
    py::array_t<std::uint8_t> out({static_cast<py::ssize_t>(seq.size()), static_cast<py::ssize_t>(seq.height),
                                   static_cast<py::ssize_t>(seq.width), static_cast<py::ssize_t>(seq.channels)});
    std::uint8_t* dst = out.mutable_data();
    for (const auto& f : seq.frames) {
        std::memcpy(dst, f.pixels.data(), f.pixels.size());
        dst += f.pixels.size();
    }
    return out;
}

py::dict flat_dict(const FlatTokens& flat) {
    const auto n = static_cast<py::ssize_t>(flat.size());
    py::array_t<float> tokens({n, static_cast<py::ssize_t>(flat.embed_dim)});
    if (!flat.data.empty()) std::memcpy(tokens.mutable_data(), flat.data.data(), flat.data.size() * sizeof(float));
    py::array_t<std::uint32_t> index({n, py::ssize_t{4}});
    auto idx = index.mutable_unchecked<2>();
    for (py::ssize_t i = 0; i < n; ++i) {
        const auto& e = flat.index[static_cast<std::size_t>(i)];
        idx(i, 0) = e.group;
        idx(i, 1) = static_cast<std::uint32_t>(e.kind);
        idx(i, 2) = e.frame;
        idx(i, 3) = e.patch;
    }
    py::dict d;
    d["tokens"] = tokens;
    d["index"] = index;
    d["group_count"] = flat.group_count;
    return d;
}

FlatTokens flat_from(const py::array_t<float, py::array::c_style | py::array::forcecast>& tokens,
                     const py::array_t<std::uint32_t, py::array::c_style | py::array::forcecast>& index,
                     std::uint32_t group_count) {
    if (tokens.ndim() != 2 || index.ndim() != 2 || index.shape(1) != 4 || index.shape(0) != tokens.shape(0))
        throw Error(ErrorCode::ShapeMismatch, "tokens must be n x D and index n x 4");
    FlatTokens flat;
    flat.embed_dim = static_cast<int>(tokens.shape(1));
    flat.group_count = group_count;
    flat.data.assign(tokens.data(), tokens.data() + tokens.size());
    auto idx = index.unchecked<2>();
    for (py::ssize_t i = 0; i < index.shape(0); ++i) {
        if (idx(i, 1) > 2) throw Error(ErrorCode::InvalidConfig, "token kind must be 0, 1 or 2");
        flat.index.push_back({idx(i, 0), static_cast<FlatKind>(idx(i, 1)), idx(i, 2), idx(i, 3)});
    }
    return flat;
}

py::dict counts_dict(const StageCounts& c) {
    py::dict d;
    d["frames"] = c.frames;
    d["scenes"] = c.scenes;
    d["groups"] = c.groups;
    d["baseline"] = c.baseline;
    d["after_pruning"] = c.after_pruning;
    d["after_merging"] = c.after_merging;
    d["pruning_ratio"] = c.pruning_ratio();
    d["merging_ratio"] = c.merging_ratio();
    return d;
}

}  // namespace

PYBIND11_MODULE(_grt, m) {
    m.doc() = "Gated residual tokenization core";

    // Instances carry the error code name as `.code`.
    static py::handle grt_error = py::exception<Error>(m, "GrtError").release();
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object inst = grt_error(e.what());
            inst.attr("code") = std::string(to_string(e.code()));
            PyErr_SetObject(grt_error.ptr(), inst.ptr());
        }
    });

    py::class_<FrameSequence>(m, "Video")
        .def(py::init(&video_from), py::arg("frames"), py::arg("fps"),
             "Wraps a uint8 array of shape (F, H, W) or (F, H, W, C).")
        .def("__len__", &FrameSequence::size)
        .def_property_readonly("fps", [](const FrameSequence& s) { return s.native_fps.value(); })
        .def_property_readonly("shape",
                               [](const FrameSequence& s) { return py::make_tuple(s.size(), s.height, s.width, s.channels); })
        .def("frames", &video_array, "Copies the pixels out as (F, H, W, C) uint8.")
        .def("resample", [](const FrameSequence& s, double fps) { return resample_fps(s, Rational::from_double(fps)); },
             py::arg("fps"))
        .def(
            "save",
            [](const FrameSequence& s, const std::filesystem::path& dir, const std::string& format) {
                if (format != "png" && format != "raw") throw Error(ErrorCode::InvalidConfig, "format must be png or raw");
                return save_frame_sequence(s, dir, format == "png" ? FrameFormat::PngSequence : FrameFormat::RawRgb24);
            },
            py::arg("directory"), py::arg("format") = "png", "Writes frames plus manifest.json; returns the manifest path.");

    m.def("load_video", &load_frame_sequence, py::arg("manifest"));

    m.def(
        "synthesize",
        [](const py::handle& spec) {
            auto [seq, ann] = generate_synthetic(to_json_value(spec).get<SynthSpec>());
            return py::make_tuple(std::move(seq), from_json_value(annotation_json(ann)));
        },
        py::arg("spec"), "Returns (Video, annotation) for a synthetic clip spec dict.");

    m.def(
        "tokenize",
        [](const FrameSequence& seq, const py::handle& config) {
            const auto cfg = config_from(config);
            PipelineResult r;
            {
                py::gil_scoped_release release;
                r = run_pipeline(seq, cfg, make_weights(cfg, seq));
            }
            auto d = flat_dict(r.flat);
            d["counts"] = counts_dict(r.counts);
            return d;
        },
        py::arg("video"), py::arg("config") = py::none(),
        "Runs the full pipeline; config keys match the CLI's JSON config file.");

    m.def(
        "retention_sweep",
        [](const FrameSequence& seq, const std::vector<double>& fps_list, const py::handle& config) {
            std::vector<Rational> rates;
            for (double f : fps_list) rates.push_back(Rational::from_double(f));
            const auto rep = run_retention_sweep(seq, rates, config_from(config));
            return from_json_value(nlohmann::json::parse(render(rep, ReportFormat::Json)));
        },
        py::arg("video"), py::arg("fps_list"), py::arg("config") = py::none());

    m.def(
        "patch_ssim",
        [](const U8Array& a, const U8Array& b) {
            const Frame fa = frame_from(a), fb = frame_from(b);
            if (!fa.same_shape(fb) || fa.width != fa.height) throw Error(ErrorCode::ShapeMismatch, "patches must be equal squares");
            return patch_ssim(extract_patches(fa, fa.width).patches[0], extract_patches(fb, fb.width).patches[0]);
        },
        py::arg("a"), py::arg("b"));

    m.def(
        "gate_mask",
        [](const U8Array& curr, const U8Array& prev, int patch_size, double tau) {
            const Frame c = frame_from(curr), p = frame_from(prev);
            if (!c.same_shape(p)) throw Error(ErrorCode::ShapeMismatch, "frames differ in shape");
            const auto gc = extract_patches(c.channels == 1 ? c : luma_view(c), patch_size);
            const auto gp = extract_patches(p.channels == 1 ? p : luma_view(p), patch_size);
            const auto mask = compute_gate_mask(gc, gp, tau, false);
            py::array_t<bool> out({gc.grid_h, gc.grid_w});
            for (std::size_t i = 0; i < mask.size(); ++i) out.mutable_data()[i] = mask.bits[i] != 0;
            return out;
        },
        py::arg("curr"), py::arg("prev"), py::arg("patch_size") = 16, py::arg("tau") = 0.9,
        "Boolean grid, True where the patch changed enough to be re-encoded.");

    m.def("read_grtt", [](const std::filesystem::path& p) { return flat_dict(read_grtt(p)); }, py::arg("path"));
    m.def(
        "write_grtt",
        [](const std::filesystem::path& p, const py::array_t<float, py::array::c_style | py::array::forcecast>& tokens,
           const py::array_t<std::uint32_t, py::array::c_style | py::array::forcecast>& index,
           std::uint32_t group_count) { write_grtt(flat_from(tokens, index, group_count), p); },
        py::arg("path"), py::arg("tokens"), py::arg("index"), py::arg("group_count"));
}
