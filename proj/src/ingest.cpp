// Copyright 2026 The GRT Authors
// SPDX-License-Identifier: Apache-2.0

#include "grt/ingest.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "grt/error.hpp"

namespace grt {

namespace fs = std::filesystem;
using nlohmann::json;

Rational::Rational(std::int64_t n, std::int64_t d) : num(n), den(d) {
    if (d == 0) {
        throw Error(ErrorCode::InvalidConfig, "rational with zero denominator");
    }
    if (den < 0) {
        num = -num;
        den = -den;
    }
    const std::int64_t g = std::gcd(num, den);
    if (g > 1) {
        num /= g;
        den /= g;
    }
}

Rational Rational::from_double(double x) {
    if (!std::isfinite(x)) {
        throw Error(ErrorCode::InvalidConfig, "non-finite rate");
    }
    std::int64_t scale = 1;
    for (int digits = 0; digits <= 9; ++digits, scale *= 10) {
        const double scaled = x * static_cast<double>(scale);
        const double rounded = std::round(scaled);
        if (std::abs(scaled - rounded) <= 1e-9 * std::max(1.0, std::abs(scaled))) {
            return Rational(static_cast<std::int64_t>(rounded), scale);
        }
    }
    return Rational(static_cast<std::int64_t>(std::round(x * 1e9)), 1'000'000'000);
}

bool operator<(const Rational& a, const Rational& b) noexcept {
    return static_cast<__int128>(a.num) * b.den < static_cast<__int128>(b.num) * a.den;
}

std::string to_string(const Rational& r) {
    if (r.den == 1) {
        return std::to_string(r.num);
    }
    std::ostringstream os;
    os << std::setprecision(12) << r.value();
    return os.str();
}

void FrameSequence::validate(int patch_size) const {
    if (channels != 1 && channels != 3) {
        throw Error(ErrorCode::DimensionMismatch, "channels must be 1 or 3");
    }
    if (width <= 0 || height <= 0) {
        throw Error(ErrorCode::DimensionMismatch, "non-positive frame dimensions");
    }
    if (patch_size > 0 && (width % patch_size != 0 || height % patch_size != 0)) {
        throw Error(ErrorCode::IndivisibleDimensions,
                    std::to_string(width) + "x" + std::to_string(height) +
                        " not divisible by patch size " + std::to_string(patch_size));
    }
    const std::size_t expected = static_cast<std::size_t>(width) * height * channels;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const Frame& f = frames[i];
        if (f.width != width || f.height != height || f.channels != channels ||
            f.pixels.size() != expected) {
            throw Error(ErrorCode::DimensionMismatch, "frame " + std::to_string(i) +
                                                          " disagrees with sequence shape");
        }
        if (i > 0 && !(frames[i - 1].timestamp < f.timestamp)) {
            throw Error(ErrorCode::DimensionMismatch,
                        "timestamps not strictly increasing at frame " + std::to_string(i));
        }
    }
}

namespace {

template <typename T>
T require(const json& j, const char* key) {
    if (!j.contains(key)) {
        throw Error(ErrorCode::MalformedManifest, std::string("missing field '") + key + "'");
    }
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::MalformedManifest, std::string("field '") + key + "': " + e.what());
    }
}

}  // namespace

FrameSequence load_frame_sequence(const fs::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) {
        throw Error(ErrorCode::MissingFile, manifest_path.string());
    }
    json manifest;
    try {
        in >> manifest;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::MalformedManifest, e.what());
    }
    if (!manifest.is_object()) {
        throw Error(ErrorCode::MalformedManifest, "manifest root must be an object");
    }

    FrameSequence seq;
    const double fps = require<double>(manifest, "fps");
    if (!(fps > 0.0)) {
        throw Error(ErrorCode::MalformedManifest, "fps must be positive");
    }
    seq.native_fps = Rational::from_double(fps);
    seq.width = require<int>(manifest, "width");
    seq.height = require<int>(manifest, "height");
    seq.channels = require<int>(manifest, "channels");
    if (seq.width <= 0 || seq.height <= 0 || (seq.channels != 1 && seq.channels != 3)) {
        throw Error(ErrorCode::MalformedManifest, "bad width/height/channels");
    }
    const auto format = require<std::string>(manifest, "format");
    const fs::path base = manifest_path.parent_path();
    const double period = 1.0 / seq.native_fps.value();

    if (format == "png_sequence") {
        const auto paths = require<std::vector<std::string>>(manifest, "frames");
        if (manifest.contains("frame_count") &&
            require<std::size_t>(manifest, "frame_count") != paths.size()) {
            throw Error(ErrorCode::MalformedManifest, "frame_count disagrees with frames list");
        }
        seq.frames.reserve(paths.size());
        for (std::size_t i = 0; i < paths.size(); ++i) {
            const fs::path p = base / paths[i];
            if (!fs::exists(p)) {
                throw Error(ErrorCode::MissingFile, p.string());
            }
            Frame f = read_png(p, seq.channels);
            if (f.width != seq.width || f.height != seq.height) {
                throw Error(ErrorCode::DimensionMismatch,
                            p.string() + " decodes to " + std::to_string(f.width) + "x" +
                                std::to_string(f.height));
            }
            f.timestamp = static_cast<double>(i) * period;
            seq.frames.push_back(std::move(f));
        }
    } else if (format == "raw_rgb24") {
        const auto raw = base / require<std::string>(manifest, "raw_path");
        const auto count = require<std::size_t>(manifest, "frame_count");
        if (!fs::exists(raw)) {
            throw Error(ErrorCode::MissingFile, raw.string());
        }
        const std::size_t frame_bytes = static_cast<std::size_t>(seq.width) * seq.height * seq.channels;
        const auto actual = fs::file_size(raw);
        if (actual != frame_bytes * count) {
            throw Error(ErrorCode::DimensionMismatch,
                        raw.string() + " holds " + std::to_string(actual) + " bytes, expected " +
                            std::to_string(frame_bytes * count));
        }
        std::ifstream blob(raw, std::ios::binary);
        seq.frames.reserve(count);
        for (std::size_t i = 0; i < count; ++i) {
            Frame f(seq.width, seq.height, seq.channels, static_cast<double>(i) * period);
            blob.read(reinterpret_cast<char*>(f.pixels.data()), static_cast<std::streamsize>(frame_bytes));
            if (!blob) {
                throw Error(ErrorCode::IoError, "short read from " + raw.string());
            }
            seq.frames.push_back(std::move(f));
        }
    } else {
        throw Error(ErrorCode::MalformedManifest, "unknown format '" + format + "'");
    }
    seq.validate();
    return seq;
}

fs::path save_frame_sequence(const FrameSequence& seq, const fs::path& dir, FrameFormat format) {
    seq.validate();
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
    }
    json manifest = {
        {"fps", seq.native_fps.value()},
        {"width", seq.width},
        {"height", seq.height},
        {"channels", seq.channels},
        {"frame_count", seq.frames.size()},
    };
    if (format == FrameFormat::PngSequence) {
        manifest["format"] = "png_sequence";
        json names = json::array();
        for (std::size_t i = 0; i < seq.frames.size(); ++i) {
            std::ostringstream name;
            name << "frame_" << std::setw(6) << std::setfill('0') << i << ".png";
            write_png(seq.frames[i], dir / name.str());
            names.push_back(name.str());
        }
        manifest["frames"] = std::move(names);
    } else {
        manifest["format"] = "raw_rgb24";
        manifest["raw_path"] = "frames.raw";
        std::ofstream blob(dir / "frames.raw", std::ios::binary);
        for (const Frame& f : seq.frames) {
            blob.write(reinterpret_cast<const char*>(f.pixels.data()),
                       static_cast<std::streamsize>(f.pixels.size()));
        }
        if (!blob) {
            throw Error(ErrorCode::IoError, "failed writing frames.raw");
        }
    }
    const fs::path manifest_path = dir / "manifest.json";
    std::ofstream out(manifest_path);
    out << manifest.dump(2) << '\n';
    if (!out) {
        throw Error(ErrorCode::IoError, "failed writing " + manifest_path.string());
    }
    return manifest_path;
}

FrameSequence resample_fps(const FrameSequence& seq, const Rational& target_fps) {
    if (target_fps.num <= 0) {
        throw Error(ErrorCode::InvalidConfig, "target fps must be positive");
    }
    if (seq.native_fps < target_fps) {
        throw Error(ErrorCode::UpsampleRequested,
                    "target " + to_string(target_fps) + " fps exceeds native " + to_string(seq.native_fps));
    }
    FrameSequence out;
    out.native_fps = target_fps;
    out.width = seq.width;
    out.height = seq.height;
    out.channels = seq.channels;
    // index_k = floor(k * (nn/nd) / (tn/td)) = floor(k * nn * td / (nd * tn))
    const __int128 step_num = static_cast<__int128>(seq.native_fps.num) * target_fps.den;
    const __int128 step_den = static_cast<__int128>(seq.native_fps.den) * target_fps.num;
    for (__int128 k = 0;; ++k) {
        const __int128 idx = (k * step_num) / step_den;
        if (idx >= static_cast<__int128>(seq.frames.size())) {
            break;
        }
        out.frames.push_back(seq.frames[static_cast<std::size_t>(idx)]);
    }
    return out;
}

double luma_bt601(std::uint8_t r, std::uint8_t g, std::uint8_t b) noexcept {
    return 0.299 * r + 0.587 * g + 0.114 * b;
}

Frame to_grayscale(const Frame& frame) {
    if (frame.channels == 1) {
        throw Error(ErrorCode::AlreadyGrayscale, "frame already has one channel");
    }
    if (frame.channels != 3) {
        throw Error(ErrorCode::ShapeMismatch, "grayscale conversion needs 3 channels");
    }
    Frame out(frame.width, frame.height, 1, frame.timestamp);
    const std::size_t n = static_cast<std::size_t>(frame.width) * frame.height;
    for (std::size_t i = 0; i < n; ++i) {
        const double y = luma_bt601(frame.pixels[3 * i], frame.pixels[3 * i + 1], frame.pixels[3 * i + 2]);
        out.pixels[i] = static_cast<std::uint8_t>(std::clamp(std::lround(y), 0L, 255L));
    }
    return out;
}

PatchGrid extract_patches(const Frame& frame, int patch_size) {
    if (patch_size <= 0 || frame.width % patch_size != 0 || frame.height % patch_size != 0) {
        throw Error(ErrorCode::IndivisibleDimensions,
                    std::to_string(frame.width) + "x" + std::to_string(frame.height) +
                        " not divisible by patch size " + std::to_string(patch_size));
    }
    PatchGrid grid;
    grid.patch_size = patch_size;
    grid.channels = frame.channels;
    grid.grid_w = frame.width / patch_size;
    grid.grid_h = frame.height / patch_size;
    grid.patches.resize(static_cast<std::size_t>(grid.grid_w) * grid.grid_h);
    const std::size_t plane = static_cast<std::size_t>(patch_size) * patch_size;
    for (int gy = 0; gy < grid.grid_h; ++gy) {
        for (int gx = 0; gx < grid.grid_w; ++gx) {
            Patch& p = grid.patches[static_cast<std::size_t>(gy) * grid.grid_w + gx];
            p.size = patch_size;
            p.channels = frame.channels;
            p.pixels.resize(plane * frame.channels);
            for (int c = 0; c < frame.channels; ++c) {
                for (int r = 0; r < patch_size; ++r) {
                    for (int col = 0; col < patch_size; ++col) {
                        p.pixels[c * plane + static_cast<std::size_t>(r) * patch_size + col] =
                            frame.at(gx * patch_size + col, gy * patch_size + r, c);
                    }
                }
            }
        }
    }
    return grid;
}

Frame assemble_patches(const PatchGrid& grid) {
    const int ps = grid.patch_size;
    Frame out(grid.grid_w * ps, grid.grid_h * ps, grid.channels);
    for (int gy = 0; gy < grid.grid_h; ++gy) {
        for (int gx = 0; gx < grid.grid_w; ++gx) {
            const Patch& p = grid.patches[static_cast<std::size_t>(gy) * grid.grid_w + gx];
            for (int c = 0; c < grid.channels; ++c) {
                for (int r = 0; r < ps; ++r) {
                    for (int col = 0; col < ps; ++col) {
                        out.at(gx * ps + col, gy * ps + r, c) = p.at(c, r, col);
                    }
                }
            }
        }
    }
    return out;
}

Frame read_png(const fs::path& path, int channels) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str())) {
        throw Error(fs::exists(path) ? ErrorCode::IoError : ErrorCode::MissingFile,
                    path.string() + ": " + image.message);
    }
    image.format = channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    Frame f(static_cast<int>(image.width), static_cast<int>(image.height), channels);
    if (!png_image_finish_read(&image, nullptr, f.pixels.data(), 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw Error(ErrorCode::IoError, path.string() + ": " + msg);
    }
    return f;
}

void write_png(const Frame& frame, const fs::path& path) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(frame.width);
    image.height = static_cast<png_uint_32>(frame.height);
    image.format = frame.channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&image, path.c_str(), 0, frame.pixels.data(), 0, nullptr)) {
        throw Error(ErrorCode::IoError, path.string() + ": " + image.message);
    }
}

}  // namespace grt
