// Copyright 2026 The GRT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace grt {

/// Exact positive rational, used for frame rates so that index arithmetic
/// like floor(k * 30 / 0.1) does not suffer from binary rounding.
struct Rational {
    std::int64_t num = 1;
    std::int64_t den = 1;

    Rational() = default;
    Rational(std::int64_t n, std::int64_t d);

    /// Recovers the shortest decimal fraction (up to 9 digits) matching `x`.
    static Rational from_double(double x);

    double value() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }

    friend bool operator==(const Rational& a, const Rational& b) noexcept {
        return a.num == b.num && a.den == b.den;
    }
    friend bool operator<(const Rational& a, const Rational& b) noexcept;
    friend bool operator<=(const Rational& a, const Rational& b) noexcept { return !(b < a); }
};

std::string to_string(const Rational& r);

/// Row-major, channel-interleaved 8-bit pixels.
struct Frame {
    int width = 0;
    int height = 0;
    int channels = 0;
    double timestamp = 0.0;
    std::vector<std::uint8_t> pixels;

    Frame() = default;
    Frame(int w, int h, int c, double ts = 0.0)
        : width(w), height(h), channels(c), timestamp(ts),
          pixels(static_cast<std::size_t>(w) * h * c, 0) {}

    std::uint8_t& at(int x, int y, int c) {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::uint8_t at(int x, int y, int c) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    bool same_shape(const Frame& o) const noexcept {
        return width == o.width && height == o.height && channels == o.channels;
    }
};

struct FrameSequence {
    std::vector<Frame> frames;
    Rational native_fps;
    int width = 0;
    int height = 0;
    int channels = 0;

    std::size_t size() const noexcept { return frames.size(); }

    /// Throws if frames disagree on shape, timestamps are not strictly
    /// increasing, or the dimensions are not multiples of `patch_size`
    /// (pass 0 to skip the divisibility check).
    void validate(int patch_size = 0) const;
};

/// One square tile of a frame. Pixels are stored channel-major
/// (all of channel 0 row by row, then channel 1, ...), which is the
/// flattening order of a convolution kernel [out][c][kh][kw].
struct Patch {
    int size = 0;
    int channels = 0;
    std::vector<std::uint8_t> pixels;

    std::uint8_t at(int c, int row, int col) const {
        return pixels[(static_cast<std::size_t>(c) * size + row) * size + col];
    }
};

struct PatchGrid {
    std::vector<Patch> patches;
    int grid_w = 0;
    int grid_h = 0;
    int patch_size = 0;
    int channels = 0;

    std::size_t size() const noexcept { return patches.size(); }
};

enum class FrameFormat { PngSequence, RawRgb24 };

FrameSequence load_frame_sequence(const std::filesystem::path& manifest_path);

/// Writes frames plus `manifest.json` into `dir` and returns the manifest path.
std::filesystem::path save_frame_sequence(const FrameSequence& seq,
                                          const std::filesystem::path& dir,
                                          FrameFormat format);

/// Keeps frames floor(k * native / target) for k = 0, 1, ...
FrameSequence resample_fps(const FrameSequence& seq, const Rational& target_fps);

/// BT.601 luma, rounded to nearest and clamped to [0, 255].
Frame to_grayscale(const Frame& frame);

/// Unrounded BT.601 luma of one RGB triple.
double luma_bt601(std::uint8_t r, std::uint8_t g, std::uint8_t b) noexcept;

PatchGrid extract_patches(const Frame& frame, int patch_size);

Frame assemble_patches(const PatchGrid& grid);

// PNG helpers (libpng). Channels must be 1 or 3.
Frame read_png(const std::filesystem::path& path, int channels);
void write_png(const Frame& frame, const std::filesystem::path& path);

}  // namespace grt
