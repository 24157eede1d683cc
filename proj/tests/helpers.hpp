// Copyright 2026 The GRT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <random>
#include <string>

#include <doctest.h>

#include "grt/error.hpp"
#include "grt/ingest.hpp"

#define CHECK_GRT_ERROR(expr, ec)                                            \
    do {                                                                     \
        bool grt_thrown_ = false;                                            \
        try {                                                                \
            (void)(expr);                                                    \
        } catch (const grt::Error& e) {                                      \
            grt_thrown_ = true;                                              \
            CHECK_MESSAGE(e.code() == (ec), "got " << e.what());             \
        }                                                                    \
        CHECK_MESSAGE(grt_thrown_, "expected " << grt::to_string(ec));       \
    } while (0)

namespace testing {

// Scratch directory removed on scope exit.
struct TempDir {
    std::filesystem::path path;
    TempDir() {
        static std::atomic<int> counter{0};
        path = std::filesystem::temp_directory_path() /
               ("grt_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::filesystem::path operator/(const std::string& name) const { return path / name; }
};

inline grt::FrameSequence make_sequence(std::vector<grt::Frame> frames, grt::Rational fps = {1, 1}) {
    grt::FrameSequence seq;
    seq.native_fps = fps;
    seq.width = frames.front().width;
    seq.height = frames.front().height;
    seq.channels = frames.front().channels;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        frames[i].timestamp = static_cast<double>(i) * static_cast<double>(fps.den) / static_cast<double>(fps.num);
    }
    seq.frames = std::move(frames);
    return seq;
}

inline grt::Frame uniform_frame(int w, int h, int c, std::uint8_t v) {
    grt::Frame f(w, h, c);
    std::fill(f.pixels.begin(), f.pixels.end(), v);
    return f;
}

}  // namespace testing
