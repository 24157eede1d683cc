// Copyright 2026 The GRT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <json.hpp>

#include "grt/ingest.hpp"

namespace grt {

// Stabilizing constants for 8-bit data: (0.01 * 255)^2 and (0.03 * 255)^2.
inline constexpr double kSsimC1 = 6.5025;
inline constexpr double kSsimC2 = 58.5225;

struct GateMask {
    std::vector<std::uint8_t> bits;
    std::size_t frame_index = 0;  // position within the scene, key frame = 0

    std::size_t size() const noexcept { return bits.size(); }
    std::size_t count() const noexcept;
    bool all_set() const noexcept { return count() == bits.size(); }

    static GateMask full(std::size_t n, std::size_t frame_index = 0) {
        return GateMask{std::vector<std::uint8_t>(n, 1), frame_index};
    }
};

/// Masked difference against the previous frame. `deltas` holds, for each
/// gated-in patch in ascending patch order, the channel-major patch-local
/// differences curr - prev; gated-out patches contribute nothing.
struct Residual {
    GateMask mask;
    std::vector<std::int16_t> deltas;
};

/// A key frame followed by P-frame residuals. Covers global frames
/// [start_index, end_index] inclusive; residuals[j - 1] rebuilds frame
/// start_index + j from frame start_index + j - 1.
struct Scene {
    Frame key_frame;
    GateMask key_mask;
    std::vector<Residual> residuals;
    std::size_t start_index = 0;
    std::size_t end_index = 0;

    std::size_t frame_count() const noexcept { return end_index - start_index + 1; }
};

struct SceneConfig {
    double tau = 0.9;
    double rho = 0.5;
    std::size_t max_gop = 300;
    int patch_size = 16;
    /// Store all-one masks for every frame. Scene boundaries are still
    /// decided from the SSIM change fraction.
    bool all_pass = false;

    void validate() const;
};

/// Single-window SSIM over the whole patch, population statistics.
double patch_ssim(const Patch& a, const Patch& b);

/// Bit n is set iff SSIM(curr[n], prev[n]) < tau; key frames get all ones.
GateMask compute_gate_mask(const PatchGrid& curr, const PatchGrid& prev, double tau, bool is_key);

Residual compute_residual(const Frame& curr, const Frame& prev, const GateMask& mask, int patch_size);

/// Applies residuals 1..upto to the key frame (upto = 0 returns the key frame).
Frame reconstruct(const Scene& scene, std::size_t upto, int patch_size);

/// Grayscale view used for gating; 1-channel frames pass through unchanged.
Frame luma_view(const Frame& frame);

std::vector<Scene> segment_scenes(const FrameSequence& seq, const SceneConfig& cfg);

/// Per-scene {start, end, set_bits: [...]} diagnostic dump.
nlohmann::json scene_dump(const std::vector<Scene>& scenes);

}  // namespace grt
