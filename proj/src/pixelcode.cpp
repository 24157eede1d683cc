// Copyright 2026 The GRT Authors
// SPDX-License-Identifier: Apache-2.0

#include "grt/pixelcode.hpp"

#include <algorithm>
#include <numeric>

#include "grt/error.hpp"

namespace grt {

std::size_t GateMask::count() const noexcept {
    return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

void SceneConfig::validate() const {
    if (!(tau >= 0.0 && tau <= 1.0)) {
        throw Error(ErrorCode::InvalidConfig, "tau must lie in [0, 1]");
    }
    if (!(rho > 0.0 && rho <= 1.0)) {
        throw Error(ErrorCode::InvalidConfig, "rho must lie in (0, 1]");
    }
    if (max_gop == 0) {
        throw Error(ErrorCode::InvalidConfig, "max_gop must be positive");
    }
    if (patch_size <= 0) {
        throw Error(ErrorCode::InvalidConfig, "patch_size must be positive");
    }
}

double patch_ssim(const Patch& a, const Patch& b) {
    if (a.size != b.size || a.channels != b.channels || a.pixels.size() != b.pixels.size()) {
        throw Error(ErrorCode::ShapeMismatch, "SSIM operands differ in shape");
    }
    if (a.channels != 1) {
        throw Error(ErrorCode::ShapeMismatch, "SSIM expects grayscale patches");
    }
    const std::size_t n = a.pixels.size();
    if (n == 0) {
        throw Error(ErrorCode::ShapeMismatch, "empty patch");
    }
    // Integer sums are exact for 8-bit data up to very large patches.
    std::int64_t sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::int64_t x = a.pixels[i];
        const std::int64_t y = b.pixels[i];
        sa += x;
        sb += y;
        saa += x * x;
        sbb += y * y;
        sab += x * y;
    }
    // n * sum(x^2) - sum(x)^2 is exact, so identical patches give SSIM 1.
    const auto ni = static_cast<std::int64_t>(n);
    const double inv = 1.0 / static_cast<double>(n);
    const double inv2 = inv * inv;
    const double mu_a = static_cast<double>(sa) * inv;
    const double mu_b = static_cast<double>(sb) * inv;
    const double var_a = static_cast<double>(ni * saa - sa * sa) * inv2;
    const double var_b = static_cast<double>(ni * sbb - sb * sb) * inv2;
    const double cov = static_cast<double>(ni * sab - sa * sb) * inv2;
    return ((2.0 * mu_a * mu_b + kSsimC1) * (2.0 * cov + kSsimC2)) /
           ((mu_a * mu_a + mu_b * mu_b + kSsimC1) * (var_a + var_b + kSsimC2));
}

GateMask compute_gate_mask(const PatchGrid& curr, const PatchGrid& prev, double tau, bool is_key) {
    if (curr.grid_w != prev.grid_w || curr.grid_h != prev.grid_h || curr.size() != prev.size()) {
        throw Error(ErrorCode::ShapeMismatch, "patch grids differ in shape");
    }
    if (is_key) {
        return GateMask::full(curr.size());
    }
    GateMask mask;
    mask.bits.resize(curr.size());
    for (std::size_t n = 0; n < curr.size(); ++n) {
        mask.bits[n] = patch_ssim(curr.patches[n], prev.patches[n]) < tau ? 1 : 0;
    }
    return mask;
}

namespace {

struct PatchGeometry {
    int grid_w;
    int grid_h;

    static PatchGeometry of(const Frame& f, int patch_size) {
        if (patch_size <= 0 || f.width % patch_size != 0 || f.height % patch_size != 0) {
            throw Error(ErrorCode::IndivisibleDimensions, "frame not divisible by patch size");
        }
        return {f.width / patch_size, f.height / patch_size};
    }
    std::size_t count() const noexcept { return static_cast<std::size_t>(grid_w) * grid_h; }
};

// Visits the pixels of patch n in channel-major order.
template <typename Fn>
void for_each_patch_pixel(const Frame& f, int patch_size, int grid_w, std::size_t n, Fn&& fn) {
    const int x0 = static_cast<int>(n % grid_w) * patch_size;
    const int y0 = static_cast<int>(n / grid_w) * patch_size;
    for (int c = 0; c < f.channels; ++c) {
        for (int r = 0; r < patch_size; ++r) {
            const std::size_t row = (static_cast<std::size_t>(y0 + r) * f.width + x0) * f.channels + c;
            for (int col = 0; col < patch_size; ++col) {
                fn(row + static_cast<std::size_t>(col) * f.channels);
            }
        }
    }
}

}  // namespace

Residual compute_residual(const Frame& curr, const Frame& prev, const GateMask& mask, int patch_size) {
    if (!curr.same_shape(prev)) {
        throw Error(ErrorCode::ShapeMismatch, "residual operands differ in shape");
    }
    const auto geom = PatchGeometry::of(curr, patch_size);
    if (mask.size() != geom.count()) {
        throw Error(ErrorCode::ShapeMismatch, "mask length does not match patch count");
    }
    Residual res;
    res.mask = mask;
    res.deltas.reserve(mask.count() * static_cast<std::size_t>(patch_size) * patch_size * curr.channels);
    for (std::size_t n = 0; n < mask.size(); ++n) {
        if (!mask.bits[n]) {
            continue;
        }
        for_each_patch_pixel(curr, patch_size, geom.grid_w, n, [&](std::size_t i) {
            res.deltas.push_back(static_cast<std::int16_t>(int{curr.pixels[i]} - int{prev.pixels[i]}));
        });
    }
    return res;
}

Frame reconstruct(const Scene& scene, std::size_t upto, int patch_size) {
    if (upto > scene.residuals.size()) {
        throw Error(ErrorCode::OffsetOutOfRange,
                    "offset " + std::to_string(upto) + " exceeds " + std::to_string(scene.residuals.size()));
    }
    Frame out = scene.key_frame;
    if (upto == 0) {
        return out;
    }
    const auto geom = PatchGeometry::of(out, patch_size);
    // Accumulate in int so that drift on never-gated patches cannot wrap.
    std::vector<int> acc(out.pixels.begin(), out.pixels.end());
    for (std::size_t j = 0; j < upto; ++j) {
        const Residual& res = scene.residuals[j];
        if (res.mask.size() != geom.count()) {
            throw Error(ErrorCode::ShapeMismatch, "residual mask length does not match patch count");
        }
        std::size_t k = 0;
        for (std::size_t n = 0; n < res.mask.size(); ++n) {
            if (!res.mask.bits[n]) {
                continue;
            }
            for_each_patch_pixel(out, patch_size, geom.grid_w, n, [&](std::size_t i) {
                acc[i] = std::clamp(acc[i] + res.deltas[k++], 0, 255);
            });
        }
        if (k != res.deltas.size()) {
            throw Error(ErrorCode::ShapeMismatch, "residual payload does not match its mask");
        }
    }
    std::transform(acc.begin(), acc.end(), out.pixels.begin(),
                   [](int v) { return static_cast<std::uint8_t>(v); });
    return out;
}

Frame luma_view(const Frame& frame) {
    return frame.channels == 1 ? frame : to_grayscale(frame);
}

std::vector<Scene> segment_scenes(const FrameSequence& seq, const SceneConfig& cfg) {
    if (seq.frames.empty()) {
        throw Error(ErrorCode::EmptySequence, "cannot segment an empty sequence");
    }
    cfg.validate();
    seq.validate(cfg.patch_size);

    const std::size_t n_patches =
        static_cast<std::size_t>(seq.width / cfg.patch_size) * (seq.height / cfg.patch_size);
    std::vector<Scene> scenes;
    auto open_scene = [&](std::size_t j) {
        Scene s;
        s.key_frame = seq.frames[j];
        s.key_mask = GateMask::full(n_patches);
        s.start_index = j;
        s.end_index = j;
        scenes.push_back(std::move(s));
    };

    open_scene(0);
    PatchGrid prev_gray = extract_patches(luma_view(seq.frames[0]), cfg.patch_size);
    for (std::size_t j = 1; j < seq.frames.size(); ++j) {
        PatchGrid curr_gray = extract_patches(luma_view(seq.frames[j]), cfg.patch_size);
        GateMask mask = compute_gate_mask(curr_gray, prev_gray, cfg.tau, false);
        const double changed = static_cast<double>(mask.count()) / static_cast<double>(n_patches);
        Scene& current = scenes.back();
        if (changed > cfg.rho || current.frame_count() >= cfg.max_gop) {
            open_scene(j);
        } else {
            if (cfg.all_pass) {
                mask = GateMask::full(n_patches);
            }
            mask.frame_index = current.residuals.size() + 1;
            current.residuals.push_back(compute_residual(seq.frames[j], seq.frames[j - 1], mask, cfg.patch_size));
            current.end_index = j;
        }
        prev_gray = std::move(curr_gray);
    }
    return scenes;
}

nlohmann::json scene_dump(const std::vector<Scene>& scenes) {
    nlohmann::json out = nlohmann::json::array();
    for (const Scene& s : scenes) {
        std::vector<std::size_t> bits;
        bits.reserve(s.residuals.size() + 1);
        bits.push_back(s.key_mask.count());
        for (const Residual& r : s.residuals) {
            bits.push_back(r.mask.count());
        }
        out.push_back({{"start", s.start_index}, {"end", s.end_index}, {"set_bits", bits}});
    }
    return out;
}

}  // namespace grt
