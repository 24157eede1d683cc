// Copyright 2026 The GRT Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance gate. Prints one PASS/FAIL line per criterion with the measured
// value, its tolerance, and the wall-clock limit. Exit status is nonzero if
// any criterion fails.
//
//   grt_acceptance [--cli path/to/grt] [--only N]

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>

#include "grt/pipeline.hpp"
#include "grt/synthbench.hpp"
#include "grt/token_file.hpp"
#include "oracles.hpp"

using namespace grt;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::vector<std::uint32_t> set_bits(const GateMask& m) {
    std::vector<std::uint32_t> out;
    for (std::size_t i = 0; i < m.size(); ++i)
        if (m.bits[i]) out.push_back(static_cast<std::uint32_t>(i));
    return out;
}

bool patch_equal(const Frame& a, const Frame& b, std::uint32_t patch, int ps) {
    const int gw = a.width / ps;
    const int x0 = static_cast<int>(patch % gw) * ps, y0 = static_cast<int>(patch / gw) * ps;
    for (int y = y0; y < y0 + ps; ++y)
        for (int x = x0; x < x0 + ps; ++x)
            for (int c = 0; c < a.channels; ++c)
                if (a.at(x, y, c) != b.at(x, y, c)) return false;
    return true;
}

// Six 100-second shots separated by hard cuts; 5% of patches move.
SynthSpec shots_spec(int size) {
    SynthSpec spec;
    spec.width = spec.height = size;
    spec.fps = {1, 1};
    spec.noise_amplitude = 60;
    spec.seed = 2026;
    for (int s = 0; s < 6; ++s) spec.segments.push_back({100, 0.05, s > 0});
    return spec;
}

// 1. Flattened convolution kernels as an MLP.
Outcome conv_mlp() {
    std::mt19937_64 rng(101);
    double worst = 0;
    const int pss[] = {2, 4, 8, 16};
    for (int i = 0; i < 1000; ++i) {
        const int ps = pss[rng() % 4];
        const int c = rng() % 2 ? 3 : 1;
        const int d = 4 * (1 + static_cast<int>(rng() % 8));
        auto w = init_weights_seeded(d, 4, 1, ps, c, 1, rng());
        std::normal_distribution<float> g(0.0f, 1.0f);
        for (auto& x : w.embed_matrix) x = g(rng);
        for (auto& x : w.embed_bias) x = g(rng);
        const auto f = oracle::random_frame(rng, ps, ps, c);
        const auto ref = oracle::conv2d_patchify(f, ps, w.embed_matrix, w.embed_bias, d);
        const auto got = embed_patch(extract_patches(f, ps).patches[0], true, w);
        for (int o = 0; o < d; ++o) worst = std::max(worst, std::abs(got[o] - ref[o]));
    }
    return {worst <= 1e-5, "1000 pairs, max_abs_err=" + fmt("%.3g", worst) + " (tol 1e-5)"};
}

// 2. All-one masks in dense mode reproduce a plain ViT.
Outcome all_pass_equivalence() {
    std::mt19937_64 rng(202);
    const auto w = init_weights_seeded(64, 4, 2, 16, 3, 196, 7);
    double worst = 0;
    bool identical = true;
    std::vector<PatchGrid> grids;
    std::vector<Frame> frames;
    for (int i = 0; i < 20; ++i) {
        frames.push_back(oracle::random_frame(rng, 224, 224, 3));
        grids.push_back(extract_patches(frames.back(), 16));
    }
    std::vector<GateMask> masks(20, GateMask::full(196));
    EncodeOptions opts;
    opts.mode = PlaceholderMode::Dense;
    const auto st = assemble_and_encode(grids, masks, w, opts);
    for (int i = 0; i < 20; ++i) {
        const TokenSet& set = i == 0 ? st.key_set : st.p_sets[static_cast<std::size_t>(i - 1)];
        const auto ref = oracle::vit_frame(frames[static_cast<std::size_t>(i)], 16, w);
        const auto full = tokenize_full_frame(grids[static_cast<std::size_t>(i)], w);
        for (std::size_t t = 0; t < 196; ++t) {
            for (std::size_t e = 0; e < 64; ++e) {
                worst = std::max(worst, std::abs(set.tokens[t].embedding[e] - ref[t][e]));
                identical = identical && set.tokens[t].embedding[e] == full[t * 64 + e];
            }
        }
    }
    return {worst <= 1e-5 && identical, "20 frames 224x224, max_abs_err vs double-precision ViT=" +
                                            fmt("%.3g", worst) + " (tol 1e-5), bitwise equal to full-frame path=" +
                                            (identical ? "yes" : "no")};
}

// 3. Reconstruction: exact with all-one masks; exact on gated patches at tau 0.9.
Outcome reconstruction() {
    SynthSpec spec;
    spec.seed = 303;
    spec.segments = {{40, 0.1, false}, {30, 0.3, true}, {30, 0.05, false}};
    const auto [seq, ann] = generate_synthetic(spec);
    SceneConfig all;
    all.all_pass = true;
    std::size_t exact_frames = 0;
    for (const Scene& s : segment_scenes(seq, all))
        for (std::size_t i = 0; i <= s.residuals.size(); ++i)
            exact_frames += reconstruct(s, i, 16).pixels == seq.frames[s.start_index + i].pixels;

    // Sub-threshold noise: some changes stay below tau and are never gated.
    SynthSpec weak = spec;
    weak.noise_amplitude = 3;
    weak.segments.push_back({20, 0.2, true});
    auto [wseq, wann] = generate_synthetic(weak);
    // Overlay strong changes on every other frame of the last shot so both
    // gated and ungated changes occur.
    std::mt19937_64 rng(304);
    for (std::size_t f = 101; f < wseq.size(); f += 2) {
        for (std::uint32_t p : {3u, 50u, 100u}) {
            const int x0 = static_cast<int>(p % 14) * 16, y0 = static_cast<int>(p / 14) * 16;
            for (int y = y0; y < y0 + 16; ++y)
                for (int x = x0; x < x0 + 16; ++x)
                    for (int c = 0; c < 3; ++c) wseq.frames[f].at(x, y, c) = static_cast<std::uint8_t>(rng() & 0xFF);
        }
    }
    // The strong overlay changes patches 3, 50, 100 on every frame from 101 on.
    for (std::size_t f = 101; f < wseq.size(); ++f) {
        auto& ch = wann.changed[f];
        for (std::uint32_t p : {3u, 50u, 100u})
            if (!std::binary_search(ch.begin(), ch.end(), p)) ch.insert(std::upper_bound(ch.begin(), ch.end(), p), p);
    }
    SceneConfig gated;
    gated.tau = 0.9;
    std::size_t checked = 0, mismatched = 0;
    for (const Scene& s : segment_scenes(wseq, gated)) {
        for (std::size_t i = 1; i <= s.residuals.size(); ++i) {
            const auto rec = reconstruct(s, i, 16);
            for (std::uint32_t p = 0; p < 196; ++p) {
                bool always_gated = true;
                for (std::size_t j = 1; j <= i && always_gated; ++j) {
                    const auto& ch = wann.changed[s.start_index + j];
                    always_gated = !std::binary_search(ch.begin(), ch.end(), p) || s.residuals[j - 1].mask.bits[p];
                }
                if (!always_gated) continue;
                ++checked;
                mismatched += !patch_equal(rec, wseq.frames[s.start_index + i], p, 16);
            }
        }
    }
    const bool ok = exact_frames == seq.size() && mismatched == 0 && checked > 0;
    return {ok, "all-one masks: " + std::to_string(exact_frames) + "/" + std::to_string(seq.size()) +
                    " frames bit-exact; tau 0.9: " + std::to_string(mismatched) + " mismatches over " +
                    std::to_string(checked) + " gated patch checks (tol 0)"};
}

// 4. Gate masks against oracle change annotations.
Outcome gating_soundness() {
    SynthSpec spec;
    spec.seed = 404;
    spec.noise_amplitude = 50;
    spec.segments = {{30, 0.05, false}, {25, 0.2, false}, {25, 0.5, true}, {20, 0.1, true}};
    const auto [seq, ann] = generate_synthetic(spec);
    std::size_t match = 1;  // frame 0: key mask all-one == every patch
    for (std::size_t j = 1; j < seq.size(); ++j) {
        const auto curr = extract_patches(luma_view(seq.frames[j]), 16);
        const auto prev = extract_patches(luma_view(seq.frames[j - 1]), 16);
        match += set_bits(compute_gate_mask(curr, prev, 0.9, false)) == ann.changed[j];
    }
    // Masks stored by segmentation agree with the oracle too.
    SceneConfig cfg;
    std::size_t stored = 0, stored_match = 0;
    for (const Scene& s : segment_scenes(seq, cfg)) {
        for (std::size_t j = 0; j < s.residuals.size(); ++j, ++stored)
            stored_match += set_bits(s.residuals[j].mask) == ann.changed[s.start_index + j + 1];
    }
    const double frac = static_cast<double>(match) / static_cast<double>(seq.size());
    return {frac >= 0.99 && stored_match == stored,
            std::to_string(match) + "/" + std::to_string(seq.size()) + " frames exact (" + fmt("%.4f", frac) +
                ", need >= 0.99); stored P masks " + std::to_string(stored_match) + "/" + std::to_string(stored)};
}

std::size_t gated_tokens(const FrameSequence& seq, const TokenizerWeights& w) {
    PipelineConfig cfg;
    cfg.no_merge = true;
    return run_pipeline(seq, cfg, w).counts.after_pruning;
}

// 5. Token count grows with moving content, not with frame count.
Outcome sublinear_growth() {
    SynthSpec spec;
    spec.seed = 505;
    spec.fps = {2, 1};
    spec.segments = {{64, 0.05, false}};
    const auto [seq, ann] = generate_synthetic(spec);
    const auto w = init_weights_seeded(64, 4, 2, 16, 3, 196, 42);

    // Same 4-second clip sampled at 1 fps and 2 fps.
    SynthSpec clip = spec;
    clip.segments = {{8, 0.05, false}};
    const auto hi = generate_synthetic(clip).first;
    const auto lo = resample_fps(hi, {1, 1});
    const std::size_t g_lo = gated_tokens(lo, w), g_hi = gated_tokens(hi, w);
    const double factor = static_cast<double>(g_hi) / static_cast<double>(g_lo);
    const bool baseline_doubles = hi.size() * 196 == 2 * lo.size() * 196;

    // Exact law N + ceil(0.05 N) (F - 1) for every prefix length.
    bool law = true;
    std::string trail;
    for (std::size_t f : {2u, 4u, 8u, 16u, 32u, 64u}) {
        FrameSequence prefix = seq;
        prefix.frames.resize(f);
        const std::size_t got = gated_tokens(prefix, w);
        std::size_t oracle_count = 196;
        for (std::size_t j = 1; j < f; ++j) oracle_count += ann.changed[j].size();
        law = law && got == oracle_count && got == 196 + 10 * (f - 1);
        trail += " F=" + std::to_string(f) + ":" + std::to_string(got);
    }
    return {factor <= 1.2 && baseline_doubles && law,
            "4->8 frames: gated " + std::to_string(g_lo) + "->" + std::to_string(g_hi) + " factor=" +
                fmt("%.4f", factor) + " (need <= 1.2), baseline x" + (baseline_doubles ? "2 exact" : "?") +
                "; N+10(F-1) law " + (law ? "exact" : "BROKEN") + ":" + trail};
}

// 6. Retention ordering across the fps sweep.
Outcome retention_trend() {
    const auto seq = generate_synthetic(shots_spec(224)).first;
    PipelineConfig cfg;
    cfg.scene.rho = 0.5;
    cfg.scene.max_gop = 10;
    const auto rep = run_retention_sweep(seq, {Rational(1, 100), Rational(1, 10), Rational(1, 1)}, cfg);
    bool ok = rep.rows.size() == 3;
    std::string detail;
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
        const auto& r = rep.rows[i];
        ok = ok && r.merging_ratio <= r.pruning_ratio + 1e-12 && r.pruning_ratio <= 1.0 + 1e-9;
        if (i > 0) {
            ok = ok && r.pruning_ratio <= rep.rows[i - 1].pruning_ratio + 1e-12 &&
                 r.merging_ratio <= rep.rows[i - 1].merging_ratio + 1e-12;
        }
        detail += " fps=" + fmt("%g", r.fps) + " prune=" + fmt("%.3f", r.pruning_ratio) +
                  " merge=" + fmt("%.3f", r.merging_ratio) + ";";
    }
    return {ok, "non-increasing in fps, merge <= prune:" + detail};
}

// 7. Gated tokenization is faster, and more so at higher fps.
Outcome timing_trend() {
    const auto seq = generate_synthetic(shots_spec(112)).first;
    PipelineConfig cfg;
    cfg.scene.max_gop = 10;
    const auto rep = run_timing_sweep(seq, {Rational(1, 100), Rational(1, 10), Rational(1, 1)}, 3, cfg);
    const auto& lo = rep.rows.front();
    const auto& hi = rep.rows.back();
    const bool ok = hi.gated_tokenize_seconds <= hi.full_tokenize_seconds && hi.speedup_percent > lo.speedup_percent;
    std::string detail;
    for (const auto& r : rep.rows) {
        detail += " fps=" + fmt("%g", r.fps) + " full=" + fmt("%.4fs", r.full_tokenize_seconds) +
                  " gated=" + fmt("%.4fs", r.gated_tokenize_seconds) + " speedup=" + fmt("%.1f%%", r.speedup_percent) + ";";
    }
    return {ok, "median of 3 reps:" + detail};
}

// 8. Closed-form merge arithmetic.
Outcome merging_math() {
    const TokenDistribution p{{1.0, 0.0}}, q{{0.0, 1.0}}, h{{0.5, 0.5}};
    const double j0 = jsd(p, p), j1 = jsd(p, q), jh = jsd(p, h);
    const double jh_ref = 0.5 * std::log2(4.0 / 3.0) + 0.5 * (0.5 * std::log2(2.0 / 3.0) + 0.5);
    auto set = [](std::vector<Embedding> vs) {
        TokenSet s;
        for (auto& v : vs) s.tokens.push_back({v, 0, 0});
        return s;
    };
    const double c0 = cosine_distance(set({{1, 0}}), set({{1, 0}}));
    const double c1 = cosine_distance(set({{1, 0}}), set({{0, 1}}));
    const double c2 = cosine_distance(set({{1, 0}}), set({{-1, 0}}));
    const auto merged = merge_pair(as_group(SceneTokens{set({{1, 0}}), {}}, 0), SceneTokens{set({{0, 1}}), {}}, 1);
    const bool rep_ok = merged.merged() && std::get<Embedding>(merged.representative) == Embedding{0.5f, 0.5f};
    const bool ok = std::abs(j0) <= 1e-6 && std::abs(j1 - 1) <= 1e-6 && std::abs(jh - jh_ref) <= 1e-6 &&
                    std::abs(jh - 0.3113) <= 1e-4 && c0 == 0 && c1 == 1 && c2 == 2 && rep_ok;
    return {ok, "jsd=" + fmt("%.9f", j0) + "/" + fmt("%.9f", j1) + "/" + fmt("%.9f", jh) +
                    " (tol 1e-6), cosine=" + fmt("%g", c0) + "/" + fmt("%g", c1) + "/" + fmt("%g", c2) +
                    " (exact), representative=(0.5,0.5) " + (rep_ok ? "exact" : "WRONG")};
}

int run_shell(const std::string& cmd) {
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

// 9. Two tokenize runs give byte-identical token files.
Outcome determinism(const std::optional<std::string>& cli) {
    const fs::path dir = fs::temp_directory_path() / ("grt_accept_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    SynthSpec spec;
    spec.seed = 909;
    spec.segments = {{15, 0.1, false}, {15, 0.1, true}, {10, 0.05, false}};
    const auto seq = generate_synthetic(spec).first;
    const auto manifest = save_frame_sequence(seq, dir / "video", FrameFormat::PngSequence);
    std::string how;
    std::string a, b;
    if (cli) {
        how = "CLI";
        for (const char* name : {"a.grtt", "b.grtt"}) {
            const int rc = run_shell(*cli + " tokenize --seed 42 --threads 2 --manifest " + manifest.string() +
                                     " --out " + (dir / name).string() + " > /dev/null 2>&1");
            if (rc != 0) {
                fs::remove_all(dir);
                return {false, "CLI exited with " + std::to_string(rc)};
            }
        }
        a = slurp(dir / "a.grtt");
        b = slurp(dir / "b.grtt");
    } else {
        how = "library";
        PipelineConfig cfg;
        const auto loaded = load_frame_sequence(manifest);
        a = encode_grtt(run_pipeline(loaded, cfg, make_weights(cfg, loaded)).flat);
        b = encode_grtt(run_pipeline(loaded, cfg, make_weights(cfg, loaded)).flat);
    }
    fs::remove_all(dir);
    return {!a.empty() && a == b, how + " runs: " + std::to_string(a.size()) + " bytes, identical=" + (a == b ? "yes" : "no")};
}

// 10. Randomized property suites, 250 cases each.
Outcome property_suites() {
    std::mt19937_64 rng(1010);
    std::size_t failures = 0;
    constexpr int kCases = 250;

    // Gate monotonicity in tau.
    for (int i = 0; i < kCases; ++i) {
        Frame a = oracle::random_frame(rng, 32, 32, 1), b = a;
        for (auto& px : b.pixels) {
            const int amp = static_cast<int>(rng() % 60);
            px = static_cast<std::uint8_t>(std::clamp(int{px} + static_cast<int>(rng() % (2 * amp + 1)) - amp, 0, 255));
        }
        std::uniform_real_distribution<double> u(0, 1);
        double t1 = u(rng), t2 = u(rng);
        if (t1 > t2) std::swap(t1, t2);
        const auto m1 = compute_gate_mask(extract_patches(b, 8), extract_patches(a, 8), t1, false);
        const auto m2 = compute_gate_mask(extract_patches(b, 8), extract_patches(a, 8), t2, false);
        for (std::size_t n = 0; n < m1.size(); ++n) failures += m1.bits[n] > m2.bits[n];
    }

    // Distance symmetry (cosine and JSD).
    std::normal_distribution<float> g(0.3f, 1.0f);
    auto rand_set = [&](std::size_t n, std::size_t d) {
        TokenSet s;
        for (std::size_t i = 0; i < n; ++i) {
            Embedding v(d);
            for (auto& x : v) x = g(rng);
            s.tokens.push_back({v, 0, i});
        }
        return s;
    };
    for (int i = 0; i < kCases; ++i) {
        const std::size_t d = 2 + rng() % 8;
        const auto a = rand_set(1 + rng() % 20, d), b = rand_set(1 + rng() % 20, d);
        failures += cosine_distance(a, b) != cosine_distance(b, a);
        std::vector<Embedding> pool;
        for (const auto* s : {&a, &b})
            for (const auto& t : s->tokens) pool.push_back(t.embedding);
        const int k = static_cast<int>(std::min<std::size_t>(pool.size(), 2 + rng() % 6));
        const auto cb = build_codebook(pool, k, rng());
        const auto pa = token_distribution(a, cb, 1e-6), pb = token_distribution(b, cb, 1e-6);
        const double ab = jsd(pa, pb);
        failures += ab != jsd(pb, pa) || ab < 0 || ab > 1;
    }

    // P-order preservation and flatten accounting under merging.
    for (int i = 0; i < kCases; ++i) {
        std::vector<SceneTokens> scenes;
        std::size_t frame = 0;
        const float base = g(rng);
        for (std::size_t s = 0, n = 1 + rng() % 6; s < n; ++s) {
            SceneTokens st;
            const float centre = rng() % 2 ? base : -base;
            for (std::size_t t = 0, nk = 2 + rng() % 6; t < nk; ++t)
                st.key_set.tokens.push_back({{centre + 0.1f * g(rng), 1.0f, 0.1f * g(rng)}, frame, t});
            for (std::size_t f = 0, np = rng() % 4; f < np; ++f) {
                TokenSet p;
                p.kind = TokenKind::P;
                ++frame;
                for (std::size_t t = 0, nt = rng() % 4; t < nt; ++t) p.tokens.push_back({{g(rng), g(rng), g(rng)}, frame, rng() % 50});
                st.p_sets.push_back(p);
            }
            ++frame;
            scenes.push_back(st);
        }
        MergeConfig cfg;
        cfg.metric = i % 2 ? MergeMetric::Jsd : MergeMetric::Cosine;
        cfg.delta = 0.2 * static_cast<double>(rng() % 5);
        const auto keys = collect_key_tokens(scenes);
        const auto cb = build_codebook(keys, static_cast<int>(std::min<std::size_t>(keys.size(), 4)), rng());
        const auto groups = merge_pass(scenes, cfg, &cb);
        const auto flat = flatten_tokens(groups, 3);
        std::size_t expect = 0, before = 0;
        for (const auto& grp : groups) {
            expect += grp.representative_size();
            for (const auto& p : grp.p_sets) expect += p.size();
        }
        for (const auto& s : scenes) {
            before += s.key_set.size();
            for (const auto& p : s.p_sets) before += p.size();
        }
        failures += flat.size() != expect || flat.data.size() != expect * 3;
        failures += (flat.size() == before) != (groups.size() == scenes.size()) || flat.size() > before;
        std::vector<std::pair<std::uint32_t, std::uint32_t>> got, want;
        for (const auto& e : flat.index)
            if (e.kind == FlatKind::P) got.push_back({e.frame, e.patch});
        for (const auto& s : scenes)
            for (const auto& p : s.p_sets)
                for (const auto& t : p.tokens)
                    want.push_back({static_cast<std::uint32_t>(t.frame_index), static_cast<std::uint32_t>(t.patch_index)});
        failures += got != want;
    }
    return {failures == 0, "4 suites x " + std::to_string(kCases) + " cases (gate monotonicity, distance symmetry, "
                           "P order, flatten length): " + std::to_string(failures) + " failures"};
}

}  // namespace

int main(int argc, char** argv) {
    std::optional<std::string> cli;
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--cli" && i + 1 < argc) cli = argv[++i];
        else if (a == "--only" && i + 1 < argc) only = std::atoi(argv[++i]);
    }

    struct Criterion {
        int id;
        const char* name;
        double limit_s;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "conv-as-mlp embedding", 10, conv_mlp},
        {2, "all-pass equivalence", 30, all_pass_equivalence},
        {3, "reconstruction", 30, reconstruction},
        {4, "gating soundness", 30, gating_soundness},
        {5, "sub-linear token growth", 60, sublinear_growth},
        {6, "retention trend", 120, retention_trend},
        {7, "tokenization latency trend", 300, timing_trend},
        {8, "merging math", 5, merging_math},
        {9, "end-to-end determinism", 60, [&] { return determinism(cli); }},
        {10, "property suites", 120, property_suites},
    };

    int failed = 0;
    for (const auto& c : criteria) {
        if (only && c.id != only) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs <= c.limit_s;
        const bool pass = o.pass && in_time;
        failed += !pass;
        std::cout << (pass ? "PASS" : "FAIL") << "  [" << (c.id < 10 ? " " : "") << c.id << "] " << c.name << ": "
                  << o.detail << " | " << fmt("%.2f", secs) << "s (limit " << fmt("%g", c.limit_s) << "s"
                  << (in_time ? "" : ", EXCEEDED") << ")" << std::endl;
    }
    std::cout << (failed ? "acceptance: " + std::to_string(failed) + " criterion(s) failed" : "acceptance: all passed")
              << std::endl;
    return failed ? 1 : 0;
}
