// Copyright 2026 The GRT Authors
// SPDX-License-Identifier: Apache-2.0

#include <fstream>
#include <random>
#include <sstream>

#include <doctest.h>

#include "grt/synthbench.hpp"
#include "helpers.hpp"

using namespace grt;
using testing::TempDir;

namespace {

std::vector<std::uint32_t> set_bits(const GateMask& m) {
    std::vector<std::uint32_t> out;
    for (std::size_t i = 0; i < m.size(); ++i)
        if (m.bits[i]) out.push_back(static_cast<std::uint32_t>(i));
    return out;
}

PipelineConfig small_cfg() {
    PipelineConfig cfg;
    cfg.embed_dim = 16;
    cfg.heads = 2;
    cfg.layers = 1;
    return cfg;
}

}  // namespace

TEST_CASE("generator examples") {
    SynthSpec spec;
    spec.width = spec.height = 64;
    spec.segments = {{5, 0.0, false}};
    const auto [still, ann0] = generate_synthetic(spec);
    for (const auto& f : still.frames) CHECK(f.pixels == still.frames[0].pixels);
    for (std::size_t f = 1; f < 5; ++f) CHECK(ann0.changed[f].empty());
    CHECK(ann0.changed[0].size() == 16);

    spec.segments = {{4, 1.0, false}};
    const auto ann1 = generate_synthetic(spec).second;
    for (const auto& p : ann1.perturbed) CHECK(p.size() == 16);

    SynthSpec big;
    big.segments = {{6, 0.05, false}};
    const auto [seq, ann] = generate_synthetic(big);
    CHECK(seq.width == 224);
    for (const auto& p : ann.perturbed) CHECK(p.size() == 10);
    for (std::size_t f = 1; f < 6; ++f) CHECK(ann.changed[f] == ann.perturbed[f]);
    // The perturbed pixels really differ from frame to frame, nothing else does.
    const auto& moving = ann.perturbed[1];
    for (std::uint32_t p = 0; p < 196; ++p) {
        bool differs = false;
        const int x0 = static_cast<int>(p % 14) * 16, y0 = static_cast<int>(p / 14) * 16;
        for (int y = y0; y < y0 + 16 && !differs; ++y)
            for (int x = x0; x < x0 + 16 && !differs; ++x) differs = seq.frames[1].at(x, y, 0) != seq.frames[2].at(x, y, 0);
        CHECK(differs == std::binary_search(moving.begin(), moving.end(), p));
    }
}

TEST_CASE("synthetic clip description: validation and json") {
    SynthSpec bad;
    bad.width = 100;
    bad.segments = {{3, 0.1, false}};
    CHECK_GRT_ERROR(generate_synthetic(bad), ErrorCode::InvalidSpec);
    SynthSpec frac;
    frac.segments = {{3, 1.5, false}};
    CHECK_GRT_ERROR(generate_synthetic(frac), ErrorCode::InvalidSpec);
    CHECK_GRT_ERROR(generate_synthetic(SynthSpec{}), ErrorCode::InvalidSpec);
    SynthSpec dur;
    dur.segments = {{10, 0.1, false}};
    dur.duration = 20;
    CHECK_GRT_ERROR(dur.validate(), ErrorCode::InvalidSpec);
    dur.duration = 10;
    CHECK_NOTHROW(dur.validate());

    TempDir dir;
    SynthSpec s;
    s.fps = Rational::from_double(0.5);
    s.segments = {{2, 0.25, false}, {3, 0.5, true}};
    std::ofstream(dir / "s.json") << nlohmann::json(s).dump();
    const auto back = load_synth_spec(dir / "s.json");
    CHECK(back.fps == Rational(1, 2));
    CHECK(back.segments.size() == 2);
    CHECK(back.segments[1].cut_before);
    CHECK(generate_synthetic(back).first.frames[4].pixels == generate_synthetic(s).first.frames[4].pixels);
    CHECK_GRT_ERROR(load_synth_spec(dir / "missing.json"), ErrorCode::MissingFile);
}

TEST_CASE("property: generator determinism") {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 200; ++i) {
        SynthSpec spec;
        spec.width = spec.height = 32;
        spec.channels = i % 3 ? 3 : 1;
        spec.seed = rng();
        spec.segments = {{1 + rng() % 3, static_cast<double>(rng() % 5) / 4.0, false},
                         {1 + rng() % 3, static_cast<double>(rng() % 5) / 4.0, rng() % 2 == 0}};
        const auto a = generate_synthetic(spec), b = generate_synthetic(spec);
        REQUIRE(a.first.size() == b.first.size());
        for (std::size_t f = 0; f < a.first.size(); ++f) REQUIRE(a.first.frames[f].pixels == b.first.frames[f].pixels);
        REQUIRE(a.second.changed == b.second.changed);
        REQUIRE(a.second.perturbed == b.second.perturbed);
    }
}

TEST_CASE("property: gates match the oracle change sets") {
    std::mt19937_64 rng(2);
    int frames = 0;
    for (int trial = 0; trial < 40; ++trial) {
        SynthSpec spec;
        spec.width = spec.height = 64;
        spec.seed = rng();
        spec.noise_amplitude = 50 + static_cast<double>(rng() % 100);
        for (int s = 0; s < 3; ++s)
            spec.segments.push_back({2 + rng() % 4, static_cast<double>(rng() % 9) / 16.0, s > 0 && rng() % 2 == 0});
        const auto [seq, ann] = generate_synthetic(spec);
        for (std::size_t j = 1; j < seq.size(); ++j, ++frames) {
            const auto curr = extract_patches(luma_view(seq.frames[j]), 16);
            const auto prev = extract_patches(luma_view(seq.frames[j - 1]), 16);
            REQUIRE(set_bits(compute_gate_mask(curr, prev, 0.9, false)) == ann.changed[j]);
            const std::size_t i = rng() % j;
            if (i < j) {
                const auto old = extract_patches(luma_view(seq.frames[i]), 16);
                REQUIRE(set_bits(compute_gate_mask(curr, old, 0.9, false)) == changed_between(ann, i, j));
            }
        }
    }
    CHECK(frames >= 200);
}

TEST_CASE("annotation json") {
    SynthSpec spec;
    spec.width = spec.height = 32;
    spec.segments = {{2, 0.25, false}, {2, 0.25, true}};
    const auto j = annotation_json(generate_synthetic(spec).second);
    CHECK(j["patch_count"] == 4);
    CHECK(j["changed"].size() == 4);
    CHECK(j["segments"][1]["start"] == 2);
    CHECK(j["segments"][1]["cut_before"] == true);
}

TEST_CASE("retention sweep on a static clip") {
    SynthSpec spec;
    spec.width = spec.height = 64;
    spec.segments = {{40, 0.0, false}};
    const auto seq = generate_synthetic(spec).first;
    auto cfg = small_cfg();
    cfg.scene.max_gop = 10;
    const auto rep = run_retention_sweep(seq, {Rational(1, 1), Rational(1, 10), Rational(1, 2)}, cfg);
    REQUIRE(rep.rows.size() == 3);
    CHECK(rep.rows[0].fps == doctest::Approx(0.1));
    CHECK(rep.rows[2].fps == doctest::Approx(1.0));
    for (const auto& r : rep.rows) {
        CHECK(r.merging_ratio <= r.pruning_ratio);
        CHECK(r.pruning_ratio <= 1.0);
        CHECK(r.baseline_tokens % 16 == 0);
    }
    // 40 frames in gops of 10: 4 key frames of 16 patches.
    CHECK(rep.rows[2].after_pruning == 64);
    CHECK(rep.rows[2].pruning_ratio == doctest::Approx(4.0 * 16 / (40.0 * 16)));
    CHECK(rep.rows[2].after_merging == 1);

    CHECK_GRT_ERROR(run_retention_sweep(seq, {}, cfg), ErrorCode::InvalidConfig);
    CHECK_GRT_ERROR(run_retention_sweep(seq, {Rational(2, 1)}, cfg), ErrorCode::UpsampleRequested);
}

TEST_CASE("timing sweep bookkeeping") {
    SynthSpec spec;
    spec.width = spec.height = 64;
    spec.segments = {{1, 0.0, false}};
    const auto seq = generate_synthetic(spec).first;
    const auto rep = run_timing_sweep(seq, {Rational(1, 1)}, 3, small_cfg());
    REQUIRE(rep.rows.size() == 1);
    CHECK(rep.repetitions == 3);
    CHECK(rep.rows[0].full_tokens == 16);
    CHECK(rep.rows[0].gated_tokens == 16);
    CHECK(rep.rows[0].full_tokenize_seconds > 0);
    CHECK(rep.rows[0].speedup_percent ==
          doctest::Approx((rep.rows[0].full_tokenize_seconds - rep.rows[0].gated_tokenize_seconds) /
                          rep.rows[0].full_tokenize_seconds * 100));
    CHECK_FALSE(rep.environment.empty());
    CHECK_GRT_ERROR(run_timing_sweep(seq, {Rational(1, 1)}, 2, small_cfg()), ErrorCode::InvalidConfig);
}

TEST_CASE("reports round trip") {
    RetentionReport r;
    r.rows = {{0.01, 196, 196, 196, 1.0, 1.0}, {0.1, 19600, 18816, 6468, 0.96, 0.33}, {1, 196000, 176400, 27440, 0.9, 0.14}};
    for (auto f : {ReportFormat::Json, ReportFormat::Csv}) CHECK(parse_retention(render(r, f), f) == r);
    const auto csv = render(r, ReportFormat::Csv);
    CHECK(csv.substr(0, csv.find('\n')) == "fps,baseline,after_pruning,after_merging,pruning_ratio,merging_ratio");
    const auto md = render(r, ReportFormat::Markdown);
    CHECK(std::count(md.begin(), md.end(), '\n') == 2 + 3);

    TimingReport t;
    t.repetitions = 5;
    t.environment = "test box";
    t.rows = {{0.01, 2, 0.125, 0.1, 20.0, 392, 392}, {1, 200, 1.0 / 3.0, 0.2, 40.0, 39200, 1000}};
    for (auto f : {ReportFormat::Json, ReportFormat::Csv}) CHECK(parse_timing(render(t, f), f) == t);

    TempDir dir;
    emit_report(r, ReportFormat::Csv, dir / "r.csv");
    std::ifstream in(dir / "r.csv");
    std::stringstream ss;
    ss << in.rdbuf();
    CHECK(ss.str() == csv);
    CHECK_GRT_ERROR(emit_report(r, ReportFormat::Json, dir / "no" / "such" / "r.json"), ErrorCode::IoError);
    CHECK_GRT_ERROR(parse_report_format("xml"), ErrorCode::InvalidConfig);
}
