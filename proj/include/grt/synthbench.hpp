// Copyright 2026 The GRT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "grt/ingest.hpp"
#include "grt/pipeline.hpp"

namespace grt {

struct SynthSegment {
    std::size_t length = 1;          // frames
    double moving_fraction = 0.0;    // share of patches re-noised every frame
    bool cut_before = false;         // fresh background at the segment start
};

/// Synthetic dense video: each segment has a static seeded background and a
/// fixed set of ceil(moving_fraction * N) patches that receive fresh noise
/// on every frame. Cuts swap the whole background.
struct SynthSpec {
    int width = 224;
    int height = 224;
    int channels = 3;
    int patch_size = 16;
    Rational fps{1, 1};
    /// Seconds; 0 means "derive from segment lengths". When set it must
    /// agree with the segment total to within half a frame.
    double duration = 0.0;
    std::vector<SynthSegment> segments;
    double noise_amplitude = 60.0;
    std::uint64_t seed = 42;

    std::size_t frame_count() const noexcept;
    std::size_t patch_count() const noexcept {
        return static_cast<std::size_t>(width / patch_size) * static_cast<std::size_t>(height / patch_size);
    }
    void validate() const;
};

void to_json(nlohmann::json& j, const SynthSpec& spec);
void from_json(const nlohmann::json& j, SynthSpec& spec);
SynthSpec load_synth_spec(const std::filesystem::path& path);

struct SegmentSpan {
    std::size_t start = 0;  // first frame
    std::size_t end = 0;    // one past the last frame
    bool cut_before = false;
};

struct OracleAnnotation {
    std::size_t patch_count = 0;
    /// Patches carrying segment noise in each frame (sorted).
    std::vector<std::vector<std::uint32_t>> perturbed;
    /// Patches whose pixels differ from the previous frame (sorted);
    /// frame 0 lists every patch.
    std::vector<std::vector<std::uint32_t>> changed;
    std::vector<SegmentSpan> segments;
};

std::pair<FrameSequence, OracleAnnotation> generate_synthetic(const SynthSpec& spec);

/// Patches that differ between frames i < j of the generated video.
std::vector<std::uint32_t> changed_between(const OracleAnnotation& ann, std::size_t i, std::size_t j);

nlohmann::json annotation_json(const OracleAnnotation& ann);

struct RetentionRow {
    double fps = 0.0;
    std::size_t baseline_tokens = 0;
    std::size_t after_pruning = 0;
    std::size_t after_merging = 0;
    double pruning_ratio = 0.0;
    double merging_ratio = 0.0;

    friend bool operator==(const RetentionRow&, const RetentionRow&) = default;
};

struct RetentionReport {
    std::vector<RetentionRow> rows;

    friend bool operator==(const RetentionReport&, const RetentionReport&) = default;
};

struct TimingRow {
    double fps = 0.0;
    std::size_t frames = 0;
    double full_tokenize_seconds = 0.0;
    double gated_tokenize_seconds = 0.0;
    double speedup_percent = 0.0;
    std::size_t full_tokens = 0;
    std::size_t gated_tokens = 0;

    friend bool operator==(const TimingRow&, const TimingRow&) = default;
};

struct TimingReport {
    std::vector<TimingRow> rows;
    int repetitions = 0;
    std::string environment;

    friend bool operator==(const TimingReport&, const TimingReport&) = default;
};

RetentionReport run_retention_sweep(const FrameSequence& seq, std::vector<Rational> fps_list,
                                    const PipelineConfig& cfg);

/// Median over `reps` timed runs (after one discarded warm-up) of the full
/// all-pass dense tokenizer versus the gated tokenizer.
TimingReport run_timing_sweep(const FrameSequence& seq, std::vector<Rational> fps_list, int reps,
                              const PipelineConfig& cfg);

enum class ReportFormat { Json, Csv, Markdown };

ReportFormat parse_report_format(const std::string& s);

std::string render(const RetentionReport& r, ReportFormat f);
std::string render(const TimingReport& r, ReportFormat f);
RetentionReport parse_retention(const std::string& text, ReportFormat f);
TimingReport parse_timing(const std::string& text, ReportFormat f);

void emit_report(const RetentionReport& r, ReportFormat f, const std::filesystem::path& path);
void emit_report(const TimingReport& r, ReportFormat f, const std::filesystem::path& path);

inline constexpr const char* kRetentionCsvHeader =
    "fps,baseline,after_pruning,after_merging,pruning_ratio,merging_ratio";
inline constexpr const char* kTimingCsvHeader =
    "fps,frames,full_tokenize_seconds,gated_tokenize_seconds,speedup_percent,full_tokens,gated_tokens";

}  // namespace grt
