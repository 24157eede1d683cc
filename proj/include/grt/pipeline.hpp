// Copyright 2026 The GRT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <json.hpp>

#include "grt/ingest.hpp"
#include "grt/pixelcode.hpp"
#include "grt/scenemerge.hpp"
#include "grt/tokenizer.hpp"

namespace grt {

struct PipelineConfig {
    SceneConfig scene;
    MergeConfig merge;
    int embed_dim = 64;
    int heads = 4;
    int layers = 2;
    PlaceholderMode placeholder = PlaceholderMode::Masked;
    std::optional<std::filesystem::path> weights_path;  // seeded weights when empty
    std::uint64_t seed = 42;
    unsigned threads = 1;
    bool no_merge = false;
    /// Baseline mode: every patch of every frame is gated in and merging is
    /// skipped, so the output is the full frames x N token sequence.
    bool all_pass = false;

    void validate() const;
};

void to_json(nlohmann::json& j, const PipelineConfig& cfg);
/// Fields absent from `j` keep the values already in `cfg`.
void merge_json(const nlohmann::json& j, PipelineConfig& cfg);

struct StageCounts {
    std::size_t frames = 0;
    std::size_t scenes = 0;
    std::size_t groups = 0;
    std::size_t baseline = 0;       // frames x N
    std::size_t after_pruning = 0;  // sum over scenes of N + gated P tokens
    std::size_t after_merging = 0;  // flattened length

    double pruning_ratio() const noexcept {
        return baseline ? static_cast<double>(after_pruning) / static_cast<double>(baseline) : 0.0;
    }
    double merging_ratio() const noexcept {
        return baseline ? static_cast<double>(after_merging) / static_cast<double>(baseline) : 0.0;
    }
};

struct PipelineResult {
    std::vector<Scene> scenes;
    std::vector<SceneTokens> scene_tokens;
    std::vector<MergedSceneTokens> groups;
    FlatTokens flat;
    StageCounts counts;
};

/// Seeded weights sized for `seq`, or the GRTW file named in the config
/// (checked against the sequence's patch geometry).
TokenizerWeights make_weights(const PipelineConfig& cfg, const FrameSequence& seq);

/// segment -> gate-tokenize -> merge -> flatten.
PipelineResult run_pipeline(const FrameSequence& seq, const PipelineConfig& cfg, const TokenizerWeights& w);

/// Encodes every scene with the gated tokenizer (no merging).
std::vector<SceneTokens> tokenize_scenes(const std::vector<Scene>& scenes, const FrameSequence& seq,
                                         const PipelineConfig& cfg, const TokenizerWeights& w);

}  // namespace grt
