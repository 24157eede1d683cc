// Copyright 2026 The GRT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <variant>
#include <vector>

#include "grt/tokenizer.hpp"

namespace grt {

using Embedding = std::vector<float>;

struct Codebook {
    std::vector<float> centroids;  // [K x dim] row-major
    int K = 0;
    int dim = 0;
    std::uint64_t seed = 0;

    std::span<const float> centroid(std::size_t k) const {
        return {centroids.data() + k * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
    }
    /// Nearest centroid by Euclidean distance; ties go to the lowest index.
    std::size_t nearest(std::span<const float> v) const;
};

struct TokenDistribution {
    std::vector<double> probs;
};

enum class MergeMetric { Cosine, Jsd };

struct MergeConfig {
    double delta = 0.1;
    MergeMetric metric = MergeMetric::Jsd;
    int K = 64;
    double epsilon_floor = 1e-6;

    void validate() const;
    static double default_delta(MergeMetric m) { return m == MergeMetric::Jsd ? 0.1 : 0.05; }
};

/// One output group of the merge pass. An unmerged scene keeps its full key
/// set as representative; a merged group is represented by a single token.
struct MergedSceneTokens {
    std::variant<TokenSet, Embedding> representative;
    std::vector<TokenSet> p_sets;
    std::vector<std::size_t> source_scenes;
    /// Union of the sources' key tokens; drives the group's histogram.
    std::vector<Embedding> key_pool;

    bool merged() const noexcept { return std::holds_alternative<Embedding>(representative); }
    std::size_t representative_size() const noexcept {
        return merged() ? 1 : std::get<TokenSet>(representative).size();
    }
    /// Mean key embedding; for a merged group, the representative itself.
    std::vector<double> key_mean() const;
};

MergedSceneTokens as_group(const SceneTokens& st, std::size_t scene_id);

std::vector<double> mean_embedding(const TokenSet& ts);
std::vector<double> mean_embedding(std::span<const Embedding> tokens);

double cosine_distance(std::span<const double> mean_a, std::span<const double> mean_b);
double cosine_distance(const TokenSet& a, const TokenSet& b);

/// Seeded k-means++ initialization followed by Lloyd iterations (cap 100,
/// stop when no centroid moves more than 1e-6).
Codebook build_codebook(std::span<const Embedding> tokens, int K, std::uint64_t seed);

TokenDistribution token_distribution(std::span<const Embedding> tokens, const Codebook& cb, double epsilon_floor);
TokenDistribution token_distribution(const TokenSet& ts, const Codebook& cb, double epsilon_floor);

/// Jensen-Shannon divergence, base 2, in [0, 1].
double jsd(const TokenDistribution& p, const TokenDistribution& q);

MergedSceneTokens merge_pair(const MergedSceneTokens& s, const SceneTokens& t, std::size_t t_id);

/// Distance between a group and the next scene under the configured metric.
double group_distance(const MergedSceneTokens& group, const SceneTokens& next, const MergeConfig& cfg,
                      const Codebook* cb);

std::vector<MergedSceneTokens> merge_pass(const std::vector<SceneTokens>& scenes, const MergeConfig& cfg,
                                          const Codebook* cb);

/// Every key token of every scene, in scene order.
std::vector<Embedding> collect_key_tokens(const std::vector<SceneTokens>& scenes);

enum class FlatKind : std::uint32_t { Key = 0, P = 1, Rep = 2 };

inline constexpr std::uint32_t kNoIndex = 0xFFFFFFFFu;

struct FlatEntry {
    std::uint32_t group = 0;
    FlatKind kind = FlatKind::Key;
    std::uint32_t frame = 0;  // kNoIndex for representative tokens
    std::uint32_t patch = 0;  // kNoIndex for representative tokens

    friend bool operator==(const FlatEntry&, const FlatEntry&) = default;
};

struct FlatTokens {
    int embed_dim = 0;
    std::uint32_t group_count = 0;
    std::vector<float> data;  // [size() x embed_dim]
    std::vector<FlatEntry> index;

    std::size_t size() const noexcept { return index.size(); }
    friend bool operator==(const FlatTokens&, const FlatTokens&) = default;
};

FlatTokens flatten_tokens(const std::vector<MergedSceneTokens>& groups, int embed_dim);

/// Treats each scene as its own unmerged group.
std::vector<MergedSceneTokens> unmerged_groups(const std::vector<SceneTokens>& scenes);

}  // namespace grt
