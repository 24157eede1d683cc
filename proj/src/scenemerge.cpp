// Copyright 2026 The GRT Authors
// SPDX-License-Identifier: Apache-2.0

#include "grt/scenemerge.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "grt/error.hpp"

namespace grt {

namespace {

constexpr int kKmeansMaxIter = 100;
constexpr double kKmeansTol = 1e-6;

double sq_dist(std::span<const float> a, std::span<const float> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - b[i];
        s += d * d;
    }
    return s;
}

double kl_term(double p, double m) {
    return p > 0.0 ? p * std::log2(p / m) : 0.0;
}

}  // namespace

void MergeConfig::validate() const {
    if (!(delta >= 0.0)) {
        throw Error(ErrorCode::InvalidConfig, "delta must be non-negative");
    }
    if (K < 2) {
        throw Error(ErrorCode::InvalidConfig, "codebook size K must be at least 2");
    }
    if (!(epsilon_floor >= 0.0)) {
        throw Error(ErrorCode::InvalidConfig, "epsilon_floor must be non-negative");
    }
}

std::size_t Codebook::nearest(std::span<const float> v) const {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < static_cast<std::size_t>(K); ++k) {
        const double d = sq_dist(v, centroid(k));
        if (d < best_d) {
            best_d = d;
            best = k;
        }
    }
    return best;
}

std::vector<double> MergedSceneTokens::key_mean() const {
    if (merged()) {
        const auto& rep = std::get<Embedding>(representative);
        return {rep.begin(), rep.end()};
    }
    return mean_embedding(std::get<TokenSet>(representative));
}

MergedSceneTokens as_group(const SceneTokens& st, std::size_t scene_id) {
    MergedSceneTokens g;
    g.representative = st.key_set;
    g.p_sets = st.p_sets;
    g.source_scenes = {scene_id};
    g.key_pool.reserve(st.key_set.size());
    for (const Token& t : st.key_set.tokens) {
        g.key_pool.push_back(t.embedding);
    }
    return g;
}

std::vector<double> mean_embedding(std::span<const Embedding> tokens) {
    if (tokens.empty()) {
        throw Error(ErrorCode::EmptyTokenSet, "mean of an empty token set");
    }
    std::vector<double> mean(tokens.front().size(), 0.0);
    for (const Embedding& t : tokens) {
        if (t.size() != mean.size()) {
            throw Error(ErrorCode::DimensionMismatch, "tokens differ in dimension");
        }
        for (std::size_t i = 0; i < mean.size(); ++i) {
            mean[i] += t[i];
        }
    }
    for (double& m : mean) {
        m /= static_cast<double>(tokens.size());
    }
    return mean;
}

std::vector<double> mean_embedding(const TokenSet& ts) {
    if (ts.empty()) {
        throw Error(ErrorCode::EmptyTokenSet, "mean of an empty token set");
    }
    std::vector<double> mean(ts.tokens.front().embedding.size(), 0.0);
    for (const Token& t : ts.tokens) {
        if (t.embedding.size() != mean.size()) {
            throw Error(ErrorCode::DimensionMismatch, "tokens differ in dimension");
        }
        for (std::size_t i = 0; i < mean.size(); ++i) {
            mean[i] += t.embedding[i];
        }
    }
    for (double& m : mean) {
        m /= static_cast<double>(ts.size());
    }
    return mean;
}

double cosine_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw Error(ErrorCode::DimensionMismatch, "mean embeddings differ in dimension");
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) {
        throw Error(ErrorCode::ZeroMeanEmbedding, "cosine distance of a zero mean embedding");
    }
    const double cos = std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
    return 1.0 - cos;
}

double cosine_distance(const TokenSet& a, const TokenSet& b) {
    return cosine_distance(mean_embedding(a), mean_embedding(b));
}

Codebook build_codebook(std::span<const Embedding> tokens, int K, std::uint64_t seed) {
    if (K < 2) {
        throw Error(ErrorCode::InvalidConfig, "codebook size K must be at least 2");
    }
    if (tokens.size() < static_cast<std::size_t>(K)) {
        throw Error(ErrorCode::TooFewTokens,
                    std::to_string(tokens.size()) + " tokens cannot seed " + std::to_string(K) + " centroids");
    }
    const std::size_t dim = tokens.front().size();
    for (const Embedding& t : tokens) {
        if (t.size() != dim) {
            throw Error(ErrorCode::DimensionMismatch, "tokens differ in dimension");
        }
    }
    const std::size_t n = tokens.size();
    const auto k_count = static_cast<std::size_t>(K);

    Codebook cb;
    cb.K = K;
    cb.dim = static_cast<int>(dim);
    cb.seed = seed;
    cb.centroids.resize(k_count * dim);

    std::mt19937_64 engine(seed);
    auto uniform01 = [&engine] { return static_cast<double>(engine() >> 11) * 0x1.0p-53; };
    auto set_centroid = [&](std::size_t k, const Embedding& src) {
        std::copy(src.begin(), src.end(), cb.centroids.begin() + static_cast<std::ptrdiff_t>(k * dim));
    };

    // k-means++ seeding.
    set_centroid(0, tokens[std::min(n - 1, static_cast<std::size_t>(uniform01() * static_cast<double>(n)))]);
    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) {
        d2[i] = sq_dist(tokens[i], cb.centroid(0));
    }
    for (std::size_t k = 1; k < k_count; ++k) {
        double total = 0.0;
        for (double v : d2) {
            total += v;
        }
        std::size_t pick = 0;
        if (total > 0.0) {
            const double target = uniform01() * total;
            double run = 0.0;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                run += d2[i];
                if (run > target && d2[i] > 0.0) {
                    pick = i;
                    break;
                }
            }
        }
        set_centroid(k, tokens[pick]);
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], sq_dist(tokens[i], cb.centroid(k)));
        }
    }

    // Lloyd iterations; empty clusters keep their previous centroid.
    std::vector<double> sums(k_count * dim);
    std::vector<std::size_t> counts(k_count);
    for (int iter = 0; iter < kKmeansMaxIter; ++iter) {
        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (const Embedding& t : tokens) {
            const std::size_t k = cb.nearest(t);
            ++counts[k];
            for (std::size_t i = 0; i < dim; ++i) {
                sums[k * dim + i] += t[i];
            }
        }
        double max_move = 0.0;
        for (std::size_t k = 0; k < k_count; ++k) {
            if (counts[k] == 0) {
                continue;
            }
            double move = 0.0;
            for (std::size_t i = 0; i < dim; ++i) {
                const auto updated = static_cast<float>(sums[k * dim + i] / static_cast<double>(counts[k]));
                const double dlt = static_cast<double>(updated) - cb.centroids[k * dim + i];
                move += dlt * dlt;
                cb.centroids[k * dim + i] = updated;
            }
            max_move = std::max(max_move, std::sqrt(move));
        }
        if (max_move <= kKmeansTol) {
            break;
        }
    }
    return cb;
}

TokenDistribution token_distribution(std::span<const Embedding> tokens, const Codebook& cb, double epsilon_floor) {
    if (tokens.empty()) {
        throw Error(ErrorCode::EmptyTokenSet, "distribution of an empty token set");
    }
    std::vector<double> counts(static_cast<std::size_t>(cb.K), 0.0);
    for (const Embedding& t : tokens) {
        if (t.size() != static_cast<std::size_t>(cb.dim)) {
            throw Error(ErrorCode::DimensionMismatch, "token dimension differs from codebook");
        }
        counts[cb.nearest(t)] += 1.0;
    }
    const double denom = static_cast<double>(tokens.size()) + cb.K * epsilon_floor;
    TokenDistribution dist;
    dist.probs.reserve(counts.size());
    for (double c : counts) {
        dist.probs.push_back((c + epsilon_floor) / denom);
    }
    return dist;
}

TokenDistribution token_distribution(const TokenSet& ts, const Codebook& cb, double epsilon_floor) {
    std::vector<Embedding> tokens;
    tokens.reserve(ts.size());
    for (const Token& t : ts.tokens) {
        tokens.push_back(t.embedding);
    }
    return token_distribution(tokens, cb, epsilon_floor);
}

double jsd(const TokenDistribution& p, const TokenDistribution& q) {
    if (p.probs.size() != q.probs.size()) {
        throw Error(ErrorCode::DimensionMismatch, "distributions differ in support size");
    }
    double kl_pm = 0.0, kl_qm = 0.0;
    for (std::size_t i = 0; i < p.probs.size(); ++i) {
        const double m = 0.5 * (p.probs[i] + q.probs[i]);
        kl_pm += kl_term(p.probs[i], m);
        kl_qm += kl_term(q.probs[i], m);
    }
    return std::clamp(0.5 * kl_pm + 0.5 * kl_qm, 0.0, 1.0);
}

MergedSceneTokens merge_pair(const MergedSceneTokens& s, const SceneTokens& t, std::size_t t_id) {
    const auto mu_s = s.key_mean();
    const auto mu_t = mean_embedding(t.key_set);
    if (mu_s.size() != mu_t.size()) {
        throw Error(ErrorCode::DimensionMismatch, "scenes differ in embedding dimension");
    }
    Embedding rep(mu_s.size());
    for (std::size_t i = 0; i < rep.size(); ++i) {
        rep[i] = static_cast<float>(0.5 * (mu_s[i] + mu_t[i]));
    }
    MergedSceneTokens out;
    out.representative = std::move(rep);
    out.p_sets = s.p_sets;
    out.p_sets.insert(out.p_sets.end(), t.p_sets.begin(), t.p_sets.end());
    out.source_scenes = s.source_scenes;
    out.source_scenes.push_back(t_id);
    out.key_pool = s.key_pool;
    for (const Token& tok : t.key_set.tokens) {
        out.key_pool.push_back(tok.embedding);
    }
    return out;
}

double group_distance(const MergedSceneTokens& group, const SceneTokens& next, const MergeConfig& cfg,
                      const Codebook* cb) {
    if (cfg.metric == MergeMetric::Cosine) {
        return cosine_distance(group.key_mean(), mean_embedding(next.key_set));
    }
    if (cb == nullptr) {
        throw Error(ErrorCode::InvalidConfig, "JSD merging needs a codebook");
    }
    return jsd(token_distribution(group.key_pool, *cb, cfg.epsilon_floor),
               token_distribution(next.key_set, *cb, cfg.epsilon_floor));
}

std::vector<MergedSceneTokens> merge_pass(const std::vector<SceneTokens>& scenes, const MergeConfig& cfg,
                                          const Codebook* cb) {
    if (scenes.empty()) {
        throw Error(ErrorCode::EmptySceneList, "nothing to merge");
    }
    cfg.validate();
    std::vector<MergedSceneTokens> out;
    MergedSceneTokens current = as_group(scenes[0], 0);
    for (std::size_t i = 1; i < scenes.size(); ++i) {
        const double d = group_distance(current, scenes[i], cfg, cb);
        if (d < cfg.delta) {
            current = merge_pair(current, scenes[i], i);
        } else {
            out.push_back(std::move(current));
            current = as_group(scenes[i], i);
        }
    }
    out.push_back(std::move(current));
    return out;
}

std::vector<Embedding> collect_key_tokens(const std::vector<SceneTokens>& scenes) {
    std::vector<Embedding> out;
    for (const SceneTokens& s : scenes) {
        for (const Token& t : s.key_set.tokens) {
            out.push_back(t.embedding);
        }
    }
    return out;
}

std::vector<MergedSceneTokens> unmerged_groups(const std::vector<SceneTokens>& scenes) {
    std::vector<MergedSceneTokens> out;
    out.reserve(scenes.size());
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        out.push_back(as_group(scenes[i], i));
    }
    return out;
}

FlatTokens flatten_tokens(const std::vector<MergedSceneTokens>& groups, int embed_dim) {
    FlatTokens flat;
    flat.embed_dim = embed_dim;
    flat.group_count = static_cast<std::uint32_t>(groups.size());
    const auto d = static_cast<std::size_t>(embed_dim);
    auto push = [&](std::span<const float> v, FlatEntry e) {
        if (v.size() != d) {
            throw Error(ErrorCode::DimensionMismatch, "token dimension differs from embed_dim");
        }
        flat.data.insert(flat.data.end(), v.begin(), v.end());
        flat.index.push_back(e);
    };
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const auto gid = static_cast<std::uint32_t>(g);
        const MergedSceneTokens& grp = groups[g];
        if (grp.merged()) {
            push(std::get<Embedding>(grp.representative), {gid, FlatKind::Rep, kNoIndex, kNoIndex});
        } else {
            for (const Token& t : std::get<TokenSet>(grp.representative).tokens) {
                push(t.embedding, {gid, FlatKind::Key, static_cast<std::uint32_t>(t.frame_index),
                                   static_cast<std::uint32_t>(t.patch_index)});
            }
        }
        for (const TokenSet& ps : grp.p_sets) {
            for (const Token& t : ps.tokens) {
                push(t.embedding, {gid, FlatKind::P, static_cast<std::uint32_t>(t.frame_index),
                                   static_cast<std::uint32_t>(t.patch_index)});
            }
        }
    }
    return flat;
}

}  // namespace grt
