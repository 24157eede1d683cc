// Copyright 2026 The GRT Authors
// SPDX-License-Identifier: Apache-2.0

#include "grt/pipeline.hpp"

#include <algorithm>

#include "grt/error.hpp"

namespace grt {

using nlohmann::json;

void PipelineConfig::validate() const {
    scene.validate();
    merge.validate();
    if (embed_dim <= 0 || heads <= 0 || layers <= 0 || embed_dim % heads != 0) {
        throw Error(ErrorCode::InvalidDims, "tokenizer dims: embed_dim must be a positive multiple of heads");
    }
}

void to_json(json& j, const PipelineConfig& cfg) {
    j = json{
        {"tau", cfg.scene.tau},
        {"rho", cfg.scene.rho},
        {"max_gop", cfg.scene.max_gop},
        {"patch_size", cfg.scene.patch_size},
        {"delta", cfg.merge.delta},
        {"metric", cfg.merge.metric == MergeMetric::Jsd ? "jsd" : "cosine"},
        {"K", cfg.merge.K},
        {"epsilon_floor", cfg.merge.epsilon_floor},
        {"embed_dim", cfg.embed_dim},
        {"heads", cfg.heads},
        {"layers", cfg.layers},
        {"placeholder", cfg.placeholder == PlaceholderMode::Masked ? "masked" : "dense"},
        {"weights", cfg.weights_path ? json(cfg.weights_path->string()) : json(nullptr)},
        {"seed", cfg.seed},
        {"threads", cfg.threads},
        {"no_merge", cfg.no_merge},
        {"all_pass", cfg.all_pass},
    };
}

void merge_json(const json& j, PipelineConfig& cfg) {
    if (!j.is_object()) {
        throw Error(ErrorCode::InvalidConfig, "config root must be an object");
    }
    try {
        auto take = [&](const char* key, auto& field) {
            if (j.contains(key) && !j.at(key).is_null()) {
                field = j.at(key).get<std::decay_t<decltype(field)>>();
            }
        };
        take("tau", cfg.scene.tau);
        take("rho", cfg.scene.rho);
        take("max_gop", cfg.scene.max_gop);
        take("patch_size", cfg.scene.patch_size);
        take("delta", cfg.merge.delta);
        take("K", cfg.merge.K);
        take("epsilon_floor", cfg.merge.epsilon_floor);
        take("embed_dim", cfg.embed_dim);
        take("heads", cfg.heads);
        take("layers", cfg.layers);
        take("seed", cfg.seed);
        take("threads", cfg.threads);
        take("no_merge", cfg.no_merge);
        take("all_pass", cfg.all_pass);
        if (j.contains("metric")) {
            const auto m = j.at("metric").get<std::string>();
            if (m != "jsd" && m != "cosine") {
                throw Error(ErrorCode::InvalidConfig, "metric must be jsd or cosine");
            }
            cfg.merge.metric = m == "jsd" ? MergeMetric::Jsd : MergeMetric::Cosine;
            if (!j.contains("delta")) {
                cfg.merge.delta = MergeConfig::default_delta(cfg.merge.metric);
            }
        }
        if (j.contains("placeholder")) {
            const auto p = j.at("placeholder").get<std::string>();
            if (p != "masked" && p != "dense") {
                throw Error(ErrorCode::InvalidConfig, "placeholder must be masked or dense");
            }
            cfg.placeholder = p == "masked" ? PlaceholderMode::Masked : PlaceholderMode::Dense;
        }
        if (j.contains("weights") && !j.at("weights").is_null()) {
            cfg.weights_path = j.at("weights").get<std::string>();
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, e.what());
    }
}

TokenizerWeights make_weights(const PipelineConfig& cfg, const FrameSequence& seq) {
    const int ps = cfg.scene.patch_size;
    seq.validate(ps);
    const int n = (seq.width / ps) * (seq.height / ps);
    if (!cfg.weights_path) {
        return init_weights_seeded(cfg.embed_dim, cfg.heads, cfg.layers, ps, seq.channels, n, cfg.seed);
    }
    TokenizerWeights w = load_weights(*cfg.weights_path);
    if (w.patch_dim != ps * ps * seq.channels || w.num_patches != n) {
        throw Error(ErrorCode::ShapeMismatch, "weights expect patch_dim " + std::to_string(w.patch_dim) +
                                                  " and N " + std::to_string(w.num_patches) + ", video gives " +
                                                  std::to_string(ps * ps * seq.channels) + " and " +
                                                  std::to_string(n));
    }
    return w;
}

std::vector<SceneTokens> tokenize_scenes(const std::vector<Scene>& scenes, const FrameSequence& seq,
                                         const PipelineConfig& cfg, const TokenizerWeights& w) {
    EncodeOptions opts;
    opts.mode = cfg.placeholder;
    opts.threads = cfg.threads;
    std::vector<SceneTokens> out;
    out.reserve(scenes.size());
    for (const Scene& s : scenes) {
        out.push_back(tokenize_scene(s, seq.frames, cfg.scene.patch_size, w, opts));
    }
    return out;
}

PipelineResult run_pipeline(const FrameSequence& seq, const PipelineConfig& cfg, const TokenizerWeights& w) {
    cfg.validate();
    PipelineResult r;
    SceneConfig scene_cfg = cfg.scene;
    scene_cfg.all_pass = scene_cfg.all_pass || cfg.all_pass;
    r.scenes = segment_scenes(seq, scene_cfg);
    r.scene_tokens = tokenize_scenes(r.scenes, seq, cfg, w);

    const bool merge = !cfg.no_merge && !cfg.all_pass && r.scene_tokens.size() > 1;
    if (merge) {
        std::optional<Codebook> cb;
        if (cfg.merge.metric == MergeMetric::Jsd) {
            const auto keys = collect_key_tokens(r.scene_tokens);
            // Short clips may hold fewer key tokens than the configured K.
            const int k = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(cfg.merge.K), keys.size()));
            cb = build_codebook(keys, std::max(k, 2), cfg.seed);
        }
        r.groups = merge_pass(r.scene_tokens, cfg.merge, cb ? &*cb : nullptr);
    } else {
        r.groups = unmerged_groups(r.scene_tokens);
    }
    r.flat = flatten_tokens(r.groups, w.embed_dim);

    const std::size_t n = static_cast<std::size_t>(w.num_patches);
    r.counts.frames = seq.size();
    r.counts.scenes = r.scenes.size();
    r.counts.groups = r.groups.size();
    r.counts.baseline = seq.size() * n;
    for (const SceneTokens& st : r.scene_tokens) {
        const auto [key, p] = count_tokens(st);
        r.counts.after_pruning += key + p;
    }
    r.counts.after_merging = r.flat.size();
    return r;
}

}  // namespace grt
