// Copyright 2026 The GRT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "grt/ingest.hpp"
#include "grt/pixelcode.hpp"

namespace grt {

/// Matrices are [out x in] row-major; biases and norm parameters are [dim].
struct EncoderLayer {
    std::vector<float> wq, bq, wk, bk, wv, bv, wo, bo;
    std::vector<float> ff1_w, ff1_b, ff2_w, ff2_b;
    std::vector<float> ln1_g, ln1_b, ln2_g, ln2_b;

    friend bool operator==(const EncoderLayer&, const EncoderLayer&) = default;
};

struct TokenizerWeights {
    int embed_dim = 0;
    int patch_dim = 0;    // patch_size^2 * channels
    int num_patches = 0;  // N, rows of pos_embed
    int heads = 0;
    int layer_count = 0;

    std::vector<float> embed_matrix;  // [embed_dim x patch_dim]
    std::vector<float> embed_bias;    // [embed_dim]
    std::vector<float> pos_embed;     // [num_patches x embed_dim]
    std::vector<EncoderLayer> layers;

    /// Feed-forward hidden width is fixed at 4 * embed_dim.
    int ff_dim() const noexcept { return 4 * embed_dim; }

    /// Checks divisibility, tensor sizes, and finiteness.
    void validate() const;

    friend bool operator==(const TokenizerWeights&, const TokenizerWeights&) = default;
};

TokenizerWeights init_weights_seeded(int embed_dim, int heads, int layer_count, int patch_size,
                                     int channels, int num_patches, std::uint64_t seed);

// GRTW: "GRTW", u32 version = 1, u32 {embed_dim, patch_dim, N, heads, layer_count},
// then float32 tensors: embed_matrix, embed_bias, pos_embed, and per layer
// wq bq wk bk wv bv wo bo ff1_w ff1_b ff2_w ff2_b ln1_g ln1_b ln2_g ln2_b.
// All little-endian.
inline constexpr std::uint32_t kGrtwVersion = 1;

void save_weights(const TokenizerWeights& w, const std::filesystem::path& path);
TokenizerWeights load_weights(const std::filesystem::path& path);

/// Gate 1: W_c * flatten(patch) / 255 + b_c. Gate 0: zero vector.
std::vector<float> embed_patch(const Patch& patch, bool gate_bit, const TokenizerWeights& w);

enum class PlaceholderMode {
    Masked,  // placeholders neither attend nor are attended to
    Dense,   // placeholders take part in attention like real tokens
};

struct EncodeOptions {
    PlaceholderMode mode = PlaceholderMode::Masked;
    std::size_t frame_offset = 0;  // global index of the first frame
    unsigned threads = 1;
};

/// Runs the encoder stack over `seq` ([len x embed_dim] row-major), with
/// every position attending to every other. Returns the same shape.
std::vector<float> encode_sequence(std::span<const float> seq, std::size_t len, const TokenizerWeights& w);

/// Embeds one frame under its gate mask, adds positional embeddings to all
/// N positions (placeholders included), and runs the encoder. Returns
/// [N x embed_dim]; rows at gated-out positions are meaningful only in
/// Dense mode and are zero in Masked mode.
std::vector<float> encode_frame(const PatchGrid& grid, const GateMask& mask, const TokenizerWeights& w,
                                PlaceholderMode mode);

/// Ungated full-frame path: every patch embedded, dense attention.
std::vector<float> tokenize_full_frame(const PatchGrid& grid, const TokenizerWeights& w);

enum class TokenKind : std::uint8_t { Key = 0, P = 1 };

struct Token {
    std::vector<float> embedding;
    std::size_t frame_index = 0;
    std::size_t patch_index = 0;

    friend bool operator==(const Token&, const Token&) = default;
};

struct TokenSet {
    std::vector<Token> tokens;
    TokenKind kind = TokenKind::Key;

    std::size_t size() const noexcept { return tokens.size(); }
    bool empty() const noexcept { return tokens.empty(); }
    friend bool operator==(const TokenSet&, const TokenSet&) = default;
};

struct SceneTokens {
    TokenSet key_set;
    std::vector<TokenSet> p_sets;

    friend bool operator==(const SceneTokens&, const SceneTokens&) = default;
};

SceneTokens assemble_and_encode(std::span<const PatchGrid> grids, std::span<const GateMask> masks,
                                const TokenizerWeights& w, const EncodeOptions& opts = {});

/// Extracts patches from frames[scene.start_index .. scene.end_index] and
/// encodes them under the scene's key mask and residual masks.
SceneTokens tokenize_scene(const Scene& scene, const std::vector<Frame>& frames, int patch_size,
                           const TokenizerWeights& w, const EncodeOptions& opts = {});

/// (key_count, p_count).
std::pair<std::size_t, std::size_t> count_tokens(const SceneTokens& st);

}  // namespace grt
