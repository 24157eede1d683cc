// Copyright 2026 The GRT Authors
// SPDX-License-Identifier: Apache-2.0

#include "grt/tokenizer.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <random>
#include <thread>

#include "grt/error.hpp"

namespace grt {

namespace {

constexpr std::array<char, 4> kGrtwMagic = {'G', 'R', 'T', 'W'};
constexpr float kLayerNormEps = 1e-5f;

// mt19937_64 is fully specified by the standard, unlike the distributions,
// so the bits-to-double step is done by hand to keep weights portable.
class UniformSource {
public:
    explicit UniformSource(std::uint64_t seed) : engine_(seed) {}

    // Uniform in [-1, 1).
    double next() { return static_cast<double>(engine_() >> 11) * 0x1.0p-52 - 1.0; }

    std::vector<float> fill(std::size_t n, double scale) {
        std::vector<float> v(n);
        for (float& x : v) {
            x = static_cast<float>(next() * scale);
        }
        return v;
    }

private:
    std::mt19937_64 engine_;
};

template <typename W>
auto tensor_list(W& w) {
    const std::size_t d = static_cast<std::size_t>(w.embed_dim);
    const std::size_t f = static_cast<std::size_t>(w.ff_dim());
    std::vector<std::pair<decltype(&w.embed_bias), std::size_t>> out;
    out.emplace_back(&w.embed_matrix, d * static_cast<std::size_t>(w.patch_dim));
    out.emplace_back(&w.embed_bias, d);
    out.emplace_back(&w.pos_embed, static_cast<std::size_t>(w.num_patches) * d);
    for (auto& l : w.layers) {
        out.emplace_back(&l.wq, d * d);
        out.emplace_back(&l.bq, d);
        out.emplace_back(&l.wk, d * d);
        out.emplace_back(&l.bk, d);
        out.emplace_back(&l.wv, d * d);
        out.emplace_back(&l.bv, d);
        out.emplace_back(&l.wo, d * d);
        out.emplace_back(&l.bo, d);
        out.emplace_back(&l.ff1_w, f * d);
        out.emplace_back(&l.ff1_b, f);
        out.emplace_back(&l.ff2_w, d * f);
        out.emplace_back(&l.ff2_b, d);
        out.emplace_back(&l.ln1_g, d);
        out.emplace_back(&l.ln1_b, d);
        out.emplace_back(&l.ln2_g, d);
        out.emplace_back(&l.ln2_b, d);
    }
    return out;
}

void check_dims(long long embed_dim, long long patch_dim, long long num_patches, long long heads,
                long long layer_count) {
    if (embed_dim <= 0 || patch_dim <= 0 || num_patches <= 0 || heads <= 0 || layer_count <= 0) {
        throw Error(ErrorCode::InvalidDims, "tokenizer dimensions must be positive");
    }
    if (embed_dim % heads != 0) {
        throw Error(ErrorCode::InvalidDims, "embed_dim " + std::to_string(embed_dim) +
                                                " not divisible by heads " + std::to_string(heads));
    }
}

// out[l][o] = sum_i in[l][i] * w[o][i] + b[o]
void linear(const float* in, std::size_t rows, std::size_t in_dim, const std::vector<float>& w,
            const std::vector<float>& b, std::size_t out_dim, float* out) {
    for (std::size_t r = 0; r < rows; ++r) {
        const float* x = in + r * in_dim;
        float* y = out + r * out_dim;
        for (std::size_t o = 0; o < out_dim; ++o) {
            const float* wr = w.data() + o * in_dim;
            double acc = 0.0;
            for (std::size_t i = 0; i < in_dim; ++i) {
                acc += static_cast<double>(x[i]) * wr[i];
            }
            y[o] = static_cast<float>(acc + b[o]);
        }
    }
}

void layer_norm(const float* in, std::size_t rows, std::size_t dim, const std::vector<float>& g,
                const std::vector<float>& b, float* out) {
    for (std::size_t r = 0; r < rows; ++r) {
        const float* x = in + r * dim;
        double mean = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            mean += x[i];
        }
        mean /= static_cast<double>(dim);
        double var = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            const double dlt = x[i] - mean;
            var += dlt * dlt;
        }
        var /= static_cast<double>(dim);
        const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
        for (std::size_t i = 0; i < dim; ++i) {
            out[r * dim + i] = static_cast<float>((x[i] - mean) * inv * g[i] + b[i]);
        }
    }
}

float gelu(float x) {
    return static_cast<float>(0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))));
}

void encoder_layer(std::vector<float>& x, std::size_t len, const EncoderLayer& layer, int embed_dim,
                   int heads, int ff_dim) {
    const std::size_t d = static_cast<std::size_t>(embed_dim);
    const std::size_t hd = d / static_cast<std::size_t>(heads);
    const std::size_t f = static_cast<std::size_t>(ff_dim);
    const double scale = 1.0 / std::sqrt(static_cast<double>(hd));

    std::vector<float> h(len * d), q(len * d), k(len * d), v(len * d), att(len * d);
    layer_norm(x.data(), len, d, layer.ln1_g, layer.ln1_b, h.data());
    linear(h.data(), len, d, layer.wq, layer.bq, d, q.data());
    linear(h.data(), len, d, layer.wk, layer.bk, d, k.data());
    linear(h.data(), len, d, layer.wv, layer.bv, d, v.data());

    std::vector<double> scores(len);
    for (std::size_t head = 0; head < static_cast<std::size_t>(heads); ++head) {
        const std::size_t off = head * hd;
        for (std::size_t i = 0; i < len; ++i) {
            const float* qi = q.data() + i * d + off;
            double max_s = -INFINITY;
            for (std::size_t j = 0; j < len; ++j) {
                const float* kj = k.data() + j * d + off;
                double s = 0.0;
                for (std::size_t t = 0; t < hd; ++t) {
                    s += static_cast<double>(qi[t]) * kj[t];
                }
                scores[j] = s * scale;
                max_s = std::max(max_s, scores[j]);
            }
            double denom = 0.0;
            for (std::size_t j = 0; j < len; ++j) {
                scores[j] = std::exp(scores[j] - max_s);
                denom += scores[j];
            }
            float* out = att.data() + i * d + off;
            for (std::size_t t = 0; t < hd; ++t) {
                double acc = 0.0;
                for (std::size_t j = 0; j < len; ++j) {
                    acc += scores[j] * v[j * d + off + t];
                }
                out[t] = static_cast<float>(acc / denom);
            }
        }
    }
    linear(att.data(), len, d, layer.wo, layer.bo, d, h.data());
    for (std::size_t i = 0; i < len * d; ++i) {
        x[i] += h[i];
    }

    std::vector<float> hidden(len * f);
    layer_norm(x.data(), len, d, layer.ln2_g, layer.ln2_b, h.data());
    linear(h.data(), len, d, layer.ff1_w, layer.ff1_b, f, hidden.data());
    std::transform(hidden.begin(), hidden.end(), hidden.begin(), gelu);
    linear(hidden.data(), len, f, layer.ff2_w, layer.ff2_b, d, h.data());
    for (std::size_t i = 0; i < len * d; ++i) {
        x[i] += h[i];
    }
}

void put_u32(std::ostream& out, std::uint32_t v) {
    const std::array<char, 4> b = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                                   static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    out.write(b.data(), 4);
}

std::uint32_t get_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

void TokenizerWeights::validate() const {
    check_dims(embed_dim, patch_dim, num_patches, heads, layer_count);
    if (static_cast<int>(layers.size()) != layer_count) {
        throw Error(ErrorCode::InvalidDims, "layer block count disagrees with layer_count");
    }
    for (auto [tensor, expected] : tensor_list(const_cast<TokenizerWeights&>(*this))) {
        if (tensor->size() != expected) {
            throw Error(ErrorCode::SizeMismatch, "tensor holds " + std::to_string(tensor->size()) +
                                                     " values, expected " + std::to_string(expected));
        }
        if (!std::all_of(tensor->begin(), tensor->end(), [](float x) { return std::isfinite(x); })) {
            throw Error(ErrorCode::InvalidDims, "non-finite weight value");
        }
    }
}

TokenizerWeights init_weights_seeded(int embed_dim, int heads, int layer_count, int patch_size,
                                     int channels, int num_patches, std::uint64_t seed) {
    const long long patch_dim = static_cast<long long>(patch_size) * patch_size * channels;
    check_dims(embed_dim, patch_dim, num_patches, heads, layer_count);

    TokenizerWeights w;
    w.embed_dim = embed_dim;
    w.patch_dim = static_cast<int>(patch_dim);
    w.num_patches = num_patches;
    w.heads = heads;
    w.layer_count = layer_count;

    UniformSource rng(seed);
    const std::size_t d = static_cast<std::size_t>(embed_dim);
    const std::size_t f = static_cast<std::size_t>(w.ff_dim());
    const double s_patch = 1.0 / std::sqrt(static_cast<double>(patch_dim));
    const double s_d = 1.0 / std::sqrt(static_cast<double>(d));
    const double s_f = 1.0 / std::sqrt(static_cast<double>(f));

    w.embed_matrix = rng.fill(d * static_cast<std::size_t>(patch_dim), s_patch);
    w.embed_bias = rng.fill(d, s_patch);
    w.pos_embed = rng.fill(static_cast<std::size_t>(num_patches) * d, 0.02);
    w.layers.resize(static_cast<std::size_t>(layer_count));
    for (EncoderLayer& l : w.layers) {
        l.wq = rng.fill(d * d, s_d);
        l.bq = rng.fill(d, s_d);
        l.wk = rng.fill(d * d, s_d);
        l.bk = rng.fill(d, s_d);
        l.wv = rng.fill(d * d, s_d);
        l.bv = rng.fill(d, s_d);
        l.wo = rng.fill(d * d, s_d);
        l.bo = rng.fill(d, s_d);
        l.ff1_w = rng.fill(f * d, s_d);
        l.ff1_b = rng.fill(f, s_d);
        l.ff2_w = rng.fill(d * f, s_f);
        l.ff2_b = rng.fill(d, s_f);
        l.ln1_g.assign(d, 1.0f);
        l.ln1_b.assign(d, 0.0f);
        l.ln2_g.assign(d, 1.0f);
        l.ln2_b.assign(d, 0.0f);
    }
    return w;
}

void save_weights(const TokenizerWeights& w, const std::filesystem::path& path) {
    w.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorCode::IoError, "cannot open " + path.string());
    }
    out.write(kGrtwMagic.data(), 4);
    put_u32(out, kGrtwVersion);
    for (int v : {w.embed_dim, w.patch_dim, w.num_patches, w.heads, w.layer_count}) {
        put_u32(out, static_cast<std::uint32_t>(v));
    }
    for (auto [tensor, expected] : tensor_list(const_cast<TokenizerWeights&>(w))) {
        for (float x : *tensor) {
            put_u32(out, std::bit_cast<std::uint32_t>(x));
        }
    }
    if (!out) {
        throw Error(ErrorCode::IoError, "failed writing " + path.string());
    }
}

TokenizerWeights load_weights(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::MissingFile, path.string());
    }
    const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kGrtwMagic.data(), 4) != 0) {
        throw Error(ErrorCode::BadMagic, path.string() + " is not a GRTW file");
    }
    constexpr std::size_t kHeader = 4 + 4 * 6;
    if (bytes.size() < kHeader) {
        throw Error(ErrorCode::SizeMismatch, "truncated GRTW header");
    }
    const std::uint32_t version = get_u32(bytes.data() + 4);
    if (version != kGrtwVersion) {
        throw Error(ErrorCode::VersionUnsupported, "GRTW version " + std::to_string(version));
    }
    std::array<std::uint32_t, 5> dims{};
    for (std::size_t i = 0; i < dims.size(); ++i) {
        dims[i] = get_u32(bytes.data() + 8 + 4 * i);
    }
    // Guard against absurd headers before allocating anything.
    for (std::uint32_t v : dims) {
        if (v == 0 || v > (1u << 24)) {
            throw Error(ErrorCode::InvalidDims, "GRTW header dimension out of range");
        }
    }
    check_dims(dims[0], dims[1], dims[2], dims[3], dims[4]);

    TokenizerWeights w;
    w.embed_dim = static_cast<int>(dims[0]);
    w.patch_dim = static_cast<int>(dims[1]);
    w.num_patches = static_cast<int>(dims[2]);
    w.heads = static_cast<int>(dims[3]);
    w.layer_count = static_cast<int>(dims[4]);
    w.layers.resize(dims[4]);

    auto tensors = tensor_list(w);
    std::size_t total = 0;
    for (const auto& t : tensors) {
        total += t.second;
    }
    if (bytes.size() - kHeader != total * 4) {
        throw Error(ErrorCode::SizeMismatch, "GRTW payload holds " + std::to_string(bytes.size() - kHeader) +
                                                 " bytes, header implies " + std::to_string(total * 4));
    }
    const unsigned char* p = bytes.data() + kHeader;
    for (auto [tensor, expected] : tensors) {
        tensor->resize(expected);
        for (float& x : *tensor) {
            x = std::bit_cast<float>(get_u32(p));
            p += 4;
        }
    }
    w.validate();
    return w;
}

std::vector<float> embed_patch(const Patch& patch, bool gate_bit, const TokenizerWeights& w) {
    if (patch.pixels.size() != static_cast<std::size_t>(w.patch_dim)) {
        throw Error(ErrorCode::ShapeMismatch, "patch holds " + std::to_string(patch.pixels.size()) +
                                                  " values, weights expect " + std::to_string(w.patch_dim));
    }
    std::vector<float> e(static_cast<std::size_t>(w.embed_dim), 0.0f);
    if (!gate_bit) {
        return e;
    }
    const std::size_t pd = static_cast<std::size_t>(w.patch_dim);
    for (std::size_t o = 0; o < e.size(); ++o) {
        const float* row = w.embed_matrix.data() + o * pd;
        double acc = 0.0;
        for (std::size_t i = 0; i < pd; ++i) {
            acc += static_cast<double>(row[i]) * patch.pixels[i];
        }
        e[o] = static_cast<float>(acc / 255.0 + w.embed_bias[o]);
    }
    return e;
}

std::vector<float> encode_sequence(std::span<const float> seq, std::size_t len, const TokenizerWeights& w) {
    const std::size_t d = static_cast<std::size_t>(w.embed_dim);
    if (seq.size() != len * d) {
        throw Error(ErrorCode::ShapeMismatch, "sequence buffer does not match len x embed_dim");
    }
    std::vector<float> x(seq.begin(), seq.end());
    if (len == 0) {
        return x;
    }
    for (const EncoderLayer& layer : w.layers) {
        encoder_layer(x, len, layer, w.embed_dim, w.heads, w.ff_dim());
    }
    return x;
}

std::vector<float> encode_frame(const PatchGrid& grid, const GateMask& mask, const TokenizerWeights& w,
                                PlaceholderMode mode) {
    const std::size_t n = grid.size();
    const std::size_t d = static_cast<std::size_t>(w.embed_dim);
    if (mask.size() != n) {
        throw Error(ErrorCode::MaskLengthMismatch,
                    "mask length " + std::to_string(mask.size()) + " vs " + std::to_string(n) + " patches");
    }
    if (n != static_cast<std::size_t>(w.num_patches)) {
        throw Error(ErrorCode::ShapeMismatch,
                    "frame has " + std::to_string(n) + " patches, weights expect " + std::to_string(w.num_patches));
    }

    std::vector<float> result(n * d, 0.0f);
    if (mode == PlaceholderMode::Dense) {
        std::vector<float> seq(n * d);
        for (std::size_t p = 0; p < n; ++p) {
            const auto e = embed_patch(grid.patches[p], mask.bits[p] != 0, w);
            for (std::size_t i = 0; i < d; ++i) {
                seq[p * d + i] = e[i] + w.pos_embed[p * d + i];
            }
        }
        return encode_sequence(seq, n, w);
    }

    // Masked: attention restricted to gated-in positions. Dropping the
    // placeholders from the sequence is exactly that restriction, and skips
    // their cost.
    std::vector<std::size_t> live;
    live.reserve(n);
    for (std::size_t p = 0; p < n; ++p) {
        if (mask.bits[p]) {
            live.push_back(p);
        }
    }
    if (live.empty()) {
        return result;
    }
    std::vector<float> seq(live.size() * d);
    for (std::size_t r = 0; r < live.size(); ++r) {
        const std::size_t p = live[r];
        const auto e = embed_patch(grid.patches[p], true, w);
        for (std::size_t i = 0; i < d; ++i) {
            seq[r * d + i] = e[i] + w.pos_embed[p * d + i];
        }
    }
    const auto out = encode_sequence(seq, live.size(), w);
    for (std::size_t r = 0; r < live.size(); ++r) {
        std::copy_n(out.begin() + static_cast<std::ptrdiff_t>(r * d), d,
                    result.begin() + static_cast<std::ptrdiff_t>(live[r] * d));
    }
    return result;
}

std::vector<float> tokenize_full_frame(const PatchGrid& grid, const TokenizerWeights& w) {
    return encode_frame(grid, GateMask::full(grid.size()), w, PlaceholderMode::Dense);
}

SceneTokens assemble_and_encode(std::span<const PatchGrid> grids, std::span<const GateMask> masks,
                                const TokenizerWeights& w, const EncodeOptions& opts) {
    if (grids.size() != masks.size()) {
        throw Error(ErrorCode::MaskLengthMismatch, "one mask per frame required");
    }
    if (grids.empty()) {
        throw Error(ErrorCode::EmptySequence, "scene has no frames");
    }
    for (std::size_t f = 0; f < grids.size(); ++f) {
        if (masks[f].size() != grids[f].size()) {
            throw Error(ErrorCode::MaskLengthMismatch, "mask " + std::to_string(f) + " has length " +
                                                           std::to_string(masks[f].size()) + ", frame has " +
                                                           std::to_string(grids[f].size()) + " patches");
        }
    }
    if (!masks[0].all_set()) {
        throw Error(ErrorCode::KeyMaskNotFull, "key frame mask must be all ones");
    }

    std::vector<std::vector<float>> outputs(grids.size());
    auto work = [&](std::size_t f) { outputs[f] = encode_frame(grids[f], masks[f], w, opts.mode); };
    const unsigned threads = std::max(1u, std::min<unsigned>(opts.threads, static_cast<unsigned>(grids.size())));
    if (threads == 1) {
        for (std::size_t f = 0; f < grids.size(); ++f) {
            work(f);
        }
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back([&, t] {
                for (std::size_t f = t; f < grids.size(); f += threads) {
                    work(f);
                }
            });
        }
    }

    const std::size_t d = static_cast<std::size_t>(w.embed_dim);
    auto emit = [&](std::size_t f, TokenKind kind) {
        TokenSet set;
        set.kind = kind;
        const auto& out = outputs[f];
        for (std::size_t p = 0; p < masks[f].size(); ++p) {
            if (!masks[f].bits[p]) {
                continue;
            }
            Token t;
            t.embedding.assign(out.begin() + static_cast<std::ptrdiff_t>(p * d),
                               out.begin() + static_cast<std::ptrdiff_t>((p + 1) * d));
            t.frame_index = opts.frame_offset + f;
            t.patch_index = p;
            set.tokens.push_back(std::move(t));
        }
        return set;
    };

    SceneTokens st;
    st.key_set = emit(0, TokenKind::Key);
    st.p_sets.reserve(grids.size() - 1);
    for (std::size_t f = 1; f < grids.size(); ++f) {
        st.p_sets.push_back(emit(f, TokenKind::P));
    }
    return st;
}

SceneTokens tokenize_scene(const Scene& scene, const std::vector<Frame>& frames, int patch_size,
                           const TokenizerWeights& w, const EncodeOptions& opts) {
    if (scene.end_index >= frames.size() || scene.residuals.size() + 1 != scene.frame_count()) {
        throw Error(ErrorCode::ShapeMismatch, "scene does not match the frame list");
    }
    std::vector<PatchGrid> grids;
    std::vector<GateMask> masks;
    grids.reserve(scene.frame_count());
    masks.reserve(scene.frame_count());
    grids.push_back(extract_patches(frames[scene.start_index], patch_size));
    masks.push_back(scene.key_mask);
    for (std::size_t j = 0; j < scene.residuals.size(); ++j) {
        grids.push_back(extract_patches(frames[scene.start_index + j + 1], patch_size));
        masks.push_back(scene.residuals[j].mask);
    }
    EncodeOptions o = opts;
    o.frame_offset = scene.start_index;
    return assemble_and_encode(grids, masks, w, o);
}

std::pair<std::size_t, std::size_t> count_tokens(const SceneTokens& st) {
    std::size_t p = 0;
    for (const TokenSet& s : st.p_sets) {
        p += s.size();
    }
    return {st.key_set.size(), p};
}

}  // namespace grt
