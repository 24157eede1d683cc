// Copyright 2026 The GRT Authors
// SPDX-License-Identifier: Apache-2.0

#include "grt/token_file.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "grt/error.hpp"

namespace grt {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
    for (int s = 0; s < 32; s += 8) {
        out.push_back(static_cast<char>((v >> s) & 0xff));
    }
}

std::uint32_t get_u32(const std::string& in, std::size_t at) {
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) {
        v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + b])) << (8 * b);
    }
    return v;
}

}  // namespace

std::string encode_grtt(const FlatTokens& flat) {
    const std::size_t n = flat.size();
    if (flat.data.size() != n * static_cast<std::size_t>(flat.embed_dim)) {
        throw Error(ErrorCode::SizeMismatch, "token buffer does not match index length");
    }
    std::string out = "GRTT";
    out.reserve(20 + n * (static_cast<std::size_t>(flat.embed_dim) + 4) * 4);
    put_u32(out, kGrttVersion);
    put_u32(out, static_cast<std::uint32_t>(flat.embed_dim));
    put_u32(out, static_cast<std::uint32_t>(n));
    put_u32(out, flat.group_count);
    for (float x : flat.data) {
        put_u32(out, std::bit_cast<std::uint32_t>(x));
    }
    for (const FlatEntry& e : flat.index) {
        put_u32(out, e.group);
        put_u32(out, static_cast<std::uint32_t>(e.kind));
        put_u32(out, e.frame);
        put_u32(out, e.patch);
    }
    return out;
}

FlatTokens decode_grtt(const std::string& bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), "GRTT", 4) != 0) {
        throw Error(ErrorCode::BadMagic, "not a GRTT token file");
    }
    if (bytes.size() < 20) {
        throw Error(ErrorCode::SizeMismatch, "truncated GRTT header");
    }
    const std::uint32_t version = get_u32(bytes, 4);
    if (version != kGrttVersion) {
        throw Error(ErrorCode::VersionUnsupported, "GRTT version " + std::to_string(version));
    }
    FlatTokens flat;
    flat.embed_dim = static_cast<int>(get_u32(bytes, 8));
    const std::uint64_t n = get_u32(bytes, 12);
    flat.group_count = get_u32(bytes, 16);
    const std::uint64_t expected = 20 + n * (static_cast<std::uint64_t>(flat.embed_dim) + 4) * 4;
    if (bytes.size() != expected) {
        throw Error(ErrorCode::SizeMismatch, "GRTT holds " + std::to_string(bytes.size()) +
                                                 " bytes, header implies " + std::to_string(expected));
    }
    std::size_t at = 20;
    flat.data.resize(n * static_cast<std::size_t>(flat.embed_dim));
    for (float& x : flat.data) {
        x = std::bit_cast<float>(get_u32(bytes, at));
        at += 4;
    }
    flat.index.resize(n);
    for (FlatEntry& e : flat.index) {
        e.group = get_u32(bytes, at);
        const std::uint32_t kind = get_u32(bytes, at + 4);
        if (kind > 2) {
            throw Error(ErrorCode::SizeMismatch, "unknown token kind " + std::to_string(kind));
        }
        e.kind = static_cast<FlatKind>(kind);
        e.frame = get_u32(bytes, at + 8);
        e.patch = get_u32(bytes, at + 12);
        if (e.group >= flat.group_count) {
            throw Error(ErrorCode::SizeMismatch, "index names group beyond group_count");
        }
        at += 16;
    }
    return flat;
}

void write_grtt(const FlatTokens& flat, const std::filesystem::path& path) {
    const std::string bytes = encode_grtt(flat);
    std::ofstream out(path, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw Error(ErrorCode::IoError, "failed writing " + path.string());
    }
}

FlatTokens read_grtt(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::MissingFile, path.string());
    }
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_grtt(bytes);
}

nlohmann::json grtt_index_json(const FlatTokens& flat) {
    nlohmann::json index = nlohmann::json::array();
    for (const FlatEntry& e : flat.index) {
        index.push_back({e.group, static_cast<std::uint32_t>(e.kind), e.frame, e.patch});
    }
    return {{"embed_dim", flat.embed_dim},
            {"token_count", flat.size()},
            {"group_count", flat.group_count},
            {"index", std::move(index)}};
}

}  // namespace grt
