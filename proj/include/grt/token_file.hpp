// Copyright 2026 The GRT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "grt/scenemerge.hpp"

namespace grt {

// GRTT layout, little-endian:
//   "GRTT" | u32 version = 1 | u32 embed_dim | u32 token_count | u32 group_count
//   | float32 tokens [token_count x embed_dim]
//   | u32 index [token_count x 4] = (group, kind, frame, patch)
inline constexpr std::uint32_t kGrttVersion = 1;

std::string encode_grtt(const FlatTokens& flat);
FlatTokens decode_grtt(const std::string& bytes);

void write_grtt(const FlatTokens& flat, const std::filesystem::path& path);
FlatTokens read_grtt(const std::filesystem::path& path);

/// {"embed_dim", "token_count", "group_count", "index": [[group, kind, frame, patch], ...]}
nlohmann::json grtt_index_json(const FlatTokens& flat);

}  // namespace grt
