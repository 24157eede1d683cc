// Copyright 2026 The GRT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace grt {

enum class ErrorCode {
    MissingFile,
    MalformedManifest,
    DimensionMismatch,
    UpsampleRequested,
    AlreadyGrayscale,
    IndivisibleDimensions,
    ShapeMismatch,
    OffsetOutOfRange,
    EmptySequence,
    InvalidDims,
    BadMagic,
    VersionUnsupported,
    SizeMismatch,
    MaskLengthMismatch,
    KeyMaskNotFull,
    EmptyTokenSet,
    ZeroMeanEmbedding,
    TooFewTokens,
    EmptySceneList,
    InvalidSpec,
    InvalidConfig,
    NondeterministicOutput,
    IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers (CLI, bindings, tests) can branch on the kind without parsing text.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace grt
