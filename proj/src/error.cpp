// Copyright 2026 The GRT Authors
// SPDX-License-Identifier: Apache-2.0

#include "grt/error.hpp"

namespace grt {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::MissingFile: return "MissingFile";
        case ErrorCode::MalformedManifest: return "MalformedManifest";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::UpsampleRequested: return "UpsampleRequested";
        case ErrorCode::AlreadyGrayscale: return "AlreadyGrayscale";
        case ErrorCode::IndivisibleDimensions: return "IndivisibleDimensions";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::OffsetOutOfRange: return "OffsetOutOfRange";
        case ErrorCode::EmptySequence: return "EmptySequence";
        case ErrorCode::InvalidDims: return "InvalidDims";
        case ErrorCode::BadMagic: return "BadMagic";
        case ErrorCode::VersionUnsupported: return "VersionUnsupported";
        case ErrorCode::SizeMismatch: return "SizeMismatch";
        case ErrorCode::MaskLengthMismatch: return "MaskLengthMismatch";
        case ErrorCode::KeyMaskNotFull: return "KeyMaskNotFull";
        case ErrorCode::EmptyTokenSet: return "EmptyTokenSet";
        case ErrorCode::ZeroMeanEmbedding: return "ZeroMeanEmbedding";
        case ErrorCode::TooFewTokens: return "TooFewTokens";
        case ErrorCode::EmptySceneList: return "EmptySceneList";
        case ErrorCode::InvalidSpec: return "InvalidSpec";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::NondeterministicOutput: return "NondeterministicOutput";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

}  // namespace grt
