# Copyright 2026 The GRT Authors
# SPDX-License-Identifier: Apache-2.0
"""Gated residual tokenization for long videos."""

from grt._grt import (
    GrtError,
    Video,
    gate_mask,
    load_video,
    patch_ssim,
    read_grtt,
    retention_sweep,
    synthesize,
    tokenize,
    write_grtt,
)

__all__ = [
    "GrtError",
    "Video",
    "gate_mask",
    "load_video",
    "patch_ssim",
    "read_grtt",
    "retention_sweep",
    "synthesize",
    "tokenize",
    "write_grtt",
]
