"""Bottom-up importance signals from the vision encoder.

Two signals come out of the encoder side: a region-level score per tile
(cosine of the tile CLS embedding with the whole-image CLS embedding) and a
token-level score per patch (the CLS-to-patch attention row at a chosen
encoder layer, aggregated over heads).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HEAD_MODES = ("mean", "max")

# deliberately no matmul/BLAS here: elementwise ops plus axis sums keep the
# score math reproducible by a plain-Python reference implementation
def _cosine_rows(tiles: np.ndarray, ref: np.ndarray) -> np.ndarray:
    dots = (tiles * ref).sum(axis=1)
    tile_norms = np.sqrt((tiles * tiles).sum(axis=1))
    ref_norm = np.sqrt((ref * ref).sum())
    if ref_norm == 0.0 or np.any(tile_norms == 0.0):
        raise ValueError("zero-norm CLS embedding: cosine undefined")
    return dots / (tile_norms * ref_norm)


@dataclass
class RegionScores:
    """Per-region saliency in [-1, 1]; thumbnail slot (last) is fixed at 1.0."""

    a: np.ndarray


@dataclass
class BottomUpScores:
    """Per-token CLS-attention score, aligned with the global token index."""

    b: np.ndarray
    head_mode: str = "mean"
    layer_index: int | None = None


def region_scores(cls_tile: np.ndarray, cls_global: np.ndarray) -> RegionScores:
    """Cosine similarity of each tile CLS with the global CLS.

    The thumbnail gets a fixed score of 1.0 (self-similarity of the global
    view), appended after the sub-image scores.
    """
    tiles = np.asarray(cls_tile, dtype=np.float64)
    ref = np.asarray(cls_global, dtype=np.float64)
    if tiles.ndim != 2 or ref.ndim != 1 or tiles.shape[1] != ref.shape[0]:
        raise ValueError(
            f"expected [S,d] tiles and [d] global, got {tiles.shape} and {ref.shape}"
        )
    cos = np.clip(_cosine_rows(tiles, ref), -1.0, 1.0)
    return RegionScores(a=np.concatenate([cos, [1.0]]))


def bottom_up_scores(
    attn_cls_patch: np.ndarray,
    head_mode: str = "mean",
    layer_index: int | None = None,
) -> BottomUpScores:
    """Aggregate per-head CLS-to-patch attention into one score per token.

    ``attn_cls_patch`` is [S+1, H, N] (sub-images then thumbnail). The head
    aggregate is the arithmetic mean by default; ``max`` keeps the strongest
    single-head response instead. Scores are used raw, with no per-row
    renormalization.
    """
    if head_mode not in HEAD_MODES:
        raise ValueError(f"head_mode must be one of {HEAD_MODES}, got {head_mode!r}")
    attn = np.asarray(attn_cls_patch, dtype=np.float64)
    if attn.ndim != 3:
        raise ValueError(f"expected [S+1,H,N] attention, got shape {attn.shape}")
    if np.any(attn < 0.0):
        raise ValueError("attention weights must be non-negative")
    per_tile = attn.mean(axis=1) if head_mode == "mean" else attn.max(axis=1)
    return BottomUpScores(
        b=per_tile.reshape(-1), head_mode=head_mode, layer_index=layer_index
    )
