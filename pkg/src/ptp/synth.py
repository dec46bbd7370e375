"""Deterministic synthetic bundles with planted salient regions and tokens.

The generator builds attention-like tensors whose orderings are known by
construction, so the whole pipeline can be verified at desk scale without
any model:

  * tile CLS embeddings sit at a fixed angle from the global CLS; hot tiles
    are slerped toward it, so their region cosine strictly dominates,
  * each CLS-to-patch row is a probability vector; hot patches share a
    ``concentration / (1 + concentration)`` slice of the mass uniformly,
    the rest is mildly jittered across cold patches,
  * instruction rows do the same over global indices for the planted
    instruction-relevant tokens.

Everything is a pure function of the spec (seed included).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bundle import AttentionBundle
from .tiling import TileGrid

BASE_COSINE = 0.5  # region cosine of a cold tile against the global CLS


@dataclass
class SynthSpec:
    grid: TileGrid
    d: int = 64
    hot_tiles: frozenset = frozenset()
    hot_patches: dict = field(default_factory=dict)
    concentration: float = 1000.0
    query_len: int = 4
    instr_hot_patches: frozenset = frozenset()
    seed: int = 0
    heads_vision: int = 4
    heads_llm: int = 4
    vision_layer: int = 8

    def __post_init__(self):
        if not self.grid.has_thumbnail:
            raise ValueError("synthetic bundles always include a thumbnail")
        if self.d < 2:
            raise ValueError("embedding dim must be >= 2")
        if self.concentration <= 0.0:
            raise ValueError("concentration must be positive")
        if self.query_len < 1:
            raise ValueError("query_len must be >= 1")
        if self.heads_vision < 1 or self.heads_llm < 1:
            raise ValueError("head counts must be >= 1")
        n = self.grid.tokens_per_tile
        regions = self.grid.num_regions
        self.hot_tiles = frozenset(int(i) for i in self.hot_tiles)
        # the thumbnail's region score is pinned to 1.0, so it cannot be "hot"
        if any(not 0 <= i < self.grid.num_tiles for i in self.hot_tiles):
            raise ValueError("hot tile index out of range")
        self.hot_patches = {
            int(t): frozenset(int(p) for p in ps) for t, ps in self.hot_patches.items()
        }
        for t, ps in self.hot_patches.items():
            if not 0 <= t < regions or any(not 0 <= p < n for p in ps):
                raise ValueError("hot patch out of range")
        self.instr_hot_patches = frozenset(int(i) for i in self.instr_hot_patches)
        if any(not 0 <= i < self.grid.total_tokens for i in self.instr_hot_patches):
            raise ValueError("instruction hot token out of range")

    @staticmethod
    def from_json(obj: dict) -> "SynthSpec":
        g = obj["grid"]
        grid = TileGrid(
            rows=int(g["rows"]),
            cols=int(g["cols"]),
            tile_px=int(g.get("tile_px", 448)),
            tokens_per_tile=int(g.get("tokens_per_tile", 256)),
        )
        return SynthSpec(
            grid=grid,
            d=int(obj.get("d", 64)),
            hot_tiles=frozenset(obj.get("hot_tiles", [])),
            hot_patches={int(k): v for k, v in obj.get("hot_patches", {}).items()},
            concentration=float(obj.get("concentration", 1000.0)),
            query_len=int(obj.get("query_len", 4)),
            instr_hot_patches=frozenset(obj.get("instr_hot_patches", [])),
            seed=int(obj.get("seed", 0)),
            heads_vision=int(obj.get("heads_vision", 4)),
            heads_llm=int(obj.get("heads_llm", 4)),
            vision_layer=int(obj.get("vision_layer", 8)),
        )

    @staticmethod
    def from_file(path: str | Path) -> "SynthSpec":
        return SynthSpec.from_json(json.loads(Path(path).read_text()))


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.sqrt((v * v).sum())


def _attention_row(
    rng: np.random.Generator, n: int, hot: frozenset, concentration: float
) -> np.ndarray:
    """Probability vector over n slots with the hot share planted uniformly."""
    row = np.zeros(n, dtype=np.float64)
    cold = [i for i in range(n) if i not in hot]
    hot_mass = concentration / (1.0 + concentration) if hot else 0.0
    if hot:
        row[sorted(hot)] = hot_mass / len(hot)
    if cold:
        jitter = 1.0 + 0.5 * rng.random(len(cold))
        row[cold] = (1.0 - hot_mass) * jitter / jitter.sum()
    return row


def generate(spec: SynthSpec) -> AttentionBundle:
    """Build the four engine tensors for a planted-saliency scenario."""
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    grid = spec.grid
    s = grid.num_tiles
    n = grid.tokens_per_tile
    regions = grid.num_regions

    cls_global = _unit(rng.standard_normal(spec.d))
    theta_cold = math.acos(BASE_COSINE)
    theta_hot = theta_cold / (1.0 + spec.concentration)
    cls_tile = np.zeros((s, spec.d), dtype=np.float64)
    for i in range(s):
        v = rng.standard_normal(spec.d)
        v -= (v * cls_global).sum() * cls_global
        ortho = _unit(v)
        theta = theta_hot if i in spec.hot_tiles else theta_cold
        cls_tile[i] = math.cos(theta) * cls_global + math.sin(theta) * ortho

    attn_cls_patch = np.zeros((regions, spec.heads_vision, n), dtype=np.float64)
    for tile in range(regions):
        hot = spec.hot_patches.get(tile, frozenset())
        for h in range(spec.heads_vision):
            attn_cls_patch[tile, h] = _attention_row(rng, n, hot, spec.concentration)

    t = grid.total_tokens
    attn_instr_visual = np.zeros((spec.heads_llm, spec.query_len, t), dtype=np.float64)
    for h in range(spec.heads_llm):
        for q in range(spec.query_len):
            attn_instr_visual[h, q] = _attention_row(
                rng, t, spec.instr_hot_patches, spec.concentration
            )

    metadata = {
        "model": "synthetic",
        "vision_layer": str(spec.vision_layer),
        "llm_block": "2",
        "head_mode": "mean",
        "grid_rows": str(grid.rows),
        "grid_cols": str(grid.cols),
        "tile_px": str(grid.tile_px),
        "tokens_per_tile": str(n),
        "seed": str(spec.seed),
    }
    return AttentionBundle(
        cls_global=cls_global.astype(np.float32),
        cls_tile=cls_tile.astype(np.float32),
        attn_cls_patch=attn_cls_patch.astype(np.float32),
        attn_instr_visual=attn_instr_visual.astype(np.float32),
        metadata=metadata,
    )
