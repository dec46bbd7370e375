"""Reference pruning strategies and kept-set comparison metrics.

``random_prune`` draws a uniform sample without replacement using a partial
Fisher-Yates shuffle over a PCG64 stream, so the kept set is a pure function
of (T, K, seed). ``spatial_prune`` keeps an evenly strided pattern in every
region under equal per-region quotas. ``compare`` reports how much two kept
sets overlap and how much fused-score mass each retains.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fusion import FusedScores, apportion
from .tiling import TileGrid

RNG_ALGORITHM = "pcg64-fisher-yates"


@dataclass
class OverlapReport:
    jaccard: float
    score_mass_a: float
    score_mass_b: float
    per_tile_retention: np.ndarray

    def to_dict(self) -> dict:
        return {
            "jaccard": self.jaccard,
            "score_mass_a": self.score_mass_a,
            "score_mass_b": self.score_mass_b,
            "per_tile_retention": [float(x) for x in self.per_tile_retention],
        }


def random_prune(total_tokens: int, budget: int, seed: int) -> np.ndarray:
    """Uniform K-subset of [0, T), sorted ascending, deterministic in seed."""
    if budget > total_tokens:
        raise ValueError(f"budget {budget} exceeds token count {total_tokens}")
    if budget < 0:
        raise ValueError("budget must be non-negative")
    rng = np.random.Generator(np.random.PCG64(seed))
    pool = np.arange(total_tokens, dtype=np.int64)
    for i in range(budget):
        j = i + int(rng.integers(total_tokens - i))
        pool[i], pool[j] = pool[j], pool[i]
    return np.sort(pool[:budget])


def _strided_patches(n: int, quota: int) -> list[int]:
    # round-half-up keeps the pattern portable across platforms
    if quota == 0:
        return []
    if quota == 1:
        return [0]
    picks: list[int] = []
    taken = set()
    for t in range(quota):
        pos = int(t * (n - 1) / (quota - 1) + 0.5)
        while pos in taken:
            pos += 1
        taken.add(pos)
        picks.append(pos)
    return picks


def spatial_prune(grid: TileGrid, budget: int) -> np.ndarray:
    """Equal per-region quotas, evenly strided patch pattern within each."""
    t = grid.total_tokens
    if budget > t:
        raise ValueError(f"budget {budget} exceeds token count {t}")
    if budget < 0:
        raise ValueError("budget must be non-negative")
    n = grid.tokens_per_tile
    caps = np.full(grid.num_regions, n, dtype=np.int64)
    quotas = apportion(np.ones(grid.num_regions), budget, caps=caps)
    kept: list[int] = []
    for tile in range(grid.num_regions):
        base = tile * n
        kept.extend(base + p for p in sorted(_strided_patches(n, int(quotas[tile]))))
    return np.asarray(kept, dtype=np.int64)


def compare(
    kept_a: np.ndarray,
    kept_b: np.ndarray,
    scores: FusedScores,
    grid: TileGrid,
) -> OverlapReport:
    """Set overlap of two kept sets plus retained fused-score mass.

    ``per_tile_retention`` describes the first set: the fraction of each
    region's tokens it keeps.
    """
    a = set(int(i) for i in kept_a)
    b = set(int(i) for i in kept_b)
    union = a | b
    jaccard = 1.0 if not union else len(a & b) / len(union)

    s = np.asarray(scores.s, dtype=np.float64)
    total = float(s.sum())

    def mass(kept: set[int]) -> float:
        if total <= 0.0:
            return 0.0
        idx = np.fromiter(kept, dtype=np.int64, count=len(kept))
        return float(s[idx].sum()) / total if len(kept) else 0.0

    n = grid.tokens_per_tile
    per_tile = np.zeros(grid.num_regions, dtype=np.float64)
    for tile in range(grid.num_regions):
        base = tile * n
        per_tile[tile] = sum(1 for i in a if base <= i < base + n) / n
    return OverlapReport(
        jaccard=jaccard,
        score_mass_a=mass(a),
        score_mass_b=mass(b),
        per_tile_retention=per_tile,
    )
