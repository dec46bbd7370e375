"""Signal fusion, budget allocation, and per-region token selection.

This is the decision core of the engine: region scores turn into integer
token quotas via a softmax split with largest-remainder rounding, the
bottom-up and top-down token signals are min-max normalized over all
candidate tokens and blended with a single weight ``alpha``, and each
region keeps its quota of highest-scoring tokens.

All score math runs in float64 with elementwise numpy ops and short-axis
sums only, so a straight-line Python reimplementation produces bitwise
identical results; the test suite leans on that for oracle checks.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .bundle import AttentionBundle
from .instruction import TOKEN_MODES, TopDownScores, top_down_scores
from .saliency import (
    HEAD_MODES,
    BottomUpScores,
    RegionScores,
    bottom_up_scores,
    region_scores,
)
from .tiling import TileGrid


class Strategy(str, enum.Enum):
    PTP = "ptp"
    NO_REGION = "no_region"
    BOTTOM_UP_ONLY = "bottom_up_only"
    TOP_DOWN_ONLY = "top_down_only"
    RANDOM = "random"
    SPATIAL = "spatial"


@dataclass(frozen=True)
class PruneConfig:
    ratio: float = 0.5
    alpha: float = 0.5
    strategy: Strategy = Strategy.PTP
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.ratio < 1.0:
            raise ValueError(f"ratio must be in [0, 1), got {self.ratio}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed must fit in u64, got {self.seed}")
        object.__setattr__(self, "strategy", Strategy(self.strategy))


@dataclass
class BudgetAllocation:
    """Integer token quota per region (thumbnail last), summing to the budget."""

    quotas: np.ndarray
    total_budget: int


@dataclass
class FusedScores:
    s: np.ndarray
    b_norm: np.ndarray
    c_norm: np.ndarray


@dataclass
class PruneResult:
    kept: np.ndarray
    mask: np.ndarray
    per_tile_kept: np.ndarray

    @property
    def budget(self) -> int:
        return int(self.kept.size)

    def to_dict(self, config: PruneConfig | None = None) -> dict:
        out = {
            "kept": [int(i) for i in self.kept],
            "quotas": [int(q) for q in self.per_tile_kept],
            "K": self.budget,
        }
        if config is not None:
            out["config"] = {
                "ratio": config.ratio,
                "alpha": config.alpha,
                "strategy": config.strategy.value,
                "seed": int(config.seed),
            }
        return out


def retained_budget(ratio: float, total_tokens: int) -> int:
    """Tokens kept at pruning ratio r: floor((1 - r) * T)."""
    return math.floor((1.0 - ratio) * total_tokens)


def normalize_minmax(x: np.ndarray) -> np.ndarray:
    """Affine map onto [0, 1]; a constant signal maps to all 0.5.

    The degenerate case keeps fusion meaningful: a flat signal contributes
    the same mid-scale value everywhere instead of hijacking the blend.
    """
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("normalize_minmax requires finite values")
    lo = x.min()
    hi = x.max()
    if hi == lo:
        return np.full_like(x, 0.5)
    return (x - lo) / (hi - lo)


def softmax(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    e = np.exp(x - x.max())
    return e / e.sum()


def apportion(
    weights: np.ndarray, total: int, caps: np.ndarray | None = None
) -> np.ndarray:
    """Split ``total`` integer units proportionally to ``weights``.

    Largest-remainder rounding: floor every real target, then hand the
    leftover units to the largest fractional parts, ties to the lowest
    index. With ``caps``, any quota exceeding its cap is clamped and the
    overflow is re-split over the uncapped entries by the same rule until
    stable. Requires total <= sum(caps).
    """
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("weights must be a non-empty 1-D array")
    if np.any(w < 0.0) or w.sum() <= 0.0:
        raise ValueError("weights must be non-negative with positive sum")
    if total < 0:
        raise ValueError("total must be non-negative")
    if caps is None:
        cap_arr = np.full(w.size, total, dtype=np.int64)
    else:
        cap_arr = np.asarray(caps, dtype=np.int64)
        if cap_arr.shape != w.shape:
            raise ValueError("caps must match weights in length")
        if total > int(cap_arr.sum()):
            raise ValueError(f"total {total} exceeds cap sum {int(cap_arr.sum())}")

    quotas = np.zeros(w.size, dtype=np.int64)
    remaining = int(total)
    while remaining > 0:
        free = np.flatnonzero(quotas < cap_arr)
        share = w[free] / w[free].sum()
        targets = remaining * share
        floors = np.floor(targets).astype(np.int64)
        fracs = targets - floors
        leftover = remaining - int(floors.sum())
        add = floors
        if leftover > 0:
            # stable sort on -frac keeps ascending index order within ties
            order = np.argsort(-fracs, kind="stable")
            add = floors.copy()
            add[order[:leftover]] += 1
        quotas[free] += add
        over = quotas > cap_arr
        remaining = int((quotas[over] - cap_arr[over]).sum())
        quotas[over] = cap_arr[over]
    return quotas


def allocate_budgets(
    region: RegionScores | np.ndarray, grid: TileGrid, ratio: float
) -> BudgetAllocation:
    """Token quota per region from a softmax over region saliency.

    The softmax runs over all regions including the thumbnail slot, each
    quota is capped at the region's token count, and the quotas sum to
    exactly floor((1 - r) * T).
    """
    a = region.a if isinstance(region, RegionScores) else np.asarray(region)
    if a.shape != (grid.num_regions,):
        raise ValueError(
            f"expected {grid.num_regions} region scores, got shape {a.shape}"
        )
    if not 0.0 <= ratio < 1.0:
        raise ValueError(f"ratio must be in [0, 1), got {ratio}")
    k = retained_budget(ratio, grid.total_tokens)
    caps = np.full(grid.num_regions, grid.tokens_per_tile, dtype=np.int64)
    quotas = apportion(softmax(a), k, caps=caps)
    return BudgetAllocation(quotas=quotas, total_budget=k)


def uniform_budgets(grid: TileGrid, ratio: float) -> BudgetAllocation:
    """Region-blind variant: split the budget evenly across regions."""
    if not 0.0 <= ratio < 1.0:
        raise ValueError(f"ratio must be in [0, 1), got {ratio}")
    k = retained_budget(ratio, grid.total_tokens)
    caps = np.full(grid.num_regions, grid.tokens_per_tile, dtype=np.int64)
    quotas = apportion(np.ones(grid.num_regions), k, caps=caps)
    return BudgetAllocation(quotas=quotas, total_budget=k)


def fuse(b_norm: np.ndarray, c_norm: np.ndarray, alpha: float) -> FusedScores:
    """Blend normalized signals: s = alpha * c + (1 - alpha) * b."""
    b = np.asarray(b_norm, dtype=np.float64)
    c = np.asarray(c_norm, dtype=np.float64)
    if b.shape != c.shape:
        raise ValueError(f"signal length mismatch: {b.shape} vs {c.shape}")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    s = alpha * c + (1.0 - alpha) * b
    return FusedScores(s=s, b_norm=b, c_norm=c)


def select(
    scores: FusedScores, allocation: BudgetAllocation, grid: TileGrid
) -> PruneResult:
    """Keep each region's quota of highest fused scores, ties to lower index."""
    s = scores.s
    n = grid.tokens_per_tile
    if s.shape != (grid.total_tokens,):
        raise ValueError(f"expected {grid.total_tokens} scores, got {s.shape}")
    quotas = allocation.quotas
    if quotas.shape != (grid.num_regions,):
        raise ValueError("allocation does not match grid")
    chunks = []
    for tile in range(grid.num_regions):
        q = int(quotas[tile])
        base = tile * n
        order = np.argsort(-s[base : base + n], kind="stable")
        chunks.append(base + np.sort(order[:q]))
    kept = np.concatenate(chunks) if chunks else np.empty(0, dtype=np.int64)
    mask = np.zeros(grid.total_tokens, dtype=bool)
    mask[kept] = True
    return PruneResult(kept=kept.astype(np.int64), mask=mask, per_tile_kept=quotas.copy())


def effective_alpha(config: PruneConfig) -> float:
    if config.strategy is Strategy.BOTTOM_UP_ONLY:
        return 0.0
    if config.strategy is Strategy.TOP_DOWN_ONLY:
        return 1.0
    return config.alpha


def budgets_for(
    config: PruneConfig, region: RegionScores, grid: TileGrid
) -> BudgetAllocation:
    if config.strategy is Strategy.NO_REGION:
        return uniform_budgets(grid, config.ratio)
    return allocate_budgets(region, grid, config.ratio)


def _baseline_result(kept: np.ndarray, grid: TileGrid) -> PruneResult:
    mask = np.zeros(grid.total_tokens, dtype=bool)
    mask[kept] = True
    per_tile = mask.reshape(grid.num_regions, grid.tokens_per_tile).sum(axis=1)
    return PruneResult(
        kept=np.asarray(kept, dtype=np.int64),
        mask=mask,
        per_tile_kept=per_tile.astype(np.int64),
    )


def prune_scores(
    region: RegionScores,
    bottom_up: BottomUpScores,
    top_down: TopDownScores,
    grid: TileGrid,
    config: PruneConfig,
) -> PruneResult:
    """Run allocation, normalization, fusion, and selection on raw signals."""
    if config.strategy in (Strategy.RANDOM, Strategy.SPATIAL):
        from . import baselines

        k = retained_budget(config.ratio, grid.total_tokens)
        if config.strategy is Strategy.RANDOM:
            kept = baselines.random_prune(grid.total_tokens, k, config.seed)
        else:
            kept = baselines.spatial_prune(grid, k)
        return _baseline_result(kept, grid)

    allocation = budgets_for(config, region, grid)
    fused = fuse(
        normalize_minmax(bottom_up.b),
        normalize_minmax(top_down.c),
        effective_alpha(config),
    )
    return select(fused, allocation, grid)


def prune(
    bundle: AttentionBundle,
    config: PruneConfig,
    grid: TileGrid | None = None,
    head_mode: str = "mean",
    token_mode: str = "max",
) -> PruneResult:
    """Full pipeline on a tensor bundle; the one-call engine entry point."""
    if head_mode not in HEAD_MODES or token_mode not in TOKEN_MODES:
        raise ValueError(f"bad aggregation mode: {head_mode!r}/{token_mode!r}")
    if grid is None:
        grid = bundle.grid()
    bundle.check_grid(grid)
    region = region_scores(bundle.cls_tile, bundle.cls_global)
    bottom_up = bottom_up_scores(
        bundle.attn_cls_patch, head_mode=head_mode, layer_index=bundle.vision_layer
    )
    top_down = top_down_scores(
        bundle.attn_instr_visual,
        token_mode=token_mode,
        head_mode=head_mode,
        llm_block=bundle.llm_block,
    )
    return prune_scores(region, bottom_up, top_down, grid, config)
