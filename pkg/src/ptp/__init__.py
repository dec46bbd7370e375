"""Training-free visual token pruning for tiled high-resolution VLM inputs.

The engine consumes serialized vision-encoder and LLM attention tensors,
scores regions (CLS cosine), tokens (CLS-to-patch attention), and
instruction relevance (LLM attention), allocates integer per-region
budgets, and returns the kept token set with analytic FLOPs / KV-cache
estimates.
"""

from .bundle import AttentionBundle, REQUIRED_TENSORS
from .baselines import OverlapReport, compare, random_prune, spatial_prune
from .efficiency import (
    EfficiencyReport,
    LlmProfile,
    efficiency_report,
    flops,
    kv_cache_bytes,
    kv_cache_mb,
    tflops,
)
from .fusion import (
    BudgetAllocation,
    FusedScores,
    PruneConfig,
    PruneResult,
    Strategy,
    allocate_budgets,
    apportion,
    fuse,
    normalize_minmax,
    prune,
    prune_scores,
    retained_budget,
    select,
    softmax,
    uniform_budgets,
)
from .instruction import TopDownScores, top_down_scores
from .pgm import read_pgm, render_mask, write_pgm
from .saliency import BottomUpScores, RegionScores, bottom_up_scores, region_scores
from .synth import SynthSpec, generate
from .tensor_store import (
    BundleError,
    TensorEntry,
    TensorManifest,
    read_bundle,
    write_bundle,
)
from .tiling import TileGrid, TokenAddress, address_of, global_index, plan_grid

__version__ = "0.1.0"

__all__ = [
    "AttentionBundle",
    "BottomUpScores",
    "BudgetAllocation",
    "BundleError",
    "EfficiencyReport",
    "FusedScores",
    "LlmProfile",
    "OverlapReport",
    "PruneConfig",
    "PruneResult",
    "REQUIRED_TENSORS",
    "RegionScores",
    "Strategy",
    "SynthSpec",
    "TensorEntry",
    "TensorManifest",
    "TileGrid",
    "TokenAddress",
    "TopDownScores",
    "address_of",
    "allocate_budgets",
    "apportion",
    "bottom_up_scores",
    "compare",
    "efficiency_report",
    "flops",
    "fuse",
    "generate",
    "global_index",
    "kv_cache_bytes",
    "kv_cache_mb",
    "normalize_minmax",
    "plan_grid",
    "prune",
    "prune_scores",
    "random_prune",
    "read_bundle",
    "read_pgm",
    "region_scores",
    "render_mask",
    "retained_budget",
    "select",
    "softmax",
    "spatial_prune",
    "tflops",
    "top_down_scores",
    "uniform_budgets",
    "write_bundle",
    "write_pgm",
]
