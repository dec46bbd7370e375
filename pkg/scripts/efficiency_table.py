"""Print the analytic efficiency table for the 1792-token reference grid.

For each pruning ratio: retained tokens under softmax budget allocation,
decoder TFLOPs, KV-cache megabytes, and the reduction against the unpruned
baseline. Pure arithmetic, runs in milliseconds.
"""

import numpy as np

from ptp import LlmProfile, TileGrid, allocate_budgets, efficiency_report

GRID = TileGrid(rows=2, cols=3, tokens_per_tile=256)  # 6 tiles + thumbnail
RATIOS = [0.0, 0.5, 0.6, 0.7, 0.8, 0.9]


def main():
    profile = LlmProfile()
    baseline = GRID.total_tokens
    print(f"grid: {GRID.rows}x{GRID.cols} tiles + thumbnail, "
          f"{GRID.tokens_per_tile} tokens/tile, T={baseline}")
    print(f"profile: layers={profile.layers} hidden={profile.hidden} "
          f"ffn={profile.ffn_intermediate} kv_bytes={profile.kv_bytes_per_elem}")
    print(f"{'ratio':>6} {'tokens':>7} {'tflops':>7} {'kv MB':>7} "
          f"{'tflops cut':>10} {'kv cut':>7}")
    for ratio in RATIOS:
        alloc = allocate_budgets(np.zeros(GRID.num_regions), GRID, ratio)
        rep = efficiency_report(alloc.total_budget, profile, baseline_n=baseline)
        red = rep.reduction_vs_baseline
        print(f"{ratio:>6.1f} {rep.tokens:>7d} {rep.tflops:>7.2f} "
              f"{rep.kv_cache_mb:>7.1f} {red['tflops']:>9.1%} {red['kv_cache_mb']:>7.1%}")


if __name__ == "__main__":
    main()
