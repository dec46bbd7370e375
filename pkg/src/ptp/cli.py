"""Command-line front end: synth / prune / mask / compare / flops.

Exit codes: 0 success, 1 usage error (bad flags or ranges), 2 data error
(unreadable or inconsistent inputs). All output files are written
atomically. Reports follow the versioned ``report_v1`` JSON schema and are
byte-stable for fixed inputs and seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

import numpy as np

from . import baselines
from .bundle import AttentionBundle
from .efficiency import LlmProfile, efficiency_report
from .fusion import (
    PruneConfig,
    Strategy,
    budgets_for,
    effective_alpha,
    fuse,
    normalize_minmax,
    prune_scores,
    select,
)
from .instruction import top_down_scores
from .pgm import render_mask, write_pgm
from .saliency import bottom_up_scores, region_scores
from .synth import SynthSpec, generate
from .tensor_store import BundleError, _write_atomic
from .tiling import TileGrid, plan_grid

REPORT_SCHEMA_VERSION = "report_v1"

PROFILE_ENV = "PTP_PROFILE"

_EFFICIENCY_SCHEMA = {
    "type": "object",
    "required": ["tokens", "tflops", "kv_cache_mb"],
    "properties": {
        "tokens": {"type": "integer", "minimum": 0},
        "tflops": {"type": "number", "minimum": 0},
        "kv_cache_mb": {"type": "number", "minimum": 0},
        "reduction_vs_baseline": {
            "type": "object",
            "required": ["tokens", "tflops", "kv_cache_mb"],
        },
    },
}

_OVERLAP_SCHEMA = {
    "type": "object",
    "required": ["jaccard", "score_mass_a", "score_mass_b", "per_tile_retention"],
    "properties": {
        "jaccard": {"type": "number", "minimum": 0, "maximum": 1},
        "score_mass_a": {"type": "number", "minimum": 0, "maximum": 1},
        "score_mass_b": {"type": "number", "minimum": 0, "maximum": 1},
        "per_tile_retention": {"type": "array", "items": {"type": "number"}},
    },
}

REPORT_JSON_SCHEMA = {
    "type": "object",
    "required": [
        "schema", "config", "grid", "bundle_metadata", "result",
        "efficiency", "profile", "baselines",
    ],
    "properties": {
        "schema": {"const": REPORT_SCHEMA_VERSION},
        "config": {
            "type": "object",
            "required": ["ratio", "alpha", "strategy", "seed",
                         "head_mode", "token_mode"],
        },
        "grid": {
            "type": "object",
            "required": ["rows", "cols", "tile_px", "tokens_per_tile",
                         "has_thumbnail"],
        },
        "bundle_metadata": {"type": "object"},
        "result": {
            "type": "object",
            "required": ["kept", "quotas", "K", "config"],
            "properties": {
                "kept": {"type": "array", "items": {"type": "integer"}},
                "quotas": {"type": "array", "items": {"type": "integer"}},
                "K": {"type": "integer", "minimum": 0},
            },
        },
        "efficiency": {
            "type": "object",
            "required": ["baseline", "pruned"],
            "properties": {
                "baseline": _EFFICIENCY_SCHEMA,
                "pruned": _EFFICIENCY_SCHEMA,
            },
        },
        "profile": {"type": "object"},
        "baselines": {
            "type": "object",
            "required": ["random", "spatial"],
            "properties": {
                "random": _OVERLAP_SCHEMA,
                "spatial": _OVERLAP_SCHEMA,
            },
        },
    },
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); usage errors are exit 1
        raise UsageError(f"{self.prog}: {message}")


def _fmt(x: float, places: int) -> str:
    """Round half up; plain float formatting rounds 134.25 down to 134.2."""
    q = Decimal(1).scaleb(-places)
    return str(Decimal(x).quantize(q, rounding=ROUND_HALF_UP))


def _write_json(path: str | Path, obj: dict) -> None:
    _write_atomic(Path(path), json.dumps(obj, indent=2, sort_keys=True).encode() + b"\n")


def _load_profile(path: str | None) -> LlmProfile:
    path = path or os.environ.get(PROFILE_ENV)
    if path:
        return LlmProfile.from_file(path)
    return LlmProfile()


def _check_range(name: str, value: float, lo: float, hi: float, open_hi: bool) -> None:
    ok = lo <= value < hi if open_hi else lo <= value <= hi
    if not ok:
        bracket = ")" if open_hi else "]"
        raise UsageError(f"--{name} must be in [{lo}, {hi}{bracket}, got {value}")


def _grid_dict(grid: TileGrid) -> dict:
    return {
        "rows": grid.rows,
        "cols": grid.cols,
        "tile_px": grid.tile_px,
        "tokens_per_tile": grid.tokens_per_tile,
        "has_thumbnail": grid.has_thumbnail,
    }


def _pipeline(bundle: AttentionBundle, config: PruneConfig, head_mode: str, token_mode: str):
    """Signals, fused scores, and the strategy's kept set for one bundle."""
    grid = bundle.grid()
    region = region_scores(bundle.cls_tile, bundle.cls_global)
    b = bottom_up_scores(bundle.attn_cls_patch, head_mode=head_mode,
                         layer_index=bundle.vision_layer)
    c = top_down_scores(bundle.attn_instr_visual, token_mode=token_mode,
                        head_mode=head_mode, llm_block=bundle.llm_block)
    fused = fuse(normalize_minmax(b.b), normalize_minmax(c.c), effective_alpha(config))
    if config.strategy in (Strategy.RANDOM, Strategy.SPATIAL):
        result = prune_scores(region, b, c, grid, config)
    else:
        result = select(fused, budgets_for(config, region, grid), grid)
    return grid, region, fused, result


def _run_report(bundle: AttentionBundle, config: PruneConfig, head_mode: str,
                token_mode: str, profile: LlmProfile) -> dict:
    grid, _, fused, result = _pipeline(bundle, config, head_mode, token_mode)
    t = grid.total_tokens
    k = result.budget

    rand_kept = baselines.random_prune(t, k, config.seed)
    spat_kept = baselines.spatial_prune(grid, k)
    overlaps = {
        "random": {
            **baselines.compare(rand_kept, result.kept, fused, grid).to_dict(),
            "seed": int(config.seed),
            "rng": baselines.RNG_ALGORITHM,
        },
        "spatial": baselines.compare(spat_kept, result.kept, fused, grid).to_dict(),
    }
    return {
        "schema": REPORT_SCHEMA_VERSION,
        "config": {
            "ratio": config.ratio,
            "alpha": config.alpha,
            "strategy": config.strategy.value,
            "seed": int(config.seed),
            "head_mode": head_mode,
            "token_mode": token_mode,
        },
        "grid": _grid_dict(grid),
        "bundle_metadata": dict(sorted(bundle.metadata.items())),
        "result": result.to_dict(config),
        "efficiency": {
            "baseline": efficiency_report(t, profile).to_dict(),
            "pruned": efficiency_report(k, profile, baseline_n=t).to_dict(),
        },
        "profile": profile.to_dict(),
        "baselines": overlaps,
    }


# subcommands

def cmd_plan(args) -> int:
    if args.max_tiles < 1 or args.tile_px < 1 or args.tokens_per_tile < 1:
        raise UsageError("--max-tiles, --tile-px, --tokens-per-tile must be >= 1")
    grid = plan_grid(
        args.image_w,
        args.image_h,
        max_tiles=args.max_tiles,
        tile_px=args.tile_px,
        tokens_per_tile=args.tokens_per_tile,
    )
    out = _grid_dict(grid)
    out["total_tokens"] = grid.total_tokens
    print(json.dumps(out, indent=2, sort_keys=True))
    return 0


def cmd_synth(args) -> int:
    spec = SynthSpec.from_file(args.spec)
    bundle = generate(spec)
    bundle.save(args.out)
    print(f"wrote bundle to {args.out}", file=sys.stderr)
    return 0


def cmd_prune(args) -> int:
    _check_range("ratio", args.ratio, 0.0, 1.0, open_hi=True)
    _check_range("alpha", args.alpha, 0.0, 1.0, open_hi=False)
    bundle = AttentionBundle.load(args.bundle)
    config = PruneConfig(ratio=args.ratio, alpha=args.alpha,
                         strategy=Strategy(args.strategy), seed=args.seed)
    profile = _load_profile(args.profile)
    report = _run_report(bundle, config, args.head_mode, args.token_mode, profile)
    _write_json(args.out, report)
    print(f"kept {report['result']['K']} of {report['grid']['rows'] * report['grid']['cols'] + 1} "
          f"regions x {report['grid']['tokens_per_tile']} tokens -> {args.out}",
          file=sys.stderr)
    return 0


def cmd_mask(args) -> int:
    bundle = AttentionBundle.load(args.bundle)
    grid = bundle.grid()
    report = json.loads(Path(args.report).read_text())
    kept = np.asarray(report["result"]["kept"], dtype=np.int64)
    if kept.size and (kept.min() < 0 or kept.max() >= grid.total_tokens):
        raise BundleError("report kept indices out of range for this bundle")
    mask = np.zeros(grid.total_tokens, dtype=bool)
    mask[kept] = True
    write_pgm(render_mask(mask, grid), args.out)
    return 0


def cmd_compare(args) -> int:
    for r in args.ratio:
        _check_range("ratio", r, 0.0, 1.0, open_hi=True)
    _check_range("alpha", args.alpha, 0.0, 1.0, open_hi=False)
    if args.seeds < 1:
        raise UsageError("--seeds must be >= 1")
    bundle = AttentionBundle.load(args.bundle)
    grid = bundle.grid()
    rows = []
    detail: dict = {
        "schema": "compare_v1",
        "alpha": args.alpha,
        "seeds": args.seeds,
        "rng": baselines.RNG_ALGORITHM,
        "grid": _grid_dict(grid),
        "ratios": {},
    }
    for ratio in args.ratio:
        config = PruneConfig(ratio=ratio, alpha=args.alpha, seed=args.seed)
        _, _, fused, ptp_result = _pipeline(bundle, config, args.head_mode, args.token_mode)
        k = ptp_result.budget
        ptp_ov = baselines.compare(ptp_result.kept, ptp_result.kept, fused, grid)

        rand_ovs = []
        for i in range(args.seeds):
            kept = baselines.random_prune(grid.total_tokens, k, args.seed + i)
            rand_ovs.append(baselines.compare(kept, ptp_result.kept, fused, grid))
        spat_ov = baselines.compare(baselines.spatial_prune(grid, k),
                                    ptp_result.kept, fused, grid)

        rand_jac = float(np.mean([o.jaccard for o in rand_ovs]))
        rand_mass = float(np.mean([o.score_mass_a for o in rand_ovs]))
        rows.append(("ptp", ratio, k, ptp_ov.jaccard, ptp_ov.score_mass_a))
        rows.append(("random", ratio, k, rand_jac, rand_mass))
        rows.append(("spatial", ratio, k, spat_ov.jaccard, spat_ov.score_mass_a))
        detail["ratios"][str(ratio)] = {
            "K": k,
            "ptp": ptp_ov.to_dict(),
            "random": {
                "jaccard_mean": rand_jac,
                "score_mass_mean": rand_mass,
                "per_seed": [o.to_dict() for o in rand_ovs],
            },
            "spatial": spat_ov.to_dict(),
        }

    csv_lines = ["strategy,ratio,K,jaccard_vs_ptp,score_mass_retained"]
    csv_lines += [f"{s},{r},{k},{j:.6f},{m:.6f}" for s, r, k, j, m in rows]
    if args.csv:
        _write_atomic(Path(args.csv), ("\n".join(csv_lines) + "\n").encode())
    if args.out:
        _write_json(args.out, detail)
    if not args.csv and not args.out:
        print("\n".join(csv_lines))
    return 0


def cmd_flops(args) -> int:
    profile = _load_profile(args.profile)
    print("tokens, tflops, kv_cache_mb")
    for n in args.tokens:
        if n < 0:
            raise UsageError(f"--tokens must be non-negative, got {n}")
        rep = efficiency_report(n, profile)
        print(f"{n}, {_fmt(rep.tflops, 2)}, {_fmt(rep.kv_cache_mb, 1)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ptp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="plan the tile grid for an image size")
    p.add_argument("--image-w", type=int, required=True, help="image width in px")
    p.add_argument("--image-h", type=int, required=True, help="image height in px")
    p.add_argument("--max-tiles", type=int, default=12)
    p.add_argument("--tile-px", type=int, default=448)
    p.add_argument("--tokens-per-tile", type=int, default=256)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("synth", help="generate a synthetic tensor bundle")
    p.add_argument("spec", help="synth spec JSON file")
    p.add_argument("--out", required=True, help="bundle output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("prune", help="prune a bundle and write a run report")
    p.add_argument("bundle", help="bundle directory")
    p.add_argument("--ratio", type=float, default=0.5, help="fraction of tokens pruned")
    p.add_argument("--alpha", type=float, default=0.5,
                   help="instruction-signal weight in the fused score")
    p.add_argument("--strategy", choices=[s.value for s in Strategy], default="ptp")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--head-mode", choices=["mean", "max"], default="mean")
    p.add_argument("--token-mode", choices=["max", "mean"], default="max")
    p.add_argument("--profile", help="LLM profile JSON (default: $PTP_PROFILE or built-in)")
    p.add_argument("--out", required=True, help="report JSON path")
    p.set_defaults(func=cmd_prune)

    p = sub.add_parser("mask", help="render a report's kept set as a PGM image")
    p.add_argument("bundle", help="bundle directory")
    p.add_argument("report", help="run report JSON from `ptp prune`")
    p.add_argument("--out", required=True, help="PGM output path")
    p.set_defaults(func=cmd_mask)

    p = sub.add_parser("compare", help="overlap of ptp vs random/spatial baselines")
    p.add_argument("bundle", help="bundle directory")
    p.add_argument("--ratio", type=float, action="append", required=True,
                   help="pruning ratio (repeatable)")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--seeds", type=int, default=1, help="number of random-baseline seeds")
    p.add_argument("--seed", type=int, default=0, help="base seed")
    p.add_argument("--head-mode", choices=["mean", "max"], default="mean")
    p.add_argument("--token-mode", choices=["max", "mean"], default="max")
    p.add_argument("--out", help="detail JSON path")
    p.add_argument("--csv", help="summary CSV path")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("flops", help="analytic FLOPs / KV-cache table")
    p.add_argument("--tokens", type=int, nargs="+", required=True)
    p.add_argument("--profile", help="LLM profile JSON (default: $PTP_PROFILE or built-in)")
    p.set_defaults(func=cmd_flops)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (BundleError, OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
