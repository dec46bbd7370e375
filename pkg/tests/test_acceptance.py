"""Acceptance suite: one test per release criterion, one printed line each.

Run with ``pytest tests/test_acceptance.py -v`` (the pass/fail lines bypass
pytest's capture so they always reach the terminal).
"""

import math
import subprocess
import sys
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np

import oracle
from ptp import (
    AttentionBundle,
    PruneConfig,
    SynthSpec,
    TensorManifest,
    TileGrid,
    allocate_budgets,
    generate,
    prune,
    read_bundle,
    retained_budget,
    tflops,
    kv_cache_mb,
    write_bundle,
)
from conftest import random_bundle

DATA = Path(__file__).parent / "data"


@contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"[acceptance] FAIL  {name}", file=sys.__stdout__)
        raise
    print(f"[acceptance] PASS  {name}", file=sys.__stdout__)


def _fmt_places(x: float, places: int) -> str:
    from decimal import ROUND_HALF_UP, Decimal

    return str(Decimal(x).quantize(Decimal(1).scaleb(-places), ROUND_HALF_UP))


def test_efficiency_table_reproduction():
    expected = {
        1792: ("6.40", "336.0"),
        896: ("3.04", "168.0"),
        716: ("2.41", "134.3"),
        537: ("1.79", "100.7"),
        358: ("1.18", "67.1"),
        179: ("0.58", "33.6"),
    }
    with criterion("efficiency table: TFLOPs to 2 d.p., KV-cache MB to 1 d.p."):
        start = time.perf_counter()
        for n, (want_tf, want_mb) in expected.items():
            assert _fmt_places(tflops(n), 2) == want_tf, f"n={n} tflops"
            assert _fmt_places(kv_cache_mb(n), 1) == want_mb, f"n={n} kv"
        elapsed = time.perf_counter() - start
        assert elapsed < 1.0, f"took {elapsed:.3f}s"


def test_token_count_reproduction():
    grid = TileGrid(rows=2, cols=3, tokens_per_tile=256)  # 7 regions, T=1792
    expected = {0.5: 896, 0.6: 716, 0.7: 537, 0.8: 358, 0.9: 179}
    with criterion("token budgets at r=0.5..0.9 on the 1792-token grid"):
        rng = np.random.default_rng(0)
        for ratio, k in expected.items():
            for a in (np.zeros(7), rng.uniform(-1, 1, 7)):
                alloc = allocate_budgets(a, grid, ratio)
                assert alloc.total_budget == k
                assert int(alloc.quotas.sum()) == k


def test_oracle_equivalence_1000_instances():
    with criterion("kept sets match the brute-force oracle on 1000 instances"):
        start = time.perf_counter()
        rng = np.random.default_rng(20240902)
        for i in range(1000):
            cols = int(rng.integers(1, 5))  # S <= 4
            n = int(rng.integers(1, 17))  # N <= 16
            q = int(rng.integers(1, 4))
            bundle = random_bundle(rng, rows=1, cols=cols, n=n, d=2, query_len=q)
            ratio = float(rng.uniform(0.0, 0.95))
            alpha = float(rng.uniform(0.0, 1.0))
            engine = prune(bundle, PruneConfig(ratio=ratio, alpha=alpha))
            expected = oracle.prune(
                bundle.cls_tile,
                bundle.cls_global,
                bundle.attn_cls_patch,
                bundle.attn_instr_visual,
                tokens_per_tile=n,
                ratio=ratio,
                alpha=alpha,
            )
            assert engine.kept.tolist() == expected, f"instance {i}"
        elapsed = time.perf_counter() - start
        assert elapsed < 10.0, f"took {elapsed:.3f}s"


def test_budget_conservation_10000_draws():
    with criterion("budget conservation over 10000 random (a, r, grid) draws"):
        rng = np.random.default_rng(7)
        violations = 0
        for _ in range(10_000):
            rows = int(rng.integers(1, 4))
            cols = int(rng.integers(1, 4))
            n = int(rng.integers(1, 65))
            grid = TileGrid(rows=rows, cols=cols, tokens_per_tile=n)
            a = rng.uniform(-1, 1, grid.num_regions)
            ratio = float(rng.uniform(0.0, 1.0))
            if ratio == 1.0:
                ratio = 0.0
            alloc = allocate_budgets(a, grid, ratio)
            k = retained_budget(ratio, grid.total_tokens)
            ok = (
                int(alloc.quotas.sum()) == k
                and np.all(alloc.quotas >= 0)
                and np.all(alloc.quotas <= n)
            )
            violations += 0 if ok else 1
        assert violations == 0


def test_alpha_extreme_invariance_100_bundles():
    with criterion("alpha extremes ignore the other signal on 100 bundles"):
        rng = np.random.default_rng(11)
        for _ in range(100):
            cols = int(rng.integers(1, 5))
            n = int(rng.integers(2, 17))
            bundle = random_bundle(rng, rows=1, cols=cols, n=n, d=2, query_len=2)
            t = bundle.total_tokens
            perm = rng.permutation(t)

            base0 = prune(bundle, PruneConfig(ratio=0.5, alpha=0.0))
            shuffled_c = AttentionBundle(
                cls_global=bundle.cls_global,
                cls_tile=bundle.cls_tile,
                attn_cls_patch=bundle.attn_cls_patch,
                attn_instr_visual=bundle.attn_instr_visual[:, :, perm],
                metadata=bundle.metadata,
            )
            assert np.array_equal(
                base0.kept, prune(shuffled_c, PruneConfig(ratio=0.5, alpha=0.0)).kept
            )

            base1 = prune(bundle, PruneConfig(ratio=0.5, alpha=1.0))
            s_plus_1, h, _ = bundle.attn_cls_patch.shape
            flat = bundle.attn_cls_patch.reshape(s_plus_1, h, -1)
            shuffled_b = AttentionBundle(
                cls_global=bundle.cls_global,
                cls_tile=bundle.cls_tile,
                attn_cls_patch=flat[:, :, :]
                .transpose(1, 0, 2)
                .reshape(h, -1)[:, perm]
                .reshape(h, s_plus_1, n)
                .transpose(1, 0, 2),
                attn_instr_visual=bundle.attn_instr_visual,
                metadata=bundle.metadata,
            )
            assert np.array_equal(
                base1.kept, prune(shuffled_b, PruneConfig(ratio=0.5, alpha=1.0)).kept
            )


def test_planted_saliency_recall_100_seeds():
    with criterion("planted hot patches fully recalled over 100 seeds"):
        grid = TileGrid(rows=2, cols=2, tokens_per_tile=16)
        hot = {0: frozenset({1, 5, 14}), 3: frozenset({0, 8})}
        for seed in range(100):
            spec = SynthSpec(
                grid=grid, d=16, hot_patches=hot, concentration=1000.0, seed=seed
            )
            # r=0.5 leaves every region a quota >= 7, above any hot count
            result = prune(generate(spec), PruneConfig(ratio=0.5, alpha=0.0))
            assert result.per_tile_kept.min() >= max(len(v) for v in hot.values())
            kept = set(result.kept.tolist())
            planted = {t * 16 + p for t, ps in hot.items() for p in ps}
            assert planted <= kept, f"seed {seed}"


def test_cli_determinism_byte_identical(tmp_path):
    with criterion("two identical CLI runs produce byte-identical outputs"):
        spec = DATA / "reference_synth.json"
        outputs = []
        for tag in ("one", "two"):
            d = tmp_path / tag
            bundle = d / "bundle"
            report = d / "report.json"
            mask = d / "mask.pgm"
            for cmd in (
                ["synth", str(spec), "--out", str(bundle)],
                ["prune", str(bundle), "--ratio", "0.5", "--alpha", "0.5",
                 "--seed", "3", "--out", str(report)],
                ["mask", str(bundle), str(report), "--out", str(mask)],
            ):
                proc = subprocess.run(
                    [sys.executable, "-m", "ptp", *cmd], capture_output=True
                )
                assert proc.returncode == 0, proc.stderr
            outputs.append((report.read_bytes(), mask.read_bytes()))
        assert outputs[0][0] == outputs[1][0]
        assert outputs[0][1] == outputs[1][1]


def _random_finite_f32(rng, count):
    out = rng.integers(0, 2**32, size=count, dtype=np.uint32).view(np.float32)
    bad = ~np.isfinite(out)
    while bad.any():
        out[bad] = (
            rng.integers(0, 2**32, size=int(bad.sum()), dtype=np.uint32)
            .view(np.float32)
        )
        bad = ~np.isfinite(out)
    return out


def test_interchange_roundtrip_1000_tensors(tmp_path):
    with criterion("1000 random tensors survive write/read bitwise"):
        rng = np.random.default_rng(13)
        written = 0
        batch = 0
        while written < 1000:
            arrays = {}
            for i in range(50):
                ndim = int(rng.integers(1, 4))
                shape = tuple(int(rng.integers(1, 7)) for _ in range(ndim))
                arrays[f"t{i}"] = _random_finite_f32(rng, math.prod(shape)).reshape(shape)
            target = tmp_path / f"bundle{batch}"
            manifest = TensorManifest.for_tensors(arrays)
            write_bundle(manifest, arrays, target)
            back_manifest, back = read_bundle(target)
            for name, arr in arrays.items():
                assert back[name].tobytes() == arr.tobytes()
                assert back[name].shape == arr.shape
                assert back_manifest.entry(name).shape == arr.shape
            written += len(arrays)
            batch += 1
        assert written >= 1000
