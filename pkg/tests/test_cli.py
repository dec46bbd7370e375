import json
import subprocess
import sys
from pathlib import Path

import jsonschema
import numpy as np
import pytest

from ptp import read_pgm
from ptp.cli import REPORT_JSON_SCHEMA

DATA = Path(__file__).parent / "data"
REFERENCE_SPEC = DATA / "reference_synth.json"
GOLDEN_REPORT = DATA / "golden_report.json"


def run(*args, env=None):
    return subprocess.run(
        [sys.executable, "-m", "ptp", *map(str, args)],
        capture_output=True,
        text=True,
        env=env,
    )


@pytest.fixture(scope="module")
def reference_bundle(tmp_path_factory):
    out = tmp_path_factory.mktemp("ref") / "bundle"
    proc = run("synth", REFERENCE_SPEC, "--out", out)
    assert proc.returncode == 0, proc.stderr
    return out


def test_synth_writes_manifest(reference_bundle):
    assert (reference_bundle / "manifest.json").is_file()
    assert (reference_bundle / "cls_global.bin").is_file()


def test_synth_is_reproducible(tmp_path, reference_bundle):
    again = tmp_path / "again"
    assert run("synth", REFERENCE_SPEC, "--out", again).returncode == 0
    for f in sorted(reference_bundle.iterdir()):
        assert (again / f.name).read_bytes() == f.read_bytes()


def test_synth_missing_spec_fails_loudly(tmp_path):
    proc = run("synth", tmp_path / "nope.json", "--out", tmp_path / "b")
    assert proc.returncode == 2
    assert proc.stderr.strip()


def test_prune_reference_numbers(reference_bundle, tmp_path):
    report_path = tmp_path / "report.json"
    proc = run("prune", reference_bundle, "--ratio", "0.5", "--out", report_path)
    assert proc.returncode == 0, proc.stderr
    report = json.loads(report_path.read_text())
    assert report["result"]["K"] == 896
    assert len(report["result"]["kept"]) == 896
    assert sum(report["result"]["quotas"]) == 896
    assert report["efficiency"]["pruned"]["kv_cache_mb"] == pytest.approx(168.0)
    assert report["efficiency"]["baseline"]["tokens"] == 1792
    jsonschema.validate(report, REPORT_JSON_SCHEMA)


def test_prune_ratio_zero_keeps_all(reference_bundle, tmp_path):
    report_path = tmp_path / "r0.json"
    assert run("prune", reference_bundle, "--ratio", "0", "--out", report_path).returncode == 0
    report = json.loads(report_path.read_text())
    assert report["result"]["K"] == 1792
    assert report["result"]["kept"] == list(range(1792))
    red = report["efficiency"]["pruned"]["reduction_vs_baseline"]
    assert all(v == 0 for v in red.values())


def test_report_reductions_consistent(reference_bundle, tmp_path):
    report_path = tmp_path / "r.json"
    run("prune", reference_bundle, "--ratio", "0.7", "--out", report_path)
    report = json.loads(report_path.read_text())
    base = report["efficiency"]["baseline"]
    pruned = report["efficiency"]["pruned"]
    red = pruned["reduction_vs_baseline"]
    assert red["tokens"] == pytest.approx(1 - pruned["tokens"] / base["tokens"])
    assert red["tflops"] == pytest.approx(1 - pruned["tflops"] / base["tflops"])
    assert red["kv_cache_mb"] == pytest.approx(
        1 - pruned["kv_cache_mb"] / base["kv_cache_mb"]
    )


def test_random_strategy_rerun_identical(reference_bundle, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        proc = run("prune", reference_bundle, "--strategy", "random",
                   "--seed", "7", "--ratio", "0.5", "--out", path)
        assert proc.returncode == 0
    assert a.read_bytes() == b.read_bytes()


def test_exit_codes():
    usage = run("prune", "somewhere", "--ratio", "1.5", "--out", "x.json")
    assert usage.returncode == 1
    usage2 = run("prune")  # missing required args
    assert usage2.returncode == 1
    data = run("prune", "/definitely/not/a/bundle", "--out", "x.json")
    assert data.returncode == 2
    assert "error" in data.stderr


def test_golden_report(reference_bundle, tmp_path):
    report_path = tmp_path / "golden_candidate.json"
    proc = run("prune", reference_bundle, "--ratio", "0.5", "--alpha", "0.5",
               "--seed", "0", "--out", report_path)
    assert proc.returncode == 0
    assert report_path.read_bytes() == GOLDEN_REPORT.read_bytes()


def test_mask_roundtrip(reference_bundle, tmp_path):
    report_path = tmp_path / "report.json"
    run("prune", reference_bundle, "--ratio", "0", "--out", report_path)
    mask_path = tmp_path / "mask.pgm"
    proc = run("mask", reference_bundle, report_path, "--out", mask_path)
    assert proc.returncode == 0, proc.stderr
    img = read_pgm(mask_path)
    # 3 cols of 16x16 patch blocks with 1-px gutters
    assert img.shape[1] == 3 * 16 + 2
    interior = img[img != 128]
    assert np.all(interior == 255)  # everything kept


def test_mask_rejects_mismatched_report(reference_bundle, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"result": {"kept": [99999], "quotas": [], "K": 1}}))
    proc = run("mask", reference_bundle, bad, "--out", tmp_path / "m.pgm")
    assert proc.returncode == 2


def test_compare_outputs(reference_bundle, tmp_path):
    csv_path = tmp_path / "cmp.csv"
    json_path = tmp_path / "cmp.json"
    proc = run("compare", reference_bundle, "--ratio", "0.5", "--ratio", "0.9",
               "--seeds", "5", "--csv", csv_path, "--out", json_path)
    assert proc.returncode == 0, proc.stderr
    lines = csv_path.read_text().strip().splitlines()
    assert lines[0] == "strategy,ratio,K,jaccard_vs_ptp,score_mass_retained"
    assert len(lines) - 1 == 3 * 2  # strategies x ratios
    detail = json.loads(json_path.read_text())
    assert detail["ratios"]["0.5"]["ptp"]["jaccard"] == 1.0
    assert detail["ratios"]["0.5"]["K"] == 896


def test_compare_concentrated_ptp_beats_random(tmp_path):
    spec = {
        "grid": {"rows": 2, "cols": 2, "tokens_per_tile": 16},
        "d": 16,
        "hot_tiles": [0],
        "hot_patches": {str(t): [0, 9] for t in range(5)},
        "concentration": 1000.0,
        "query_len": 2,
        "instr_hot_patches": [0, 9, 16, 25],
        "seed": 99,
    }
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps(spec))
    bundle = tmp_path / "bundle"
    run("synth", spec_path, "--out", bundle)
    json_path = tmp_path / "cmp.json"
    proc = run("compare", bundle, "--ratio", "0.9", "--seeds", "100",
               "--out", json_path)
    assert proc.returncode == 0, proc.stderr
    detail = json.loads(json_path.read_text())["ratios"]["0.9"]
    assert detail["ptp"]["score_mass_a"] > detail["random"]["score_mass_mean"]


def test_plan_subcommand():
    proc = run("plan", "--image-w", "896", "--image-h", "448",
               "--max-tiles", "12", "--tile-px", "448", "--tokens-per-tile", "256")
    assert proc.returncode == 0, proc.stderr
    out = json.loads(proc.stdout)
    assert (out["rows"], out["cols"]) == (1, 2)
    assert out["total_tokens"] == 768
    bad = run("plan", "--image-w", "896", "--image-h", "448", "--max-tiles", "0")
    assert bad.returncode == 1


def test_flops_table_output():
    proc = run("flops", "--tokens", "1792", "179", "0")
    assert proc.returncode == 0
    lines = proc.stdout.strip().splitlines()
    assert lines[0] == "tokens, tflops, kv_cache_mb"
    assert lines[1] == "1792, 6.40, 336.0"
    assert lines[2] == "179, 0.58, 33.6"
    assert lines[3] == "0, 0.00, 0.0"


def test_flops_profile_via_env(tmp_path):
    profile = tmp_path / "p.json"
    profile.write_text(json.dumps({"layers": 1, "hidden": 1,
                                   "ffn_intermediate": 1, "kv_bytes_per_elem": 1}))
    import os

    env = dict(os.environ, PTP_PROFILE=str(profile))
    proc = run("flops", "--tokens", "1", env=env)
    assert proc.returncode == 0
    # 2*1*(4 + 2 + 3) = 18 FLOPs, 2 bytes of KV
    assert proc.stdout.strip().splitlines()[1] == "1, 0.00, 0.0"
