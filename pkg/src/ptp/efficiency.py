"""Analytic decoder cost model: FLOPs and KV-cache size vs. token count.

Counts a multiply-add as 2 FLOPs and covers only the visual-token prefill
through the decoder stack:

    flops(n) = 2 * layers * (4*n*d^2 + 2*n^2*d + 3*n*d*m)

with d the hidden width and m the FFN intermediate width (gate/up/down
projections). KV cache is 2 (K and V) * layers * d * bytes_per_elem per
token. The default profile is a 2B-class decoder: 24 layers, d=2048,
m=8192, fp16 cache.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
import json

MB = 2**20


@dataclass(frozen=True)
class LlmProfile:
    layers: int = 24
    hidden: int = 2048
    ffn_intermediate: int = 8192
    kv_bytes_per_elem: int = 2

    def __post_init__(self):
        for name in ("layers", "hidden", "ffn_intermediate", "kv_bytes_per_elem"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")

    def to_dict(self) -> dict:
        return {
            "layers": self.layers,
            "hidden": self.hidden,
            "ffn_intermediate": self.ffn_intermediate,
            "kv_bytes_per_elem": self.kv_bytes_per_elem,
        }

    @staticmethod
    def from_file(path: str | Path) -> "LlmProfile":
        obj = json.loads(Path(path).read_text())
        if not isinstance(obj, dict):
            raise ValueError("profile file must hold a JSON object")
        return LlmProfile(**{k: int(v) for k, v in obj.items()})


def flops(n: int, profile: LlmProfile = LlmProfile()) -> int:
    """Decoder FLOPs to prefill n visual tokens (exact integer count)."""
    if n < 0:
        raise ValueError("token count must be non-negative")
    d = profile.hidden
    m = profile.ffn_intermediate
    return 2 * profile.layers * (4 * n * d * d + 2 * n * n * d + 3 * n * d * m)


def tflops(n: int, profile: LlmProfile = LlmProfile()) -> float:
    return flops(n, profile) / 1e12


def kv_cache_bytes(n: int, profile: LlmProfile = LlmProfile()) -> int:
    """Bytes of K/V state stored for n tokens across all layers."""
    if n < 0:
        raise ValueError("token count must be non-negative")
    return 2 * profile.layers * profile.hidden * profile.kv_bytes_per_elem * n


def kv_cache_mb(n: int, profile: LlmProfile = LlmProfile()) -> float:
    return kv_cache_bytes(n, profile) / MB


@dataclass(frozen=True)
class EfficiencyReport:
    tokens: int
    tflops: float
    kv_cache_mb: float
    reduction_vs_baseline: dict | None = None

    def to_dict(self) -> dict:
        out = {
            "tokens": self.tokens,
            "tflops": self.tflops,
            "kv_cache_mb": self.kv_cache_mb,
        }
        if self.reduction_vs_baseline is not None:
            out["reduction_vs_baseline"] = dict(self.reduction_vs_baseline)
        return out


def efficiency_report(
    n: int, profile: LlmProfile = LlmProfile(), baseline_n: int | None = None
) -> EfficiencyReport:
    """Cost summary for n tokens, optionally with 1 - pruned/baseline fractions."""
    reduction = None
    if baseline_n is not None:
        if baseline_n < 1:
            raise ValueError("baseline token count must be positive")
        reduction = {
            "tokens": 1.0 - n / baseline_n,
            "tflops": 1.0 - flops(n, profile) / flops(baseline_n, profile),
            "kv_cache_mb": 1.0 - kv_cache_bytes(n, profile) / kv_cache_bytes(baseline_n, profile),
        }
    return EfficiencyReport(
        tokens=n,
        tflops=tflops(n, profile),
        kv_cache_mb=kv_cache_mb(n, profile),
        reduction_vs_baseline=reduction,
    )
