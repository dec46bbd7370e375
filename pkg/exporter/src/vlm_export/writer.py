"""Writer for the pruning engine's bundle format.

The format is the engine's public interchange contract: a ``manifest.json``
plus one headerless row-major little-endian float32 file per tensor. This
module implements the schema independently so the exporter has no runtime
dependency on the engine package.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

MANIFEST_NAME = "manifest.json"


def write_engine_bundle(
    tensors: dict[str, np.ndarray], metadata: dict[str, str], out_dir: str | Path
) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for name, arr in tensors.items():
        arr = np.ascontiguousarray(np.asarray(arr, dtype=np.float32))
        if arr.ndim == 0 or any(d < 1 for d in arr.shape):
            raise ValueError(f"tensor {name!r} has invalid shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"tensor {name!r} contains non-finite values")
        filename = f"{name}.bin"
        (out / filename).write_bytes(arr.astype("<f4", copy=False).tobytes())
        entries.append(
            {
                "name": name,
                "dtype": "f32",
                "shape": list(arr.shape),
                "file": filename,
                "layout": "row-major",
                "byte_order": "LE",
            }
        )
    manifest = {"version": 1, "tensors": entries, "metadata": dict(metadata)}
    (out / MANIFEST_NAME).write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return out
