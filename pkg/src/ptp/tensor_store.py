"""Raw little-endian float32 tensor bundles with a JSON manifest.

A bundle is a directory holding ``manifest.json`` plus one headerless
binary file per tensor (row-major float32, little-endian). The format is
deliberately dumb so that any ML runtime can emit it without extra
dependencies:

    {"version": 1,
     "tensors": [{"name": "cls_global", "dtype": "f32", "shape": [64],
                  "file": "cls_global.bin", "layout": "row-major",
                  "byte_order": "LE"}],
     "metadata": {"model": "synthetic", "vision_layer": "8"}}

Only f32 payloads are supported; writers must downcast. Non-finite values
are rejected when a bundle is read, so downstream score math stays total.
"""

from __future__ import annotations

import json
import math
import os
import re
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MANIFEST_NAME = "manifest.json"
MANIFEST_VERSION = 1

_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_.\-]*$")


class BundleError(ValueError):
    """Malformed manifest, payload mismatch, or write-contract violation."""


@dataclass(frozen=True)
class TensorEntry:
    name: str
    shape: tuple[int, ...]
    file: str
    dtype: str = "f32"
    layout: str = "row-major"
    byte_order: str = "LE"

    @property
    def num_elements(self) -> int:
        return math.prod(self.shape)

    @property
    def nbytes(self) -> int:
        return 4 * self.num_elements

    def validate(self) -> None:
        if not isinstance(self.name, str) or not _NAME_RE.match(self.name):
            raise BundleError(f"invalid tensor name: {self.name!r}")
        if self.dtype != "f32":
            raise BundleError(f"tensor {self.name!r}: unknown dtype {self.dtype!r}")
        if self.layout != "row-major":
            raise BundleError(f"tensor {self.name!r}: unknown layout {self.layout!r}")
        if self.byte_order != "LE":
            raise BundleError(
                f"tensor {self.name!r}: unknown byte order {self.byte_order!r}"
            )
        if len(self.shape) == 0:
            raise BundleError(f"tensor {self.name!r}: empty shape")
        if any(not isinstance(d, int) or d < 1 for d in self.shape):
            raise BundleError(f"tensor {self.name!r}: bad shape {self.shape}")
        p = Path(self.file)
        if not self.file or p.is_absolute() or ".." in p.parts:
            raise BundleError(f"tensor {self.name!r}: bad file path {self.file!r}")


@dataclass
class TensorManifest:
    tensors: list[TensorEntry]
    metadata: dict[str, str] = field(default_factory=dict)
    version: int = MANIFEST_VERSION

    def validate(self) -> None:
        if self.version != MANIFEST_VERSION:
            raise BundleError(f"unsupported manifest version {self.version!r}")
        seen = set()
        for entry in self.tensors:
            entry.validate()
            if entry.name in seen:
                raise BundleError(f"duplicate tensor name: {entry.name!r}")
            seen.add(entry.name)
        for key, value in self.metadata.items():
            if not isinstance(key, str) or not isinstance(value, str):
                raise BundleError("metadata must map strings to strings")

    def entry(self, name: str) -> TensorEntry:
        for e in self.tensors:
            if e.name == name:
                return e
        raise KeyError(name)

    def names(self) -> list[str]:
        return [e.name for e in self.tensors]

    @staticmethod
    def for_tensors(
        arrays: dict[str, np.ndarray], metadata: dict[str, str] | None = None
    ) -> "TensorManifest":
        """Build a manifest describing ``arrays``, one ``<name>.bin`` file each."""
        entries = [
            TensorEntry(name=name, shape=tuple(np.shape(a)), file=f"{name}.bin")
            for name, a in arrays.items()
        ]
        return TensorManifest(tensors=entries, metadata=dict(metadata or {}))

    def to_json(self) -> dict:
        return {
            "version": self.version,
            "tensors": [
                {
                    "name": e.name,
                    "dtype": e.dtype,
                    "shape": list(e.shape),
                    "file": e.file,
                    "layout": e.layout,
                    "byte_order": e.byte_order,
                }
                for e in self.tensors
            ],
            "metadata": dict(self.metadata),
        }

    @staticmethod
    def from_json(obj: object) -> "TensorManifest":
        if not isinstance(obj, dict):
            raise BundleError("manifest root must be an object")
        for key in ("version", "tensors", "metadata"):
            if key not in obj:
                raise BundleError(f"manifest missing {key!r}")
        if not isinstance(obj["tensors"], list):
            raise BundleError("manifest 'tensors' must be a list")
        if not isinstance(obj["metadata"], dict):
            raise BundleError("manifest 'metadata' must be an object")
        entries = []
        for raw in obj["tensors"]:
            if not isinstance(raw, dict):
                raise BundleError("tensor entry must be an object")
            missing = {"name", "dtype", "shape", "file"} - raw.keys()
            if missing:
                raise BundleError(f"tensor entry missing {sorted(missing)}")
            if not isinstance(raw["shape"], list):
                raise BundleError("tensor shape must be a list")
            entries.append(
                TensorEntry(
                    name=raw["name"],
                    shape=tuple(raw["shape"]),
                    file=raw["file"],
                    dtype=raw["dtype"],
                    layout=raw.get("layout", "row-major"),
                    byte_order=raw.get("byte_order", "LE"),
                )
            )
        manifest = TensorManifest(
            tensors=entries,
            metadata=dict(obj["metadata"]),
            version=obj["version"],
        )
        manifest.validate()
        return manifest


def _write_atomic(path: Path, data: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_bundle(
    manifest: TensorManifest, tensors: dict[str, np.ndarray], dir: str | Path
) -> None:
    """Write ``manifest.json`` plus one raw f32 file per manifest entry.

    Every manifest entry must have a matching array in ``tensors`` whose
    element count equals the product of the declared shape. Files are
    written atomically; the manifest is written last so a partial bundle
    never parses as valid.
    """
    manifest.validate()
    declared = set(manifest.names())
    extra = set(tensors) - declared
    if extra:
        raise BundleError(f"arrays not declared in manifest: {sorted(extra)}")
    out = Path(dir)
    out.mkdir(parents=True, exist_ok=True)
    for entry in manifest.tensors:
        if entry.name not in tensors:
            raise BundleError(f"missing array for tensor {entry.name!r}")
        arr = np.asarray(tensors[entry.name], dtype=np.float32)
        if arr.size != entry.num_elements:
            raise BundleError(
                f"tensor {entry.name!r}: {arr.size} elements, "
                f"shape {entry.shape} needs {entry.num_elements}"
            )
        payload = np.ascontiguousarray(arr).astype("<f4", copy=False)
        _write_atomic(out / entry.file, payload.tobytes())
    _write_atomic(
        out / MANIFEST_NAME,
        json.dumps(manifest.to_json(), indent=2, sort_keys=True).encode(),
    )


def read_bundle(dir: str | Path) -> tuple[TensorManifest, dict[str, np.ndarray]]:
    """Read a bundle directory back into (manifest, name -> float32 array).

    Rejects malformed manifests, payload files whose byte length differs
    from the declared shape, and non-finite payload values.
    """
    root = Path(dir)
    manifest_path = root / MANIFEST_NAME
    if not manifest_path.is_file():
        raise BundleError(f"no {MANIFEST_NAME} in {root}")
    try:
        raw = json.loads(manifest_path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise BundleError(f"unreadable manifest: {exc}") from exc
    manifest = TensorManifest.from_json(raw)

    arrays: dict[str, np.ndarray] = {}
    for entry in manifest.tensors:
        path = root / entry.file
        if not path.is_file():
            raise BundleError(f"tensor {entry.name!r}: missing file {entry.file}")
        data = path.read_bytes()
        if len(data) != entry.nbytes:
            raise BundleError(
                f"tensor {entry.name!r}: file has {len(data)} bytes, "
                f"expected {entry.nbytes}"
            )
        arr = np.frombuffer(data, dtype="<f4").reshape(entry.shape)
        arr = arr.astype(np.float32, copy=True)
        if not np.all(np.isfinite(arr)):
            raise BundleError(f"tensor {entry.name!r}: non-finite values")
        arr.setflags(write=False)
        arrays[entry.name] = arr
    return manifest, arrays
