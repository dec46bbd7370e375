"""Binary PGM (P5) mask overlays: one pixel per patch, 1-px tile gutters.

Tiles are laid out in grid order with their sqrt(N) x sqrt(N) patch blocks
separated by gutter pixels; the thumbnail block, when present, sits below
the grid after one gutter row, left-aligned. Kept patches render white,
pruned black, gutters mid-gray. PGM needs no image library and makes
bit-exact golden files trivial.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .tensor_store import _write_atomic
from .tiling import TileGrid

KEPT = 255
PRUNED = 0
GUTTER = 128


def render_mask(mask: np.ndarray, grid: TileGrid) -> np.ndarray:
    """Rasterize a boolean keep-mask of length T into a uint8 image."""
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (grid.total_tokens,):
        raise ValueError(
            f"mask length {mask.shape} does not match grid tokens {grid.total_tokens}"
        )
    n = grid.tokens_per_tile
    p = math.isqrt(n)
    if p * p != n:
        raise ValueError(f"tokens_per_tile {n} is not a square patch grid")

    width = grid.cols * p + (grid.cols - 1)
    height = grid.rows * p + (grid.rows - 1)
    if grid.has_thumbnail:
        height += 1 + p
    img = np.full((height, width), GUTTER, dtype=np.uint8)

    def blit(tile: int, top: int, left: int) -> None:
        block = mask[tile * n : (tile + 1) * n].reshape(p, p)
        img[top : top + p, left : left + p] = np.where(block, KEPT, PRUNED)

    for r in range(grid.rows):
        for c in range(grid.cols):
            blit(r * grid.cols + c, r * (p + 1), c * (p + 1))
    if grid.has_thumbnail:
        blit(grid.num_tiles, grid.rows * (p + 1), 0)
    return img


def write_pgm(img: np.ndarray, path: str | Path) -> None:
    img = np.asarray(img, dtype=np.uint8)
    if img.ndim != 2:
        raise ValueError("PGM image must be 2-D")
    h, w = img.shape
    header = f"P5\n{w} {h}\n255\n".encode()
    _write_atomic(Path(path), header + img.tobytes())


def read_pgm(path: str | Path) -> np.ndarray:
    data = Path(path).read_bytes()
    if not data.startswith(b"P5"):
        raise ValueError("not a binary PGM (P5) file")
    fields: list[bytes] = []
    pos = 2
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":  # comment line
            pos = data.index(b"\n", pos) + 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        fields.append(data[start:pos])
    pos += 1  # single whitespace after maxval
    w, h, maxval = (int(f) for f in fields)
    if maxval != 255:
        raise ValueError(f"unsupported maxval {maxval}")
    pixels = np.frombuffer(data, dtype=np.uint8, count=w * h, offset=pos)
    return pixels.reshape(h, w).copy()
