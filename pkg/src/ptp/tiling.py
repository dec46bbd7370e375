"""Sub-image grid geometry and the global visual-token index space.

A high-resolution input is covered by an ``rows x cols`` grid of fixed-size
tiles plus (by default) one downsampled whole-image thumbnail appended after
the sub-images. Each tile contributes ``tokens_per_tile`` visual tokens, so
token ``(tile, patch)`` lives at global index ``tile * N + patch``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class TileGrid:
    rows: int
    cols: int
    tile_px: int = 448
    tokens_per_tile: int = 256
    has_thumbnail: bool = True

    def __post_init__(self):
        for name in ("rows", "cols", "tile_px", "tokens_per_tile"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")

    @property
    def num_tiles(self) -> int:
        """Sub-image count, excluding the thumbnail."""
        return self.rows * self.cols

    @property
    def num_regions(self) -> int:
        """Sub-images plus the thumbnail slot when present."""
        return self.num_tiles + (1 if self.has_thumbnail else 0)

    @property
    def total_tokens(self) -> int:
        return self.num_regions * self.tokens_per_tile

    @property
    def thumbnail_index(self) -> int | None:
        return self.num_tiles if self.has_thumbnail else None


@dataclass(frozen=True)
class TokenAddress:
    tile_index: int
    patch_index: int


def plan_grid(
    image_w: int,
    image_h: int,
    max_tiles: int,
    tile_px: int = 448,
    tokens_per_tile: int = 256,
) -> TileGrid:
    """Pick the tile grid whose aspect ratio best matches the image.

    Enumerates every (rows, cols) with rows*cols <= max_tiles and minimizes
    the log-aspect distance |log(cols/rows) - log(w/h)|. Ties go to the
    smallest grid, then the smaller row count, so a 2:1 image maps to 1x2
    rather than 2x4. Degenerate dimensions clamp to a 1x1 grid.
    """
    image_w = max(1, int(image_w))
    image_h = max(1, int(image_h))
    max_tiles = max(1, int(max_tiles))
    target = math.log(image_w / image_h)

    best: tuple[float, int, int] | None = None
    best_grid = (1, 1)
    for rows in range(1, max_tiles + 1):
        for cols in range(1, max_tiles // rows + 1):
            dist = abs(math.log(cols / rows) - target)
            key = (dist, rows * cols, rows)
            if best is None or key < best:
                best = key
                best_grid = (rows, cols)
    return TileGrid(
        rows=best_grid[0],
        cols=best_grid[1],
        tile_px=tile_px,
        tokens_per_tile=tokens_per_tile,
    )


def global_index(addr: TokenAddress, grid: TileGrid) -> int:
    if not 0 <= addr.tile_index < grid.num_regions:
        raise IndexError(f"tile index {addr.tile_index} out of range")
    if not 0 <= addr.patch_index < grid.tokens_per_tile:
        raise IndexError(f"patch index {addr.patch_index} out of range")
    return addr.tile_index * grid.tokens_per_tile + addr.patch_index


def address_of(index: int, grid: TileGrid) -> TokenAddress:
    if not 0 <= index < grid.total_tokens:
        raise IndexError(f"token index {index} out of range")
    n = grid.tokens_per_tile
    return TokenAddress(tile_index=index // n, patch_index=index % n)
