"""Typed view over the four tensors the pruning engine consumes.

Required tensor names and shapes (S sub-images, thumbnail appended):

    cls_global        [d]            whole-image CLS embedding
    cls_tile          [S, d]         per-tile CLS embeddings
    attn_cls_patch    [S+1, H_v, N]  per-head CLS-to-patch rows at the
                                     configured vision layer, tiles then
                                     thumbnail
    attn_instr_visual [H_l, |Q|, T]  instruction-to-visual attention at the
                                     configured LLM block

Metadata must carry ``vision_layer`` (the engine takes no side on a default
layer) and the grid geometry; ``llm_block`` defaults to 2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .tensor_store import BundleError, TensorManifest, read_bundle, write_bundle
from .tiling import TileGrid

REQUIRED_TENSORS = ("cls_global", "cls_tile", "attn_cls_patch", "attn_instr_visual")

DEFAULT_LLM_BLOCK = 2


@dataclass
class AttentionBundle:
    cls_global: np.ndarray
    cls_tile: np.ndarray
    attn_cls_patch: np.ndarray
    attn_instr_visual: np.ndarray
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        self.validate()

    # dimension shorthands
    @property
    def embed_dim(self) -> int:
        return self.cls_global.shape[0]

    @property
    def num_tiles(self) -> int:
        return self.cls_tile.shape[0]

    @property
    def tokens_per_tile(self) -> int:
        return self.attn_cls_patch.shape[2]

    @property
    def total_tokens(self) -> int:
        return self.attn_instr_visual.shape[2]

    @property
    def query_len(self) -> int:
        return self.attn_instr_visual.shape[1]

    def validate(self) -> None:
        if self.cls_global.ndim != 1:
            raise BundleError(f"cls_global must be [d], got {self.cls_global.shape}")
        if self.cls_tile.ndim != 2 or self.cls_tile.shape[1] != self.embed_dim:
            raise BundleError(
                f"cls_tile must be [S,{self.embed_dim}], got {self.cls_tile.shape}"
            )
        if self.attn_cls_patch.ndim != 3:
            raise BundleError(
                f"attn_cls_patch must be [S+1,H,N], got {self.attn_cls_patch.shape}"
            )
        if self.attn_cls_patch.shape[0] != self.num_tiles + 1:
            raise BundleError(
                f"attn_cls_patch has {self.attn_cls_patch.shape[0]} regions, "
                f"expected {self.num_tiles + 1} (tiles plus thumbnail)"
            )
        if self.attn_instr_visual.ndim != 3:
            raise BundleError(
                f"attn_instr_visual must be [H,|Q|,T], "
                f"got {self.attn_instr_visual.shape}"
            )
        expected_total = (self.num_tiles + 1) * self.tokens_per_tile
        if self.total_tokens != expected_total:
            raise BundleError(
                f"attn_instr_visual covers {self.total_tokens} tokens, "
                f"expected {expected_total}"
            )
        if self.query_len < 1:
            raise BundleError("attn_instr_visual has no instruction rows")

    # metadata accessors
    @property
    def vision_layer(self) -> int:
        if "vision_layer" not in self.metadata:
            raise BundleError("bundle metadata missing required 'vision_layer'")
        return int(self.metadata["vision_layer"])

    @property
    def llm_block(self) -> int:
        return int(self.metadata.get("llm_block", DEFAULT_LLM_BLOCK))

    def grid(self) -> TileGrid:
        """Rebuild the tile grid from metadata, cross-checked against shapes."""
        s = self.num_tiles
        rows = int(self.metadata.get("grid_rows", 1))
        cols = int(self.metadata.get("grid_cols", s))
        grid = TileGrid(
            rows=rows,
            cols=cols,
            tile_px=int(self.metadata.get("tile_px", 448)),
            tokens_per_tile=self.tokens_per_tile,
            has_thumbnail=True,
        )
        self.check_grid(grid)
        return grid

    def check_grid(self, grid: TileGrid) -> None:
        if not grid.has_thumbnail:
            raise BundleError("bundles always carry a thumbnail region")
        if grid.num_tiles != self.num_tiles:
            raise BundleError(
                f"grid has {grid.num_tiles} tiles, bundle has {self.num_tiles}"
            )
        if grid.tokens_per_tile != self.tokens_per_tile:
            raise BundleError(
                f"grid tokens_per_tile {grid.tokens_per_tile} != "
                f"bundle {self.tokens_per_tile}"
            )

    def tensors(self) -> dict[str, np.ndarray]:
        return {
            "cls_global": self.cls_global,
            "cls_tile": self.cls_tile,
            "attn_cls_patch": self.attn_cls_patch,
            "attn_instr_visual": self.attn_instr_visual,
        }

    def save(self, dir: str | Path) -> None:
        arrays = {
            name: np.asarray(a, dtype=np.float32) for name, a in self.tensors().items()
        }
        manifest = TensorManifest.for_tensors(arrays, metadata=self.metadata)
        write_bundle(manifest, arrays, dir)

    @staticmethod
    def load(dir: str | Path) -> "AttentionBundle":
        manifest, arrays = read_bundle(dir)
        missing = [n for n in REQUIRED_TENSORS if n not in arrays]
        if missing:
            raise BundleError(f"bundle missing required tensors: {missing}")
        bundle = AttentionBundle(
            cls_global=arrays["cls_global"],
            cls_tile=arrays["cls_tile"],
            attn_cls_patch=arrays["attn_cls_patch"],
            attn_instr_visual=arrays["attn_instr_visual"],
            metadata=dict(manifest.metadata),
        )
        if np.any(bundle.attn_cls_patch < 0) or np.any(bundle.attn_instr_visual < 0):
            raise BundleError("attention tensors must be non-negative")
        return bundle
