"""Tile an image, run the model, and capture the four engine tensors.

The exporter stores per-head attention and leaves all aggregation to the
pruning engine, so head-mode ablations run without re-export. The CLS
self-attention column is dropped from the CLS row before writing, which is
why per-head patch rows sum to slightly less than 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from PIL import Image

from .model import TinyVlm, load_model
from .writer import write_engine_bundle


@dataclass(frozen=True)
class CaptureConfig:
    model_id: str = "tiny-random"
    vision_layer: int = 8  # 0-based encoder block index
    llm_block: int = 2  # 1-based decoder block index
    include_system_prompt: bool = False
    system_prompt: str = "You are a helpful assistant."
    max_tiles: int = 12
    tile_px: int = 64
    ratio_seed: int = 0


def plan_tiling(w: int, h: int, max_tiles: int) -> tuple[int, int]:
    """Grid whose aspect best matches the image; ties to the smallest grid."""
    w, h = max(1, w), max(1, h)
    target = math.log(w / h)
    best = None
    pick = (1, 1)
    for rows in range(1, max_tiles + 1):
        for cols in range(1, max_tiles // rows + 1):
            key = (abs(math.log(cols / rows) - target), rows * cols, rows)
            if best is None or key < best:
                best, pick = key, (rows, cols)
    return pick


def _to_tensor(img: Image.Image) -> torch.Tensor:
    arr = np.asarray(img.convert("RGB"), dtype=np.float32) / 255.0
    return torch.from_numpy(arr).permute(2, 0, 1)


def tile_image(img: Image.Image, rows: int, cols: int, tile_px: int) -> torch.Tensor:
    """[S+1, 3, tile_px, tile_px]: row-major crops plus the thumbnail."""
    resized = img.convert("RGB").resize((cols * tile_px, rows * tile_px))
    tiles = []
    for r in range(rows):
        for c in range(cols):
            box = (c * tile_px, r * tile_px, (c + 1) * tile_px, (r + 1) * tile_px)
            tiles.append(_to_tensor(resized.crop(box)))
    tiles.append(_to_tensor(img.resize((tile_px, tile_px))))
    return torch.stack(tiles)


def export(
    image_path: str | Path,
    instruction: str,
    config: CaptureConfig,
    out_dir: str | Path,
    model: TinyVlm | None = None,
) -> Path:
    """Capture tensors for one (image, instruction) pair and write a bundle."""
    model = model if model is not None else load_model(config.model_id)
    if not 0 <= config.vision_layer < model.vision_depth:
        raise ValueError(
            f"vision_layer {config.vision_layer} outside encoder depth "
            f"{model.vision_depth}"
        )
    if not 1 <= config.llm_block <= model.llm_depth:
        raise ValueError(
            f"llm_block {config.llm_block} outside decoder depth {model.llm_depth}"
        )
    if config.tile_px % model.config.patch_px != 0:
        raise ValueError("tile_px must be a multiple of the model patch size")

    img = Image.open(image_path)
    rows, cols = plan_tiling(img.width, img.height, config.max_tiles)
    pixels = tile_image(img, rows, cols, config.tile_px)
    s = rows * cols
    n = (config.tile_px // model.config.patch_px) ** 2
    t = (s + 1) * n

    cls, patches, vision_maps = model.encode_tiles(pixels)
    layer_attn = vision_maps[config.vision_layer]  # [S+1, H, N+1, N+1]
    attn_cls_patch = layer_attn[:, :, 0, 1:]  # CLS row, self column dropped

    visual = model.project(patches).reshape(t, -1)
    user_ids = model.tokenize(instruction)
    if not user_ids:
        raise ValueError("instruction produced no tokens")
    system_ids = model.tokenize(config.system_prompt)
    token_ids = system_ids + user_ids
    llm_maps = model.decode(visual, token_ids)
    block_attn = llm_maps[config.llm_block - 1]  # [H, seq, seq]

    q_start = t if config.include_system_prompt else t + len(system_ids)
    attn_instr_visual = block_attn[:, q_start:, :t]
    query_len = attn_instr_visual.shape[1]

    tensors = {
        "cls_global": cls[s].numpy(),
        "cls_tile": cls[:s].numpy(),
        "attn_cls_patch": attn_cls_patch.numpy(),
        "attn_instr_visual": attn_instr_visual.numpy(),
    }
    _check_shapes(tensors, s=s, n=n, t=t, query_len=query_len)

    metadata = {
        "model": config.model_id,
        "vision_layer": str(config.vision_layer),
        "llm_block": str(config.llm_block),
        "grid_rows": str(rows),
        "grid_cols": str(cols),
        "tile_px": str(config.tile_px),
        "tokens_per_tile": str(n),
        "query_len": str(query_len),
        "visual_token_span": f"0:{t}",
        "include_system_prompt": str(config.include_system_prompt).lower(),
        "image_size": f"{img.width}x{img.height}",
    }
    return write_engine_bundle(tensors, metadata, out_dir)


def _check_shapes(tensors: dict, s: int, n: int, t: int, query_len: int) -> None:
    """Abort before any file is written if the contract is off."""
    d = tensors["cls_global"].shape
    expect = {
        "cls_global": d,
        "cls_tile": (s,) + d,
        "attn_cls_patch": (s + 1, tensors["attn_cls_patch"].shape[1], n),
        "attn_instr_visual": (tensors["attn_instr_visual"].shape[0], query_len, t),
    }
    for name, shape in expect.items():
        if tensors[name].shape != shape:
            raise ValueError(
                f"captured {name} has shape {tensors[name].shape}, expected {shape}"
            )
    if query_len < 1:
        raise ValueError("no instruction rows captured")
    for name in ("attn_cls_patch", "attn_instr_visual"):
        if np.any(tensors[name] < 0):
            raise ValueError(f"{name} contains negative attention weights")
