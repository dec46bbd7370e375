"""Minimal vision-language model with per-head attention capture.

``TinyVlm`` is a deterministic, seeded, randomly-initialized VLM used to
demonstrate end-to-end tensor capture offline: a ViT-style encoder with a
CLS token, a linear vision-language projector, and a small causal decoder.
Attention modules return their softmax weights and forward hooks collect
them per layer, which is exactly the capture path a wrapped production
model would use. Any torch model exposing the same three methods
(``encode_tiles``, ``project``, ``decode``) can be swapped in.
"""

from __future__ import annotations

import math
import re
import zlib
from dataclasses import dataclass

import torch
from torch import nn

TOKEN_RE = re.compile(r"\w+|[^\w\s]")


def tokenize(text: str, vocab_size: int = 512) -> list[int]:
    """Toy deterministic tokenizer: word/punct split, crc32 ids."""
    return [zlib.crc32(t.lower().encode()) % vocab_size for t in TOKEN_RE.findall(text)]


class Attention(nn.Module):
    """Multi-head self-attention that also returns its softmax weights."""

    def __init__(self, dim: int, heads: int, causal: bool):
        super().__init__()
        assert dim % heads == 0
        self.heads = heads
        self.causal = causal
        self.qkv = nn.Linear(dim, 3 * dim)
        self.proj = nn.Linear(dim, dim)

    def forward(self, x: torch.Tensor):
        b, s, d = x.shape
        hd = d // self.heads
        q, k, v = self.qkv(x).chunk(3, dim=-1)
        q = q.view(b, s, self.heads, hd).transpose(1, 2)
        k = k.view(b, s, self.heads, hd).transpose(1, 2)
        v = v.view(b, s, self.heads, hd).transpose(1, 2)
        logits = q @ k.transpose(-1, -2) / math.sqrt(hd)
        if self.causal:
            mask = torch.triu(torch.ones(s, s, dtype=torch.bool), diagonal=1)
            logits = logits.masked_fill(mask, float("-inf"))
        attn = logits.softmax(dim=-1)
        out = (attn @ v).transpose(1, 2).reshape(b, s, d)
        return self.proj(out), attn


class Block(nn.Module):
    def __init__(self, dim: int, heads: int, causal: bool):
        super().__init__()
        self.norm1 = nn.LayerNorm(dim)
        self.attn = Attention(dim, heads, causal)
        self.norm2 = nn.LayerNorm(dim)
        self.mlp = nn.Sequential(
            nn.Linear(dim, 4 * dim), nn.GELU(), nn.Linear(4 * dim, dim)
        )

    def forward(self, x: torch.Tensor):
        y, attn = self.attn(self.norm1(x))
        x = x + y
        x = x + self.mlp(self.norm2(x))
        return x, attn


class _AttnRecorder:
    """Forward hooks on every block, collecting per-layer attention."""

    def __init__(self, blocks: nn.ModuleList):
        self.maps: list[torch.Tensor] = []
        self._handles = [
            blk.register_forward_hook(self._grab) for blk in blocks
        ]

    def _grab(self, module, inputs, output):
        self.maps.append(output[1].detach())

    def close(self):
        for h in self._handles:
            h.remove()


@dataclass(frozen=True)
class TinyVlmConfig:
    vision_dim: int = 32
    vision_heads: int = 4
    vision_depth: int = 12
    llm_dim: int = 48
    llm_heads: int = 4
    llm_depth: int = 3
    patch_px: int = 16
    vocab_size: int = 512
    seed: int = 0


class TinyVlm(nn.Module):
    def __init__(self, config: TinyVlmConfig = TinyVlmConfig()):
        super().__init__()
        torch.manual_seed(config.seed)
        self.config = config
        c = config
        self.patch_embed = nn.Conv2d(3, c.vision_dim, c.patch_px, stride=c.patch_px)
        self.cls_token = nn.Parameter(torch.randn(1, 1, c.vision_dim))
        self.vision_blocks = nn.ModuleList(
            Block(c.vision_dim, c.vision_heads, causal=False)
            for _ in range(c.vision_depth)
        )
        self.projector = nn.Sequential(
            nn.Linear(c.vision_dim, c.llm_dim), nn.GELU(),
            nn.Linear(c.llm_dim, c.llm_dim),
        )
        self.token_embed = nn.Embedding(c.vocab_size, c.llm_dim)
        self.llm_blocks = nn.ModuleList(
            Block(c.llm_dim, c.llm_heads, causal=True) for _ in range(c.llm_depth)
        )
        self.eval()

    @property
    def vision_depth(self) -> int:
        return self.config.vision_depth

    @property
    def llm_depth(self) -> int:
        return self.config.llm_depth

    def tokenize(self, text: str) -> list[int]:
        return tokenize(text, self.config.vocab_size)

    @torch.no_grad()
    def encode_tiles(self, pixels: torch.Tensor):
        """Encode [B,3,H,W] tiles.

        Returns (cls [B,d], patches [B,N,d], attention maps per layer, each
        [B,heads,N+1,N+1]; CLS sits at sequence position 0).
        """
        x = self.patch_embed(pixels).flatten(2).transpose(1, 2)
        x = torch.cat([self.cls_token.expand(x.shape[0], -1, -1), x], dim=1)
        rec = _AttnRecorder(self.vision_blocks)
        try:
            for blk in self.vision_blocks:
                x, _ = blk(x)
        finally:
            rec.close()
        return x[:, 0], x[:, 1:], rec.maps

    @torch.no_grad()
    def project(self, patches: torch.Tensor) -> torch.Tensor:
        return self.projector(patches)

    @torch.no_grad()
    def decode(self, visual: torch.Tensor, token_ids: list[int]):
        """Run [T,d] visual tokens plus text ids through the decoder.

        Returns attention maps per block, each [heads, seq, seq], with the
        visual tokens occupying positions [0, T).
        """
        ids = torch.tensor(token_ids, dtype=torch.long)
        seq = torch.cat([visual, self.token_embed(ids)], dim=0).unsqueeze(0)
        rec = _AttnRecorder(self.llm_blocks)
        try:
            x = seq
            for blk in self.llm_blocks:
                x, _ = blk(x)
        finally:
            rec.close()
        return [m[0] for m in rec.maps]


def load_model(model_id: str) -> TinyVlm:
    """Resolve a model id; ``tiny-random[:seed]`` is the built-in model."""
    if model_id.startswith("tiny-random"):
        seed = 0
        if ":" in model_id:
            seed = int(model_id.split(":", 1)[1])
        return TinyVlm(TinyVlmConfig(seed=seed))
    raise ValueError(
        f"unknown model id {model_id!r}; this build ships 'tiny-random[:seed]'"
    )
