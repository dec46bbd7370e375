"""Top-down importance from LLM instruction-to-visual attention.

The exporter captures the dense attention matrix from every instruction
token to every visual token at an early decoder block (block 2 by default,
where cross-modal grounding shows up first). Heads are reduced first, then
the instruction-token axis: the default keeps the maximum attention any
instruction token pays to a visual token, the ``mean`` variant averages
over instruction tokens instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .saliency import HEAD_MODES

TOKEN_MODES = ("max", "mean")

DEFAULT_LLM_BLOCK = 2


@dataclass
class TopDownScores:
    """Per-token instruction relevance, aligned with the global token index."""

    c: np.ndarray
    query_len: int
    token_mode: str = "max"
    head_mode: str = "mean"
    llm_block: int = DEFAULT_LLM_BLOCK


def top_down_scores(
    attn_instr_visual: np.ndarray,
    token_mode: str = "max",
    head_mode: str = "mean",
    llm_block: int = DEFAULT_LLM_BLOCK,
) -> TopDownScores:
    """Reduce [H, |Q|, T] instruction-to-visual attention to one score per token."""
    if token_mode not in TOKEN_MODES:
        raise ValueError(f"token_mode must be one of {TOKEN_MODES}, got {token_mode!r}")
    if head_mode not in HEAD_MODES:
        raise ValueError(f"head_mode must be one of {HEAD_MODES}, got {head_mode!r}")
    attn = np.asarray(attn_instr_visual, dtype=np.float64)
    if attn.ndim != 3:
        raise ValueError(f"expected [H,|Q|,T] attention, got shape {attn.shape}")
    if attn.shape[1] < 1:
        raise ValueError("no instruction tokens: |Q| must be >= 1")
    if np.any(attn < 0.0):
        raise ValueError("attention weights must be non-negative")
    per_query = attn.mean(axis=0) if head_mode == "mean" else attn.max(axis=0)
    c = per_query.max(axis=0) if token_mode == "max" else per_query.mean(axis=0)
    return TopDownScores(
        c=c,
        query_len=attn.shape[1],
        token_mode=token_mode,
        head_mode=head_mode,
        llm_block=llm_block,
    )
