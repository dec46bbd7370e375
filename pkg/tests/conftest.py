import numpy as np
import pytest

from ptp import AttentionBundle, TileGrid


def random_bundle(
    rng: np.random.Generator,
    rows: int = 1,
    cols: int = 2,
    n: int = 8,
    d: int = 2,
    heads_vision: int = 1,
    heads_llm: int = 1,
    query_len: int = 1,
) -> AttentionBundle:
    """Random raw-signal bundle; d and head counts default small enough
    that the plain-Python oracle matches the engine bitwise."""
    s = rows * cols
    t = (s + 1) * n
    cls_global = rng.standard_normal(d).astype(np.float32)
    while np.all(cls_global == 0):
        cls_global = rng.standard_normal(d).astype(np.float32)
    cls_tile = rng.standard_normal((s, d)).astype(np.float32)
    zero_rows = np.all(cls_tile == 0, axis=1)
    cls_tile[zero_rows] = 1.0
    return AttentionBundle(
        cls_global=cls_global,
        cls_tile=cls_tile,
        attn_cls_patch=rng.random((s + 1, heads_vision, n)).astype(np.float32),
        attn_instr_visual=rng.random((heads_llm, query_len, t)).astype(np.float32),
        metadata={
            "model": "test",
            "vision_layer": "8",
            "grid_rows": str(rows),
            "grid_cols": str(cols),
            "tokens_per_tile": str(n),
        },
    )


@pytest.fixture
def reference_grid() -> TileGrid:
    """Six sub-images plus thumbnail at 256 tokens each: 1792 in total."""
    return TileGrid(rows=2, cols=3, tokens_per_tile=256)
