import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from ptp import top_down_scores


def test_singleton_reductions_are_identity():
    attn = np.array([[[0.2, 0.7, 0.1]]])  # one head, one instruction token
    out = top_down_scores(attn)
    assert np.array_equal(out.c, attn[0, 0])
    assert out.query_len == 1


def test_token_max_and_mean_examples():
    m = np.array([[[0.1, 0.5], [0.3, 0.2]]])  # one head, |Q|=2, T=2
    mx = top_down_scores(m, token_mode="max").c
    mean = top_down_scores(m, token_mode="mean").c
    assert mx == pytest.approx([0.3, 0.5])
    assert mean == pytest.approx([0.2, 0.35])


def test_no_instruction_tokens_rejected():
    with pytest.raises(ValueError, match="instruction"):
        top_down_scores(np.zeros((1, 0, 4)))


def test_negative_attention_rejected():
    with pytest.raises(ValueError, match="non-negative"):
        top_down_scores(np.array([[[0.1, -0.1]]]))


def test_heads_reduced_before_tokens():
    # heads differ per instruction token; mean over heads first, then max
    attn = np.array(
        [
            [[1.0, 0.0], [0.0, 0.2]],
            [[0.0, 0.4], [0.4, 0.2]],
        ]
    )  # [H=2, |Q|=2, T=2]
    out = top_down_scores(attn, token_mode="max", head_mode="mean")
    assert out.c == pytest.approx([0.5, 0.2])


attn_tensors = hnp.arrays(
    np.float64,
    st.tuples(st.integers(1, 3), st.integers(1, 5), st.integers(1, 8)),
    elements=st.floats(0, 100, allow_nan=False),
)


@given(attn=attn_tensors)
@settings(max_examples=150, deadline=None)
def test_mean_over_queries_bounded_by_max(attn):
    mx = top_down_scores(attn, token_mode="max").c
    mean = top_down_scores(attn, token_mode="mean").c
    assert np.all(mean <= mx * (1 + 1e-12) + 1e-300)


@given(attn=attn_tensors, seed=st.integers(0, 2**32 - 1))
@settings(max_examples=100, deadline=None)
def test_invariant_to_query_and_head_permutation(attn, seed):
    rng = np.random.default_rng(seed)
    hperm = rng.permutation(attn.shape[0])
    qperm = rng.permutation(attn.shape[1])
    for token_mode in ("max", "mean"):
        base = top_down_scores(attn, token_mode=token_mode).c
        shuffled = top_down_scores(attn[hperm][:, qperm], token_mode=token_mode).c
        assert shuffled == pytest.approx(base, rel=1e-12, abs=1e-300)


@given(attn=attn_tensors, row=st.integers(0, 4))
@settings(max_examples=100, deadline=None)
def test_duplicate_query_row_never_changes_max(attn, row):
    row = row % attn.shape[1]
    dup = np.concatenate([attn, attn[:, row : row + 1, :]], axis=1)
    base = top_down_scores(attn, token_mode="max").c
    extended = top_down_scores(dup, token_mode="max").c
    assert np.array_equal(base, extended)
