"""Masked multi-head scaled dot-product attention over sparse rows.

The sparse forward pass gathers only the keys a mask row allows; the
dense oracle materializes the full score matrix and masks with -inf
before the softmax.  Both paths must agree to float precision, and the
hand-written backward pass is checked against central finite
differences.  Embeddings are synthetic (seeded Gaussian): the mechanism
is under test here, not learned weights.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .masks import SparseMaskSet


@dataclass
class EmbeddingBlock:
    """Per-head query/key/value activations, shape (heads, tokens, head_dim)."""

    queries: np.ndarray
    keys: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        q, k, v = (np.asarray(a, dtype=np.float64) for a in (self.queries, self.keys, self.values))
        if q.ndim != 3 or q.shape != k.shape or q.shape != v.shape:
            raise ValueError("queries, keys, values must share shape (heads, tokens, head_dim)")
        if not (np.isfinite(q).all() and np.isfinite(k).all() and np.isfinite(v).all()):
            raise ValueError("embeddings must be finite")
        self.queries, self.keys, self.values = q, k, v

    @property
    def heads(self) -> int:
        return self.queries.shape[0]

    @property
    def tokens(self) -> int:
        return self.queries.shape[1]

    @property
    def head_dim(self) -> int:
        return self.queries.shape[2]

    @property
    def model_dim(self) -> int:
        return self.heads * self.head_dim

    @classmethod
    def random(cls, tokens: int, model_dim: int, heads: int, seed: int = 0) -> "EmbeddingBlock":
        """Seeded standard-normal embeddings with model_dim split across heads."""
        if model_dim % heads:
            raise ValueError("model_dim must be divisible by the head count")
        rng = np.random.default_rng(seed)
        shape = (heads, tokens, model_dim // heads)
        return cls(rng.standard_normal(shape), rng.standard_normal(shape), rng.standard_normal(shape))


@dataclass
class AttentionResult:
    output: np.ndarray  # (tokens, model_dim), head outputs concatenated
    empty_rows: list[tuple[int, int]] = field(default_factory=list)  # (head, query)
    weights: list[np.ndarray] | None = None  # per head: (tokens, pad_width)
    weight_masks: list[np.ndarray] | None = None

    @property
    def empty_row_count(self) -> int:
        return len(self.empty_rows)


def _padded_rows(masks: SparseMaskSet, head: int):
    """Pack a head's CSR rows into (tokens, width) index + validity arrays."""
    indptr, indices = masks.head_csr(head)
    lengths = np.diff(indptr)
    width = max(1, int(lengths.max()) if lengths.size else 1)
    tokens = masks.tokens
    idx = np.zeros((tokens, width), dtype=np.int64)
    valid = np.arange(width)[None, :] < lengths[:, None]
    idx[valid] = indices
    return idx, valid


def _check_block(block: EmbeddingBlock, masks: SparseMaskSet) -> None:
    if block.tokens != masks.tokens:
        raise ValueError(
            f"block has {block.tokens} tokens but masks cover {masks.tokens}"
        )
    if block.heads != masks.head_count:
        raise ValueError(
            f"block has {block.heads} heads but masks define {masks.head_count}"
        )


def _head_forward(block, idx, valid, head):
    """One head's gathered scores -> softmax weights -> outputs."""
    q = block.queries[head]
    k_rows = block.keys[head][idx]
    v_rows = block.values[head][idx]
    scale = 1.0 / np.sqrt(block.head_dim)
    scores = np.einsum("td,twd->tw", q, k_rows) * scale
    scores = np.where(valid, scores, -np.inf)
    nonempty = valid.any(axis=1)
    row_max = np.where(nonempty, scores.max(axis=1), 0.0)
    weights = np.exp(scores - row_max[:, None])  # exp(-inf) = 0 on padding
    denom = weights.sum(axis=1)
    weights = weights / np.where(nonempty, denom, 1.0)[:, None]
    out = np.einsum("tw,twd->td", weights, v_rows)
    return out, weights, v_rows, nonempty


def sparse_attention_forward(
    block: EmbeddingBlock, masks: SparseMaskSet, keep_weights: bool = False
) -> AttentionResult:
    """Masked attention restricted to each query's sparse key row.

    Softmax weights sum to 1 over every non-empty row; a query whose
    row is empty gets a zero head output and is recorded in
    `empty_rows` (legal for Doppler-aware masks, where the head union
    still covers the query).
    """
    _check_block(block, masks)
    outputs = []
    empty: list[tuple[int, int]] = []
    kept_w, kept_m = [], []
    for h in range(block.heads):
        idx, valid = _padded_rows(masks, h)
        out, weights, _, nonempty = _head_forward(block, idx, valid, h)
        for i in np.flatnonzero(~nonempty):
            empty.append((h, int(i)))
        outputs.append(out)
        if keep_weights:
            kept_w.append(weights)
            kept_m.append(valid)
    result = AttentionResult(np.concatenate(outputs, axis=1), empty)
    if keep_weights:
        result.weights, result.weight_masks = kept_w, kept_m
    return result


def dense_masked_oracle(block: EmbeddingBlock, masks: SparseMaskSet) -> AttentionResult:
    """Reference path: full TxT scores with -inf on disallowed entries.

    Kept deliberately independent of the gathered sparse path so the two
    can cross-check each other.
    """
    _check_block(block, masks)
    tokens = block.tokens
    scale = 1.0 / np.sqrt(block.head_dim)
    outputs = []
    empty: list[tuple[int, int]] = []
    for h in range(block.heads):
        allowed = np.zeros((tokens, tokens), dtype=bool)
        for i in range(tokens):
            allowed[i, masks.row(h, i)] = True
        scores = block.queries[h] @ block.keys[h].T * scale
        scores[~allowed] = -np.inf
        nonempty = allowed.any(axis=1)
        for i in np.flatnonzero(~nonempty):
            empty.append((h, int(i)))
        row_max = np.where(nonempty, scores.max(axis=1), 0.0)
        expd = np.exp(scores - row_max[:, None])
        expd[~allowed] = 0.0
        denom = expd.sum(axis=1)
        weights = np.where(nonempty[:, None], expd / np.where(nonempty, denom, 1.0)[:, None], 0.0)
        outputs.append(weights @ block.values[h])
    return AttentionResult(np.concatenate(outputs, axis=1), empty)


def _loss_and_gradients(block: EmbeddingBlock, masks: SparseMaskSet):
    """Sum-of-squares loss of the sparse forward plus hand-derived
    gradients w.r.t. every Q/K/V entry."""
    _check_block(block, masks)
    scale = 1.0 / np.sqrt(block.head_dim)
    d_q = np.zeros_like(block.queries)
    d_k = np.zeros_like(block.keys)
    d_v = np.zeros_like(block.values)
    loss = 0.0
    for h in range(block.heads):
        idx, valid = _padded_rows(masks, h)
        out, weights, v_rows, _ = _head_forward(block, idx, valid, h)
        loss += float((out**2).sum())
        g = 2.0 * out  # d loss / d out
        # values: each attended v_j collects weight * upstream gradient
        np.add.at(d_v[h], idx[valid], (weights[..., None] * g[:, None, :])[valid])
        # softmax backward: ds = w * (a - sum_j w_j a_j), a = g . v_j
        a = np.einsum("td,twd->tw", g, v_rows)
        b = (weights * a).sum(axis=1, keepdims=True)
        ds = weights * (a - b)
        ds[~valid] = 0.0
        d_q[h] += np.einsum("tw,twd->td", ds, block.keys[h][idx]) * scale
        np.add.at(d_k[h], idx[valid], (ds[..., None] * block.queries[h][:, None, :] * scale)[valid])
    return loss, d_q, d_k, d_v


def gradient_check(block: EmbeddingBlock, masks: SparseMaskSet, step: float = 1e-5) -> float:
    """Max relative error between backprop and central-difference
    gradients of the sum-of-squares output loss.

    Relative error uses max(|analytic|, |numeric|, 1e-8) as denominator.
    Intended for desk-scale blocks (tokens <= 64, model_dim <= 16).
    """
    _, d_q, d_k, d_v = _loss_and_gradients(block, masks)

    def loss_of(q, k, v):
        trial = EmbeddingBlock(q, k, v)
        out = sparse_attention_forward(trial, masks).output
        return float((out**2).sum())

    worst = 0.0
    arrays = (block.queries, block.keys, block.values)
    grads = (d_q, d_k, d_v)
    for which, (arr, grad) in enumerate(zip(arrays, grads)):
        flat = arr.ravel()
        for pos in range(flat.size):
            orig = flat[pos]
            flat[pos] = orig + step
            up = loss_of(*arrays)
            flat[pos] = orig - step
            down = loss_of(*arrays)
            flat[pos] = orig
            numeric = (up - down) / (2.0 * step)
            analytic = grad.ravel()[pos]
            denom = max(abs(analytic), abs(numeric), 1e-8)
            worst = max(worst, abs(analytic - numeric) / denom)
    return worst


@dataclass
class HistogramReport:
    """Per-head histogram of attended-key counts per query."""

    per_head: list[dict[int, int]]
    samples: int
    total_queries: int

    def to_rows(self) -> list[tuple[int, int, int]]:
        rows = []
        for h, counter in enumerate(self.per_head):
            for length in sorted(counter):
                rows.append((h, length, counter[length]))
        return rows


def attended_keys_histogram(masks: SparseMaskSet, samples: int = 1) -> HistogramReport:
    """Histogram of row lengths per head, replicated `samples` times to
    mirror batched accounting (each sample contributes every query once)."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    per_head = []
    for h in range(masks.head_count):
        counts = Counter(int(n) for n in masks.row_lengths(h))
        per_head.append({length: samples * n for length, n in sorted(counts.items())})
    return HistogramReport(per_head=per_head, samples=samples, total_queries=samples * masks.tokens)
