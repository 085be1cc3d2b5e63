"""Scaled dot-product attention, multi-head wiring, windowed (restricted)
self-attention, the encoder feed-forward block, and analytic gradients for
the verification harness."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import (
    COUNT_ATTENTION_SCORES,
    MultiplyLedger,
    as_matrix,
    concat_feature,
    relu,
    row_softmax,
)


@dataclass(frozen=True)
class RestrictionWindow:
    """Look-back/look-ahead frame counts around each query frame."""

    look_back: int
    look_ahead: int

    def __post_init__(self):
        if self.look_back < 0 or self.look_ahead < 0:
            raise ValueError(
                f"window counts must be non-negative, got "
                f"({self.look_back}, {self.look_ahead})")

    @property
    def size(self) -> int:
        return self.look_back + self.look_ahead + 1

    def bounds(self, n: int, n_frames: int) -> tuple[int, int]:
        """Half-open frame range visible to query ``n``, clipped at the edges."""
        return max(0, n - self.look_back), min(n_frames, n + self.look_ahead + 1)

    def covers(self, n_frames: int) -> bool:
        return self.look_back >= n_frames - 1 and self.look_ahead >= n_frames - 1


@dataclass(frozen=True, eq=False)
class HeadParams:
    """Projection matrices for one attention head."""

    w_q: np.ndarray
    w_k: np.ndarray
    w_v: np.ndarray

    def __post_init__(self):
        for name in ("w_q", "w_k", "w_v"):
            object.__setattr__(self, name, as_matrix(getattr(self, name), name))
        if self.w_q.shape[0] != self.w_k.shape[0] or self.w_q.shape[0] != self.w_v.shape[0]:
            raise ValueError("head projections disagree on input dimension")
        if self.w_q.shape[1] != self.w_k.shape[1]:
            raise ValueError(
                f"query dim {self.w_q.shape[1]} must equal key dim {self.w_k.shape[1]}")

    @property
    def d_in(self) -> int:
        return self.w_q.shape[0]

    @property
    def d_k(self) -> int:
        return self.w_k.shape[1]

    @property
    def d_v(self) -> int:
        return self.w_v.shape[1]


@dataclass(frozen=True, eq=False)
class MhaParams:
    """All heads of one multi-head attention layer plus the output projection."""

    heads: tuple[HeadParams, ...]
    w_h: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "heads", tuple(self.heads))
        object.__setattr__(self, "w_h", as_matrix(self.w_h, "w_h"))
        if not self.heads:
            raise ValueError("at least one attention head is required")
        d_in = {h.d_in for h in self.heads}
        if len(d_in) != 1:
            raise ValueError("heads disagree on input dimension")
        total_v = sum(h.d_v for h in self.heads)
        if self.w_h.shape[0] != total_v:
            raise ValueError(
                f"output projection expects {self.w_h.shape[0]} rows but heads "
                f"produce {total_v} features")

    @property
    def d_model(self) -> int:
        return self.heads[0].d_in

    @property
    def n_heads(self) -> int:
        return len(self.heads)


@dataclass(frozen=True, eq=False)
class FeedForwardParams:
    """Two-layer feed-forward block: ReLU(x W1 + b1) W2 + b2."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "w1", as_matrix(self.w1, "w1"))
        object.__setattr__(self, "w2", as_matrix(self.w2, "w2"))
        object.__setattr__(self, "b1", np.asarray(self.b1, dtype=np.float64))
        object.__setattr__(self, "b2", np.asarray(self.b2, dtype=np.float64))
        if self.w1.shape[1] != self.w2.shape[0]:
            raise ValueError(f"inner dimensions disagree: {self.w1.shape} vs {self.w2.shape}")
        if self.b1.shape != (self.w1.shape[1],):
            raise ValueError(f"b1 shape {self.b1.shape} does not match w1 {self.w1.shape}")
        if self.b2.shape != (self.w2.shape[1],):
            raise ValueError(f"b2 shape {self.b2.shape} does not match w2 {self.w2.shape}")


def scaled_dot_attention(q, k, v, ledger: MultiplyLedger | None = None) -> np.ndarray:
    """Softmax(q k^T / sqrt(d_k)) v.

    Score products are attributed to the ledger's counted category; the
    weights-times-values product is deliberately not counted.
    """
    q = as_matrix(q, "queries")
    k = as_matrix(k, "keys")
    v = as_matrix(v, "values")
    if k.shape[0] == 0:
        raise ValueError("attention over an empty key set is undefined")
    if q.shape[1] != k.shape[1]:
        raise ValueError(f"query dim {q.shape[1]} != key dim {k.shape[1]}")
    if k.shape[0] != v.shape[0]:
        raise ValueError(f"{k.shape[0]} keys but {v.shape[0]} values")
    if ledger is not None:
        ledger.add(q.shape[0] * q.shape[1] * k.shape[0], COUNT_ATTENTION_SCORES)
    scores = (q @ k.T) / math.sqrt(q.shape[1])
    return row_softmax(scores) @ v


def attention_backward(q, k, v, upstream) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients of <upstream, scaled_dot_attention(q, k, v)> w.r.t. q, k, v."""
    q = as_matrix(q, "queries")
    k = as_matrix(k, "keys")
    v = as_matrix(v, "values")
    upstream = as_matrix(upstream, "upstream")
    if k.shape[0] == 0:
        raise ValueError("attention over an empty key set is undefined")
    if q.shape[1] != k.shape[1] or k.shape[0] != v.shape[0]:
        raise ValueError("shapes inconsistent with the forward pass")
    if upstream.shape != (q.shape[0], v.shape[1]):
        raise ValueError(
            f"upstream shape {upstream.shape} does not match output "
            f"({q.shape[0]}, {v.shape[1]})")
    scale = math.sqrt(q.shape[1])
    weights = row_softmax((q @ k.T) / scale)
    grad_v = weights.T @ upstream
    grad_weights = upstream @ v.T
    # softmax Jacobian applied row-wise
    inner = (grad_weights * weights).sum(axis=1, keepdims=True)
    grad_scores = weights * (grad_weights - inner)
    grad_q = (grad_scores @ k) / scale
    grad_k = (grad_scores.T @ q) / scale
    return grad_q, grad_k, grad_v


def mha_forward(x_q, x_kv, params: MhaParams,
                ledger: MultiplyLedger | None = None) -> np.ndarray:
    """Multi-head attention of queries ``x_q`` over keys/values ``x_kv``."""
    x_q = as_matrix(x_q, "query input")
    x_kv = as_matrix(x_kv, "key/value input")
    if x_q.shape[1] != params.d_model or x_kv.shape[1] != params.d_model:
        raise ValueError(
            f"inputs have {x_q.shape[1]}/{x_kv.shape[1]} columns, "
            f"params expect {params.d_model}")
    head_outs = [
        scaled_dot_attention(x_q @ h.w_q, x_kv @ h.w_k, x_kv @ h.w_v, ledger)
        for h in params.heads
    ]
    return concat_feature(head_outs) @ params.w_h


def restricted_mha_forward(x, params: MhaParams, window: RestrictionWindow,
                           ledger: MultiplyLedger | None = None) -> np.ndarray:
    """Multi-head self-attention where each query sees only its clipped window.

    The windowed key/value slice is gathered per query instead of applying a
    dense mask, so the multiplication ledger reflects the reduced cost.
    """
    x = as_matrix(x, "input")
    if x.shape[1] != params.d_model:
        raise ValueError(f"input has {x.shape[1]} columns, params expect {params.d_model}")
    n_frames = x.shape[0]
    head_outs = []
    for h in params.heads:
        q = x @ h.w_q
        k = x @ h.w_k
        v = x @ h.w_v
        out = np.empty((n_frames, h.d_v))
        for n in range(n_frames):
            lo, hi = window.bounds(n, n_frames)
            out[n] = scaled_dot_attention(q[n:n + 1], k[lo:hi], v[lo:hi], ledger)
        head_outs.append(out)
    return concat_feature(head_outs) @ params.w_h


def ff_forward(x, params: FeedForwardParams) -> np.ndarray:
    """Position-wise feed-forward block of the encoder (never counted)."""
    x = as_matrix(x, "input")
    if x.shape[1] != params.w1.shape[0]:
        raise ValueError(f"input has {x.shape[1]} columns, w1 expects {params.w1.shape[0]}")
    return relu(x @ params.w1 + params.b1) @ params.w2 + params.b2
