"""Chunking of keys/values, the four summarization mechanisms, assembly of
dilated attention heads, and the streaming (causal) variant.

A dilation sequence is a low-frame-rate summary of the full key/value
sequences: the input is split into ``ceil(N / M)`` chunks of ``M`` frames
(the last chunk zero-padded) and each chunk is reduced to a single row by
subsampling, mean-pooling, or attention-based pooling with an optional
post-processing stage. The summary rows are appended to every query's
restricted keys/values, giving each query coarse access to the whole
sequence while the window keeps full resolution nearby.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .attention import (
    FeedForwardParams,
    HeadParams,
    MhaParams,
    RestrictionWindow,
    scaled_dot_attention,
)
from .numerics import (
    COUNT_POST_PROCESS,
    MultiplyLedger,
    as_matrix,
    concat_feature,
    matmul,
    relu,
)

MECHANISMS = ("none", "subsample", "mean_pool", "attn_pool", "attn_pool_pp")
_ATTN_MECHANISMS = ("attn_pool", "attn_pool_pp")


@dataclass(frozen=True)
class DilationConfig:
    """Which summarization mechanism to run and its sizes.

    ``mechanism="none"`` disables the dilation sequence entirely (useful as
    a comparison mode; the head then degenerates to plain restricted
    attention). ``pool_heads`` and ``bottleneck_dim`` only matter for the
    attention-pooling variants.
    """

    mechanism: str
    chunk_size: int
    pool_heads: int = 1
    bottleneck_dim: int = 16

    def __post_init__(self):
        if self.mechanism not in MECHANISMS:
            raise ValueError(
                f"unknown mechanism {self.mechanism!r}, expected one of {MECHANISMS}")
        if self.chunk_size < 1:
            raise ValueError(f"chunk_size must be >= 1, got {self.chunk_size}")
        if self.pool_heads < 1:
            raise ValueError(f"pool_heads must be >= 1, got {self.pool_heads}")
        if self.mechanism == "attn_pool_pp" and self.bottleneck_dim < 1:
            raise ValueError(f"bottleneck_dim must be >= 1, got {self.bottleneck_dim}")

    @property
    def uses_attention_pooling(self) -> bool:
        return self.mechanism in _ATTN_MECHANISMS


@dataclass(frozen=True)
class ChunkingPlan:
    """How a length-``n_frames`` sequence splits into fixed-size chunks."""

    n_frames: int
    chunk_size: int
    n_chunks: int
    pad: int

    @classmethod
    def for_length(cls, n_frames: int, chunk_size: int) -> "ChunkingPlan":
        if n_frames < 1:
            raise ValueError(f"n_frames must be >= 1, got {n_frames}")
        if chunk_size < 1:
            raise ValueError(f"chunk_size must be >= 1, got {chunk_size}")
        n_chunks = -(-n_frames // chunk_size)
        pad = n_chunks * chunk_size - n_frames
        return cls(n_frames, chunk_size, n_chunks, pad)


@dataclass(frozen=True, eq=False)
class ApParams:
    """Learned query embeddings for attention-based pooling, one per pool head."""

    query_embeddings: np.ndarray  # (pool_heads, d_k)

    def __post_init__(self):
        object.__setattr__(
            self, "query_embeddings",
            as_matrix(self.query_embeddings, "query_embeddings"))
        if self.query_embeddings.shape[0] < 1:
            raise ValueError("attention pooling requires at least one query embedding")

    @property
    def pool_heads(self) -> int:
        return self.query_embeddings.shape[0]

    @property
    def d_k(self) -> int:
        return self.query_embeddings.shape[1]


@dataclass(frozen=True, eq=False)
class PpParams:
    """Bottleneck feed-forward applied to concatenated pooling-head outputs.

    One branch per summarized sequence: values and keys each get their own
    (B*d -> d_in -> d) network; the result is added residually to the
    pooling average.
    """

    value_ff: FeedForwardParams
    key_ff: FeedForwardParams


@dataclass(frozen=True, eq=False)
class DilationSequences:
    """Summarized key and value sequences, one row per chunk."""

    keys: np.ndarray    # (n_chunks, d_k)
    values: np.ndarray  # (n_chunks, d_v)

    def __post_init__(self):
        object.__setattr__(self, "keys", as_matrix(self.keys, "summary keys"))
        object.__setattr__(self, "values", as_matrix(self.values, "summary values"))
        if self.keys.shape[0] != self.values.shape[0]:
            raise ValueError(
                f"summary keys/values disagree on length: "
                f"{self.keys.shape[0]} vs {self.values.shape[0]}")

    def __len__(self) -> int:
        return self.keys.shape[0]


def split_chunks(seq, chunk_size: int) -> list[np.ndarray]:
    """Split into ceil(N/M) chunks of M rows, zero-padding the last one."""
    seq = as_matrix(seq, "sequence")
    plan = ChunkingPlan.for_length(seq.shape[0], chunk_size)
    return [c for c in _padded_chunks(seq, plan)]


def _padded_chunks(seq: np.ndarray, plan: ChunkingPlan) -> np.ndarray:
    """(n_chunks, chunk_size, d) view of the zero-padded sequence."""
    if plan.pad:
        seq = np.concatenate(
            [seq, np.zeros((plan.pad, seq.shape[1]), dtype=np.float64)], axis=0)
    return seq.reshape(plan.n_chunks, plan.chunk_size, seq.shape[1])


def _empty_sequences(d_k: int, d_v: int) -> DilationSequences:
    return DilationSequences(np.empty((0, d_k)), np.empty((0, d_v)))


def dilate_subsample(k_seq, v_seq, chunk_size: int) -> DilationSequences:
    """Summarize each chunk by its first frame."""
    k_seq = as_matrix(k_seq, "keys")
    v_seq = as_matrix(v_seq, "values")
    _check_same_length(k_seq, v_seq)
    ChunkingPlan.for_length(k_seq.shape[0], chunk_size)
    return DilationSequences(
        k_seq[0::chunk_size].copy(), v_seq[0::chunk_size].copy())


def dilate_mean_pool(k_seq, v_seq, chunk_size: int,
                     divide_by_frame_count: bool = False) -> DilationSequences:
    """Summarize each chunk by its mean over ``chunk_size`` slots.

    The divisor is the full chunk size, so zero-pad rows of a partial final
    chunk dilute its mean. ``divide_by_frame_count=True`` switches the final
    chunk to a true mean over its real frames instead.

    The mean is computed as a uniform-weight dot product so that attention
    pooling with all-zero query embeddings reproduces it bit-exactly.
    """
    k_seq = as_matrix(k_seq, "keys")
    v_seq = as_matrix(v_seq, "values")
    _check_same_length(k_seq, v_seq)
    plan = ChunkingPlan.for_length(k_seq.shape[0], chunk_size)
    chunks_k = _padded_chunks(k_seq, plan)
    chunks_v = _padded_chunks(v_seq, plan)
    out_k = np.empty((plan.n_chunks, k_seq.shape[1]))
    out_v = np.empty((plan.n_chunks, v_seq.shape[1]))
    for c in range(plan.n_chunks):
        real = _real_rows(plan, c)
        if divide_by_frame_count and real < chunk_size:
            weights = np.zeros(chunk_size)
            weights[:real] = 1.0 / real
        else:
            weights = np.full(chunk_size, 1.0 / chunk_size)
        out_k[c] = weights @ chunks_k[c]
        out_v[c] = weights @ chunks_v[c]
    return DilationSequences(out_k, out_v)


def dilate_attn_pool(
    k_seq, v_seq, chunk_size: int, ap: ApParams,
    ledger: MultiplyLedger | None = None,
) -> tuple[DilationSequences, np.ndarray, np.ndarray]:
    """Summarize each chunk by attention from learned query embeddings.

    For every chunk, each embedding queries the chunk's keys; the resulting
    weights are reused to pool both the key chunk and the value chunk. The
    summary row is the average over the pool heads. Returns the sequences
    plus the raw per-head pooled rows, shaped (n_chunks, pool_heads, d),
    which the post-processing stage consumes.

    Zero-pad rows of the final chunk take part in the softmax with score
    exactly zero; their scores are appended as constants, so only products
    against real frames are tallied.
    """
    k_seq = as_matrix(k_seq, "keys")
    v_seq = as_matrix(v_seq, "values")
    _check_same_length(k_seq, v_seq)
    if ap.d_k != k_seq.shape[1]:
        raise ValueError(
            f"query embeddings have dim {ap.d_k}, keys have {k_seq.shape[1]}")
    plan = ChunkingPlan.for_length(k_seq.shape[0], chunk_size)
    chunks_k = _padded_chunks(k_seq, plan)
    chunks_v = _padded_chunks(v_seq, plan)
    n_pool = ap.pool_heads
    scale = math.sqrt(ap.d_k)
    head_k = np.empty((plan.n_chunks, n_pool, k_seq.shape[1]))
    head_v = np.empty((plan.n_chunks, n_pool, v_seq.shape[1]))
    for c in range(plan.n_chunks):
        real = _real_rows(plan, c)
        # scores against real frames only; pad rows contribute exact zeros
        scores = np.zeros((chunk_size, n_pool))
        scores[:real] = matmul(
            k_seq[plan.chunk_size * c:plan.chunk_size * c + real],
            ap.query_embeddings.T, ledger, counted=True) / scale
        for b in range(n_pool):
            weights = _softmax_1d(scores[:, b])
            head_k[c, b] = weights @ chunks_k[c]
            head_v[c, b] = weights @ chunks_v[c]
    pooled = DilationSequences(head_k.mean(axis=1), head_v.mean(axis=1))
    return pooled, head_k, head_v


def post_process(
    head_k: np.ndarray, head_v: np.ndarray, pooled: DilationSequences,
    pp: PpParams, ledger: MultiplyLedger | None = None,
) -> DilationSequences:
    """Bottleneck feed-forward over concatenated pool-head outputs, residual
    over the pooling average. All matmuls are tallied as post-processing."""
    head_k = np.asarray(head_k, dtype=np.float64)
    head_v = np.asarray(head_v, dtype=np.float64)
    if head_k.ndim != 3 or head_v.ndim != 3:
        raise ValueError("raw pooling outputs must be (n_chunks, pool_heads, d)")
    out_k = _pp_branch(head_k, pp.key_ff, ledger) + pooled.keys
    out_v = _pp_branch(head_v, pp.value_ff, ledger) + pooled.values
    return DilationSequences(out_k, out_v)


def _pp_branch(heads: np.ndarray, ff: FeedForwardParams,
               ledger: MultiplyLedger | None) -> np.ndarray:
    n_chunks, n_pool, d = heads.shape
    stacked = heads.reshape(n_chunks, n_pool * d)  # feature-wise concat per chunk
    if stacked.shape[1] != ff.w1.shape[0]:
        raise ValueError(
            f"post-processing expects {ff.w1.shape[0]} features, got {stacked.shape[1]}")
    hidden = relu(matmul(stacked, ff.w1, ledger, counted=True,
                         category=COUNT_POST_PROCESS) + ff.b1)
    return matmul(hidden, ff.w2, ledger, counted=True,
                  category=COUNT_POST_PROCESS) + ff.b2


def build_dilation(
    k_seq, v_seq, cfg: DilationConfig,
    ap: ApParams | None = None, pp: PpParams | None = None,
    ledger: MultiplyLedger | None = None,
) -> DilationSequences:
    """Run the configured mechanism over projected keys/values."""
    k_seq = as_matrix(k_seq, "keys")
    v_seq = as_matrix(v_seq, "values")
    if cfg.mechanism == "none":
        return _empty_sequences(k_seq.shape[1], v_seq.shape[1])
    if cfg.mechanism == "subsample":
        return dilate_subsample(k_seq, v_seq, cfg.chunk_size)
    if cfg.mechanism == "mean_pool":
        return dilate_mean_pool(k_seq, v_seq, cfg.chunk_size)
    if ap is None:
        raise ValueError(f"mechanism {cfg.mechanism!r} requires pooling query embeddings")
    pooled, head_k, head_v = dilate_attn_pool(k_seq, v_seq, cfg.chunk_size, ap, ledger)
    if cfg.mechanism == "attn_pool":
        return pooled
    if pp is None:
        raise ValueError("mechanism 'attn_pool_pp' requires post-processing parameters")
    return post_process(head_k, head_v, pooled, pp, ledger)


def completed_chunks(query: int, chunk_size: int) -> int:
    """Chunks made entirely of frames strictly before ``query``.

    This is the causal availability rule: a chunk's summary becomes usable
    once its last frame is in the past, so the count grows by one every
    ``chunk_size`` frames.
    """
    return query // chunk_size


def dilated_head_forward(
    x, head: HeadParams, window: RestrictionWindow, cfg: DilationConfig,
    ap: ApParams | None = None, pp: PpParams | None = None,
    ledger: MultiplyLedger | None = None, causal: bool = False,
) -> np.ndarray:
    """One attention head over [windowed keys ‖ dilation sequence].

    The summary rows are computed once per sequence and appended whole for
    every query, even where summarized chunks overlap the query's window
    (nearby content may then appear twice among the keys). In causal mode a
    query sees only summaries of chunks that lie entirely in its past.
    """
    x = as_matrix(x, "input")
    q = x @ head.w_q
    k = x @ head.w_k
    v = x @ head.w_v
    summary = build_dilation(k, v, cfg, ap, pp, ledger)
    n_frames = x.shape[0]
    out = np.empty((n_frames, head.d_v))
    for n in range(n_frames):
        lo, hi = window.bounds(n, n_frames)
        rows = completed_chunks(n, cfg.chunk_size) if causal else len(summary)
        keys = np.concatenate([k[lo:hi], summary.keys[:rows]])
        values = np.concatenate([v[lo:hi], summary.values[:rows]])
        out[n] = scaled_dot_attention(q[n:n + 1], keys, values, ledger)
    return out


def dilated_mha_forward(
    x, params: MhaParams, window: RestrictionWindow, cfg: DilationConfig,
    ap: list[ApParams] | None = None, pp: list[PpParams] | None = None,
    ledger: MultiplyLedger | None = None, causal: bool = False,
) -> np.ndarray:
    """All heads of a dilated self-attention layer plus the output projection.

    ``ap``/``pp`` hold one parameter set per attention head; each head
    summarizes its own projected keys/values.
    """
    x = as_matrix(x, "input")
    if x.shape[1] != params.d_model:
        raise ValueError(f"input has {x.shape[1]} columns, params expect {params.d_model}")
    ap = _per_head(ap, params.n_heads, cfg, "query embeddings",
                   needed=cfg.uses_attention_pooling)
    pp = _per_head(pp, params.n_heads, cfg, "post-processing parameters",
                   needed=cfg.mechanism == "attn_pool_pp")
    head_outs = [
        dilated_head_forward(x, h, window, cfg, ap[i], pp[i], ledger, causal)
        for i, h in enumerate(params.heads)
    ]
    return concat_feature(head_outs) @ params.w_h


def attn_pool_embedding_grad(
    k_seq, v_seq, chunk_size: int, ap: ApParams,
    upstream_k, upstream_v,
) -> np.ndarray:
    """Analytic gradient of <upstream, attention-pooled sequences> w.r.t. the
    query embeddings; checked against central differences by the harness."""
    k_seq = as_matrix(k_seq, "keys")
    v_seq = as_matrix(v_seq, "values")
    upstream_k = as_matrix(upstream_k, "upstream_k")
    upstream_v = as_matrix(upstream_v, "upstream_v")
    plan = ChunkingPlan.for_length(k_seq.shape[0], chunk_size)
    if upstream_k.shape != (plan.n_chunks, k_seq.shape[1]):
        raise ValueError(f"upstream_k shape {upstream_k.shape} does not match summaries")
    if upstream_v.shape != (plan.n_chunks, v_seq.shape[1]):
        raise ValueError(f"upstream_v shape {upstream_v.shape} does not match summaries")
    chunks_k = _padded_chunks(k_seq, plan)
    chunks_v = _padded_chunks(v_seq, plan)
    n_pool = ap.pool_heads
    scale = math.sqrt(ap.d_k)
    grad = np.zeros_like(ap.query_embeddings)
    for c in range(plan.n_chunks):
        ck, cv = chunks_k[c], chunks_v[c]
        scores = (ck @ ap.query_embeddings.T) / scale  # pads score exactly 0
        for b in range(n_pool):
            weights = _softmax_1d(scores[:, b])
            # upstream on this pool head's rows (summary is the head average)
            d_row = (ck @ upstream_k[c] + cv @ upstream_v[c]) / n_pool
            d_scores = weights * (d_row - float(weights @ d_row))
            grad[b] += (d_scores @ ck) / scale
    return grad


class StreamingDilatedAttention:
    """Incremental causal dilated self-attention over a growing frame stream.

    Frames arrive one at a time through :meth:`push`. The output row for
    frame ``n`` is emitted once its look-ahead frames have arrived (or at
    :meth:`finish`, clipped at the end of the stream). The dilation summary
    for a chunk is computed exactly once, when the chunk's last frame is
    received, and is visible only to queries strictly after the chunk.
    """

    def __init__(self, params: MhaParams, window: RestrictionWindow,
                 cfg: DilationConfig, ap: list[ApParams] | None = None,
                 pp: list[PpParams] | None = None):
        self.params = params
        self.window = window
        self.cfg = cfg
        self.ap = _per_head(ap, params.n_heads, cfg, "query embeddings",
                            needed=cfg.uses_attention_pooling)
        self.pp = _per_head(pp, params.n_heads, cfg, "post-processing parameters",
                            needed=cfg.mechanism == "attn_pool_pp")
        self._q = [[] for _ in params.heads]
        self._k = [[] for _ in params.heads]
        self._v = [[] for _ in params.heads]
        self._summary_k = [[] for _ in params.heads]
        self._summary_v = [[] for _ in params.heads]
        self._received = 0
        self._emitted = 0

    @property
    def frames_received(self) -> int:
        return self._received

    def push(self, frame) -> list[tuple[int, np.ndarray]]:
        """Feed one input frame; returns output rows that became final."""
        frame = np.asarray(frame, dtype=np.float64)
        if frame.ndim == 1:
            frame = frame[None, :]
        if frame.shape != (1, self.params.d_model):
            raise ValueError(
                f"expected one frame of width {self.params.d_model}, got {frame.shape}")
        for i, h in enumerate(self.params.heads):
            self._q[i].append((frame @ h.w_q)[0])
            self._k[i].append((frame @ h.w_k)[0])
            self._v[i].append((frame @ h.w_v)[0])
        self._received += 1
        if self.cfg.mechanism != "none" and self._received % self.cfg.chunk_size == 0:
            self._summarize_chunk(self._received // self.cfg.chunk_size - 1)
        emitted = []
        while self._emitted + self.window.look_ahead < self._received:
            emitted.append((self._emitted, self._compute_row(self._emitted)))
            self._emitted += 1
        return emitted

    def finish(self) -> list[tuple[int, np.ndarray]]:
        """Flush rows still waiting on look-ahead, clipped at stream end."""
        emitted = []
        while self._emitted < self._received:
            emitted.append((self._emitted, self._compute_row(self._emitted)))
            self._emitted += 1
        return emitted

    def output_row(self, n: int) -> np.ndarray:
        """Output for frame ``n`` given the frames received so far."""
        if n < 0 or n >= self._received:
            raise IndexError(
                f"frame {n} has not been received (stream is at {self._received})")
        return self._compute_row(n)

    def _summarize_chunk(self, chunk_index: int) -> None:
        m = self.cfg.chunk_size
        lo, hi = chunk_index * m, (chunk_index + 1) * m
        for i in range(self.params.n_heads):
            k = np.asarray(self._k[i][lo:hi])
            v = np.asarray(self._v[i][lo:hi])
            summary = build_dilation(k, v, self.cfg, self.ap[i], self.pp[i])
            self._summary_k[i].append(summary.keys[0])
            self._summary_v[i].append(summary.values[0])

    def _compute_row(self, n: int) -> np.ndarray:
        lo, hi = self.window.bounds(n, self._received)
        rows = completed_chunks(n, self.cfg.chunk_size) if self.cfg.mechanism != "none" else 0
        head_outs = []
        for i in range(self.params.n_heads):
            keys = np.asarray(self._k[i][lo:hi] + self._summary_k[i][:rows])
            values = np.asarray(self._v[i][lo:hi] + self._summary_v[i][:rows])
            q = self._q[i][n][None, :]
            head_outs.append(scaled_dot_attention(q, keys, values))
        return (np.concatenate(head_outs, axis=1) @ self.params.w_h)[0]


def _per_head(items, n_heads: int, cfg: DilationConfig, what: str,
              needed: bool) -> list:
    if not needed:
        return [None] * n_heads
    if items is None:
        raise ValueError(f"mechanism {cfg.mechanism!r} requires per-head {what}")
    items = list(items)
    if len(items) != n_heads:
        raise ValueError(f"expected {n_heads} per-head {what}, got {len(items)}")
    return items


def _softmax_1d(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max()
    e = np.exp(shifted)
    return e / e.sum()


def _real_rows(plan: ChunkingPlan, chunk_index: int) -> int:
    if chunk_index == plan.n_chunks - 1:
        return plan.chunk_size - plan.pad
    return plan.chunk_size


def _check_same_length(k_seq: np.ndarray, v_seq: np.ndarray) -> None:
    if k_seq.shape[0] != v_seq.shape[0]:
        raise ValueError(
            f"keys and values disagree on frame count: "
            f"{k_seq.shape[0]} vs {v_seq.shape[0]}")
