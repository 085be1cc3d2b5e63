"""Verification suites behind ``dsa verify``: assembly-oracle equivalence,
gradient checks, instrumented-count equality, and streaming properties.

The oracle half of every check is written straight-line from the defining
formulas (explicit chunk slicing, plain exp/sum softmax, no shared helpers)
so it stays independent of the production code paths it cross-checks."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .attention import (
    HeadParams,
    MhaParams,
    RestrictionWindow,
    attention_backward,
    mha_forward,
    restricted_mha_forward,
    scaled_dot_attention,
)
from .complexity import CostQuery, estimate_exact, estimate_closed_form, streaming_report
from .dilation import (
    ApParams,
    DilationConfig,
    FeedForwardParams,
    PpParams,
    StreamingDilatedAttention,
    attn_pool_embedding_grad,
    dilate_attn_pool,
    dilate_mean_pool,
    dilate_subsample,
    dilated_head_forward,
    dilated_mha_forward,
    post_process,
)
from .numerics import MultiplyLedger, finite_diff_grad

MECHANISM_CASES = ("subsample", "mean_pool", "attn_pool_1", "attn_pool_2",
                   "attn_pool_pp")


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    max_err: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f"  ({self.detail})" if self.detail else ""
        return f"{status}  {self.name}  max_err={self.max_err:.3e}{extra}"


# ----------------------------------------------------------------------
# naive oracle: assemble-then-attend, straight-line
# ----------------------------------------------------------------------

def _oracle_softmax(scores: np.ndarray) -> np.ndarray:
    e = np.exp(scores)
    return e / e.sum()


def _oracle_attend(q_row: np.ndarray, keys: np.ndarray, values: np.ndarray) -> np.ndarray:
    scores = np.array([float(np.dot(key, q_row)) for key in keys])
    weights = _oracle_softmax(scores / math.sqrt(q_row.shape[0]))
    return weights @ values


def _oracle_chunks(seq: np.ndarray, m: int) -> list[np.ndarray]:
    chunks = []
    for start in range(0, seq.shape[0], m):
        chunk = seq[start:start + m]
        if chunk.shape[0] < m:
            chunk = np.vstack([chunk, np.zeros((m - chunk.shape[0], seq.shape[1]))])
        chunks.append(chunk)
    return chunks


def oracle_dilation(k_seq: np.ndarray, v_seq: np.ndarray, mechanism: str, m: int,
                    embeddings: np.ndarray | None = None,
                    pp: PpParams | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Summary sequences computed directly from the defining formulas."""
    if mechanism == "none":
        return (np.zeros((0, k_seq.shape[1])), np.zeros((0, v_seq.shape[1])))
    if mechanism == "subsample":
        idx = list(range(0, k_seq.shape[0], m))
        return k_seq[idx], v_seq[idx]
    chunks_k = _oracle_chunks(k_seq, m)
    chunks_v = _oracle_chunks(v_seq, m)
    if mechanism == "mean_pool":
        out_k = np.array([c.sum(axis=0) / m for c in chunks_k])
        out_v = np.array([c.sum(axis=0) / m for c in chunks_v])
        return out_k, out_v
    # attention pooling: every embedding queries the full padded key chunk
    d_k = k_seq.shape[1]
    rows_k, rows_v, heads_k, heads_v = [], [], [], []
    for ck, cv in zip(chunks_k, chunks_v):
        per_head_k, per_head_v = [], []
        for emb in embeddings:
            scores = np.array([float(np.dot(row, emb)) for row in ck]) / math.sqrt(d_k)
            w = _oracle_softmax(scores)
            per_head_k.append(w @ ck)
            per_head_v.append(w @ cv)
        heads_k.append(per_head_k)
        heads_v.append(per_head_v)
        rows_k.append(sum(per_head_k) / len(embeddings))
        rows_v.append(sum(per_head_v) / len(embeddings))
    out_k, out_v = np.array(rows_k), np.array(rows_v)
    if mechanism == "attn_pool":
        return out_k, out_v
    # post-processing: bottleneck FF over concatenated heads, residual
    def branch(stacked_rows, ff):
        joined = np.concatenate(stacked_rows)
        hidden = np.maximum(joined @ ff.w1 + ff.b1, 0.0)
        return hidden @ ff.w2 + ff.b2

    pp_k = np.array([branch(heads_k[c], pp.key_ff) + out_k[c]
                     for c in range(len(chunks_k))])
    pp_v = np.array([branch(heads_v[c], pp.value_ff) + out_v[c]
                     for c in range(len(chunks_v))])
    return pp_k, pp_v


def oracle_dilated_head(x: np.ndarray, head: HeadParams, look_back: int,
                        look_ahead: int, mechanism: str, m: int,
                        embeddings: np.ndarray | None = None,
                        pp: PpParams | None = None,
                        causal: bool = False) -> np.ndarray:
    """Per-query assemble-then-attend over [window ‖ summary]."""
    q_all = x @ head.w_q
    k_all = x @ head.w_k
    v_all = x @ head.w_v
    sum_k, sum_v = oracle_dilation(k_all, v_all, mechanism, m, embeddings, pp)
    n_frames = x.shape[0]
    out = np.zeros((n_frames, head.d_v))
    for n in range(n_frames):
        lo, hi = max(0, n - look_back), min(n_frames, n + look_ahead + 1)
        rows = (n // m) if causal else sum_k.shape[0]
        keys = np.vstack([k_all[lo:hi], sum_k[:rows]])
        values = np.vstack([v_all[lo:hi], sum_v[:rows]])
        out[n] = _oracle_attend(q_all[n], keys, values)
    return out


def _random_head(rng, d_model: int, d_k: int, d_v: int) -> HeadParams:
    return HeadParams(rng.normal(size=(d_model, d_k)),
                      rng.normal(size=(d_model, d_k)),
                      rng.normal(size=(d_model, d_v)))


def _random_pp(rng, n_pool: int, d_k: int, d_v: int, d_in: int) -> PpParams:
    def ff(d):
        return FeedForwardParams(rng.normal(size=(n_pool * d, d_in)),
                                 rng.normal(size=d_in),
                                 rng.normal(size=(d_in, d)),
                                 rng.normal(size=d))
    return PpParams(value_ff=ff(d_v), key_ff=ff(d_k))


def _mechanism_setup(case: str, rng, d_k: int, d_v: int):
    """Map a named oracle case to (mechanism, config fields, params)."""
    if case == "subsample":
        return "subsample", 1, None, None
    if case == "mean_pool":
        return "mean_pool", 1, None, None
    n_pool = {"attn_pool_1": 1, "attn_pool_2": 2, "attn_pool_pp": 2}[case]
    embeddings = rng.normal(size=(n_pool, d_k))
    pp = None
    if case == "attn_pool_pp":
        pp = _random_pp(rng, n_pool, d_k, d_v, d_in=int(rng.integers(1, 9)))
    return ("attn_pool_pp" if case == "attn_pool_pp" else "attn_pool",
            n_pool, embeddings, pp)


def check_assembly_equivalence(seed: int = 0, cases_per_mechanism: int = 120,
                               tol: float = 1e-10) -> list[CheckResult]:
    """Production dilated head versus the naive oracle over randomized
    lengths, chunk sizes, and windows."""
    results = []
    for case in MECHANISM_CASES:
        rng = np.random.default_rng((seed, hash(case) & 0xFFFF))
        worst = 0.0
        for _ in range(cases_per_mechanism):
            n = int(rng.integers(1, 65))
            m = int(rng.integers(1, n + 3))
            lb = int(rng.integers(0, n + 1))
            la = int(rng.integers(0, n + 1))
            d_model = int(rng.integers(1, 9))
            d_k = int(rng.integers(1, 7))
            d_v = int(rng.integers(1, 7))
            x = rng.normal(size=(n, d_model))
            head = _random_head(rng, d_model, d_k, d_v)
            mechanism, n_pool, embeddings, pp = _mechanism_setup(case, rng, d_k, d_v)
            d_in = pp.key_ff.w1.shape[1] if pp is not None else 16
            cfg = DilationConfig(mechanism, m, n_pool, d_in)
            ap = ApParams(embeddings) if embeddings is not None else None
            got = dilated_head_forward(x, head, RestrictionWindow(lb, la), cfg, ap, pp)
            want = oracle_dilated_head(x, head, lb, la, mechanism, m, embeddings, pp)
            worst = max(worst, float(np.abs(got - want).max()))
        results.append(CheckResult(
            f"assembly_equivalence[{case}]", worst <= tol, worst,
            f"{cases_per_mechanism} cases"))
    return results


def check_window_collapse(seed: int = 0, cases: int = 50,
                          tol: float = 1e-10) -> list[CheckResult]:
    """Full-coverage windows must reproduce full self-attention, both for
    restricted mode and for dilated mode with the summary disabled."""
    rng = np.random.default_rng(seed)
    worst_restricted = worst_dilated = 0.0
    for _ in range(cases):
        n = int(rng.integers(1, 33))
        d_model = int(rng.integers(1, 9))
        n_heads = int(rng.integers(1, 4))
        d_k = int(rng.integers(1, 7))
        d_v = int(rng.integers(1, 7))
        heads = tuple(_random_head(rng, d_model, d_k, d_v) for _ in range(n_heads))
        params = MhaParams(heads, rng.normal(size=(n_heads * d_v, d_model)))
        x = rng.normal(size=(n, d_model))
        window = RestrictionWindow(n, n)
        full = mha_forward(x, x, params)
        restricted = restricted_mha_forward(x, params, window)
        dilated = dilated_mha_forward(x, params, window, DilationConfig("none", 1))
        worst_restricted = max(worst_restricted, float(np.abs(full - restricted).max()))
        worst_dilated = max(worst_dilated, float(np.abs(full - dilated).max()))
    return [
        CheckResult("window_collapse[restricted]", worst_restricted <= tol,
                    worst_restricted, f"{cases} cases"),
        CheckResult("window_collapse[dilated_empty_summary]", worst_dilated <= tol,
                    worst_dilated, f"{cases} cases"),
    ]


def check_reduction_identities(seed: int = 0, cases: int = 40) -> list[CheckResult]:
    """Zero pooling queries reproduce the mean; zero post-processing is the
    identity; chunk size one subsamples everything. All exact."""
    rng = np.random.default_rng(seed)
    worst_ap = worst_pp = worst_sub = 0.0
    for _ in range(cases):
        n = int(rng.integers(1, 40))
        m = int(rng.integers(1, n + 3))
        d = int(rng.integers(1, 8))
        k = rng.normal(size=(n, d))
        v = rng.normal(size=(n, d))
        for n_pool in (1, 2):
            ap = ApParams(np.zeros((n_pool, d)))
            pooled, head_k, head_v = dilate_attn_pool(k, v, m, ap)
            mean = dilate_mean_pool(k, v, m)
            worst_ap = max(worst_ap,
                           float(np.abs(pooled.keys - mean.keys).max(initial=0.0)),
                           float(np.abs(pooled.values - mean.values).max(initial=0.0)))
            d_in = int(rng.integers(1, 6))
            zero_pp = PpParams(
                value_ff=FeedForwardParams(np.zeros((n_pool * d, d_in)), np.zeros(d_in),
                                           np.zeros((d_in, d)), np.zeros(d)),
                key_ff=FeedForwardParams(np.zeros((n_pool * d, d_in)), np.zeros(d_in),
                                         np.zeros((d_in, d)), np.zeros(d)))
            post = post_process(head_k, head_v, pooled, zero_pp)
            worst_pp = max(worst_pp,
                           float(np.abs(post.keys - pooled.keys).max(initial=0.0)),
                           float(np.abs(post.values - pooled.values).max(initial=0.0)))
        sub = dilate_subsample(k, v, 1)
        worst_sub = max(worst_sub,
                        float(np.abs(sub.keys - k).max(initial=0.0)),
                        float(np.abs(sub.values - v).max(initial=0.0)))
    return [
        CheckResult("reduction[zero_ap_equals_mean_pool]", worst_ap == 0.0, worst_ap),
        CheckResult("reduction[zero_pp_is_identity]", worst_pp == 0.0, worst_pp),
        CheckResult("reduction[subsample_chunk1_is_identity]", worst_sub == 0.0, worst_sub),
    ]


# ----------------------------------------------------------------------
# gradient checks
# ----------------------------------------------------------------------

def _rel_err(analytic: np.ndarray, numeric: np.ndarray) -> float:
    denom = max(float(np.linalg.norm(numeric)), 1e-8)
    return float(np.linalg.norm(analytic - numeric)) / denom


def check_attention_gradients(seed: int = 0, cases: int = 100, h: float = 1e-5,
                              tol: float = 1e-4) -> CheckResult:
    """Analytic attention gradients against central differences."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(cases):
        n_q = int(rng.integers(1, 7))
        n_k = int(rng.integers(1, 7))
        d_k = int(rng.integers(1, 9))
        d_v = int(rng.integers(1, 9))
        q = rng.normal(size=(n_q, d_k))
        k = rng.normal(size=(n_k, d_k))
        v = rng.normal(size=(n_k, d_v))
        upstream = rng.normal(size=(n_q, d_v))
        grad_q, grad_k, grad_v = attention_backward(q, k, v, upstream)
        fd_q = finite_diff_grad(
            lambda t: float(np.sum(upstream * scaled_dot_attention(t, k, v))), q, h)
        fd_k = finite_diff_grad(
            lambda t: float(np.sum(upstream * scaled_dot_attention(q, t, v))), k, h)
        fd_v = finite_diff_grad(
            lambda t: float(np.sum(upstream * scaled_dot_attention(q, k, t))), v, h)
        worst = max(worst, _rel_err(grad_q, fd_q), _rel_err(grad_k, fd_k),
                    _rel_err(grad_v, fd_v))
    return CheckResult("gradients[attention_qkv]", worst < tol, worst,
                       f"{cases} cases, h={h:g}")


def check_pooling_gradients(seed: int = 0, cases: int = 100, h: float = 1e-5,
                            tol: float = 1e-4) -> CheckResult:
    """Attention-pooling gradients w.r.t. the query embeddings against
    central differences."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(cases):
        n = int(rng.integers(1, 25))
        m = int(rng.integers(1, n + 3))
        d_k = int(rng.integers(1, 7))
        d_v = int(rng.integers(1, 7))
        n_pool = int(rng.integers(1, 3))
        k = rng.normal(size=(n, d_k))
        v = rng.normal(size=(n, d_v))
        emb = rng.normal(size=(n_pool, d_k))
        n_chunks = -(-n // m)
        up_k = rng.normal(size=(n_chunks, d_k))
        up_v = rng.normal(size=(n_chunks, d_v))
        analytic = attn_pool_embedding_grad(k, v, m, ApParams(emb), up_k, up_v)

        def probe(e):
            pooled, _, _ = dilate_attn_pool(k, v, m, ApParams(e))
            return float(np.sum(up_k * pooled.keys) + np.sum(up_v * pooled.values))

        numeric = finite_diff_grad(probe, emb, h)
        worst = max(worst, _rel_err(analytic, numeric))
    return CheckResult("gradients[pooling_embeddings]", worst < tol, worst,
                       f"{cases} cases, h={h:g}")


# ----------------------------------------------------------------------
# instrumented-count equality
# ----------------------------------------------------------------------

def _grid_configs():
    """Attention types x mechanisms exercised by the count check."""
    yield "full", None, None, None
    for window in ((0, 0), (2, 1), (1, 3)):
        yield "restricted", window, None, None
    for mechanism, n_pool in (("subsample", None), ("mean_pool", None),
                              ("attn_pool", 1), ("attn_pool", 2),
                              ("attn_pool_pp", 2)):
        for m in (1, 3, 5):
            yield "dilated", (2, 1), (mechanism, m), n_pool


def check_instrumented_counts(seed: int = 0, tol_zero: int = 0) -> list[CheckResult]:
    """Ledger of real forward passes == exact estimate, integer for integer,
    over N in 4..16 and every attention type / mechanism combination. Also
    confirms the exact estimate collapses to the closed form when no window
    clipping occurs."""
    rng = np.random.default_rng(seed)
    d_model, n_heads, d_in = 8, 2, 3
    d_head = d_model // n_heads
    mismatches = 0
    checked = 0
    worst = 0
    for n in range(4, 17):
        x = rng.normal(size=(n, d_model))
        for attention_type, window, mech, n_pool in _grid_configs():
            heads = tuple(_random_head(rng, d_model, d_head, d_head)
                          for _ in range(n_heads))
            params = MhaParams(heads, rng.normal(size=(n_heads * d_head, d_model)))
            ledger = MultiplyLedger()
            if attention_type == "full":
                mha_forward(x, x, params, ledger)
                query = CostQuery(n, d_model, "full")
            elif attention_type == "restricted":
                win = RestrictionWindow(*window)
                restricted_mha_forward(x, params, win, ledger)
                query = CostQuery(n, d_model, "restricted",
                                  look_back=window[0], look_ahead=window[1])
            else:
                mechanism, m = mech
                cfg = DilationConfig(mechanism, m, n_pool or 1, d_in)
                ap = pp = None
                if cfg.uses_attention_pooling:
                    ap = [ApParams(rng.normal(size=(cfg.pool_heads, d_head)))
                          for _ in range(n_heads)]
                if mechanism == "attn_pool_pp":
                    pp = [_random_pp(rng, cfg.pool_heads, d_head, d_head, d_in)
                          for _ in range(n_heads)]
                win = RestrictionWindow(*window)
                dilated_mha_forward(x, params, win, cfg, ap, pp, ledger)
                query = CostQuery(n, d_model, "dilated",
                                  look_back=window[0], look_ahead=window[1],
                                  chunk_size=m, mechanism=mechanism,
                                  pool_heads=n_pool, bottleneck_dim=d_in)
            expected = estimate_exact(query)
            checked += 1
            diff = abs(ledger.counted - expected.total)
            worst = max(worst, diff)
            if diff > tol_zero:
                mismatches += 1
    results = [CheckResult("instrumented_counts", mismatches == 0, float(worst),
                           f"{checked} configurations, N in 4..16")]

    # no clipping (R = 1 windows, or full type) => exact == closed form
    eq_bad = 0
    for n in range(1, 20):
        full = CostQuery(n, 8, "full")
        if estimate_exact(full) != estimate_closed_form(full):
            eq_bad += 1
        tight = CostQuery(n, 8, "restricted", look_back=0, look_ahead=0)
        if estimate_exact(tight) != estimate_closed_form(tight):
            eq_bad += 1
        dil = CostQuery(n, 8, "dilated", look_back=0, look_ahead=0,
                        chunk_size=3, mechanism="mean_pool")
        if estimate_exact(dil) != estimate_closed_form(dil):
            eq_bad += 1
    results.append(CheckResult("exact_equals_closed_form_when_unclipped", eq_bad == 0,
                               float(eq_bad)))
    return results


# ----------------------------------------------------------------------
# streaming checks
# ----------------------------------------------------------------------

def _streaming_setup(rng, n_heads=2, d_model=6, d_head=3, n_pool=2, d_in=4,
                     mechanism="attn_pool_pp", m=4):
    heads = tuple(_random_head(rng, d_model, d_head, d_head) for _ in range(n_heads))
    params = MhaParams(heads, rng.normal(size=(n_heads * d_head, d_model)))
    cfg = DilationConfig(mechanism, m, n_pool, d_in)
    ap = pp = None
    if cfg.uses_attention_pooling:
        ap = [ApParams(rng.normal(size=(n_pool, d_head))) for _ in range(n_heads)]
    if mechanism == "attn_pool_pp":
        pp = [_random_pp(rng, n_pool, d_head, d_head, d_in) for _ in range(n_heads)]
    return params, cfg, ap, pp


def check_streaming_prefix_equivalence(seed: int = 0, cases: int = 12,
                                       tol: float = 1e-10) -> CheckResult:
    """Incrementally emitted rows equal the offline causal forward run on
    exactly the prefix each row could see."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for case in range(cases):
        mechanism = ("subsample", "mean_pool", "attn_pool", "attn_pool_pp")[case % 4]
        m = int(rng.integers(2, 6))
        window = RestrictionWindow(int(rng.integers(0, 5)), int(rng.integers(0, 3)))
        params, cfg, ap, pp = _streaming_setup(rng, mechanism=mechanism, m=m)
        n = int(rng.integers(2 * m + 2, 4 * m + 6))
        x = rng.normal(size=(n, params.d_model))
        stream = StreamingDilatedAttention(params, window, cfg, ap, pp)
        emitted = []
        for t in range(n):
            emitted.extend(stream.push(x[t]))
        for row_index, row in emitted:  # rows emitted mid-stream, full look-ahead
            prefix = x[:row_index + window.look_ahead + 1]
            offline = dilated_mha_forward(prefix, params, window, cfg, ap, pp,
                                          causal=True)
            worst = max(worst, float(np.abs(row - offline[row_index]).max()))
        emitted.extend(stream.finish())
        offline_full = dilated_mha_forward(x, params, window, cfg, ap, pp, causal=True)
        got = np.vstack([row for _, row in sorted(emitted)])
        worst = max(worst, float(np.abs(got - offline_full).max()))
    return CheckResult("streaming[prefix_equivalence]", worst <= tol, worst,
                       f"{cases} cases")


def check_streaming_causality(seed: int = 0, cases: int = 8) -> CheckResult:
    """Perturbing frames beyond a row's look-ahead never changes it (exact)."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(cases):
        m = int(rng.integers(2, 5))
        window = RestrictionWindow(int(rng.integers(0, 4)), int(rng.integers(0, 3)))
        params, cfg, ap, pp = _streaming_setup(rng, mechanism="attn_pool_pp", m=m)
        n = int(rng.integers(2 * m + 3, 3 * m + 8))
        x = rng.normal(size=(n, params.d_model))
        cut = int(rng.integers(1, n - 1))  # rows emitted before the perturbed tail
        perturbed = x.copy()
        perturbed[cut + window.look_ahead + 1:] += rng.normal(
            size=perturbed[cut + window.look_ahead + 1:].shape) * 10.0

        def rows_up_to(data, last):
            stream = StreamingDilatedAttention(params, window, cfg, ap, pp)
            collected = {}
            for t in range(data.shape[0]):
                for idx, row in stream.push(data[t]):
                    collected[idx] = row
            for idx, row in stream.finish():
                collected[idx] = row
            return [collected[i] for i in range(last + 1)]

        base = rows_up_to(x, cut)
        other = rows_up_to(perturbed, cut)
        for a, b in zip(base, other):
            if not np.array_equal(a, b):
                worst = max(worst, float(np.abs(a - b).max()))
    return CheckResult("streaming[causality_exact]", worst == 0.0, worst,
                       f"{cases} cases")


def check_streaming_costs() -> list[CheckResult]:
    """Dilated per-frame cost beats the unbounded-look-back baseline once at
    least two chunks of past audio exist; ratios grow with the past."""
    query = CostQuery(310, 512, "dilated", look_back=9, look_ahead=1,
                      chunk_size=15, mechanism="attn_pool_pp", pool_heads=2,
                      bottleneck_dim=16)
    frame_ms = 40.0
    bad = 0
    for past_frames in range(2 * query.chunk_size, 1200, 7):
        report = streaming_report(past_frames * frame_ms / 1000.0, frame_ms, query)
        if not report.dilated < report.baseline:
            bad += 1
    four = streaming_report(4.0, frame_ms, query, chunk_event=True)
    eight = streaming_report(8.0, frame_ms, query, chunk_event=True)
    monotone = (eight.ratio > four.ratio
                and four.ratio > four.ratio_with_chunk
                and eight.ratio > eight.ratio_with_chunk)
    return [
        CheckResult("streaming[cost_below_baseline_past_2M]", bad == 0, float(bad)),
        CheckResult("streaming[ratios_ordered]", monotone,
                    0.0 if monotone else 1.0,
                    f"4s ratio={four.ratio:.2f} 8s ratio={eight.ratio:.2f}"),
    ]


# ----------------------------------------------------------------------
# suite wiring
# ----------------------------------------------------------------------

def run_suite(name: str, seed: int = 0) -> list[CheckResult]:
    if name == "oracle":
        return (check_assembly_equivalence(seed)
                + check_window_collapse(seed)
                + check_reduction_identities(seed))
    if name == "gradients":
        return [check_attention_gradients(seed), check_pooling_gradients(seed)]
    if name == "complexity":
        return check_instrumented_counts(seed)
    if name == "streaming":
        return ([check_streaming_prefix_equivalence(seed),
                 check_streaming_causality(seed)]
                + check_streaming_costs())
    if name == "all":
        out = []
        for suite in ("oracle", "gradients", "complexity", "streaming"):
            out.extend(run_suite(suite, seed))
        return out
    raise ValueError(f"unknown suite {name!r}")
