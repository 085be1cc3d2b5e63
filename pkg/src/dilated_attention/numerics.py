"""Dense float64 kernels shared by every other module.

Sequences are plain 2-D numpy arrays: rows are time frames, columns are
feature dimensions. Verification paths run in float64 throughout; float32
is reserved for timing benchmarks.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

COUNT_ATTENTION_SCORES = "attention_scores"
COUNT_POST_PROCESS = "post_process"
COUNT_CATEGORIES = (COUNT_ATTENTION_SCORES, COUNT_POST_PROCESS)


class MultiplyLedger:
    """Tallies scalar multiplications of matrix/vector products.

    Only two categories are ever tallied, mirroring the convention the
    complexity tables are built on: query-key score products inside
    attention operations (``attention_scores``) and the matmuls of the
    dilation post-processing feed-forward (``post_process``). Input/output
    projections, value aggregation (weights times values), and encoder
    feed-forward products are deliberately excluded; that restriction is
    what makes the closed-form estimates and the instrumented counts agree
    exactly (see the complexity module).
    """

    def __init__(self, scope: Sequence[str] = COUNT_CATEGORIES):
        unknown = set(scope) - set(COUNT_CATEGORIES)
        if unknown:
            raise ValueError(f"unknown ledger categories: {sorted(unknown)}")
        self.scope = tuple(scope)
        self._counts = {category: 0 for category in COUNT_CATEGORIES}

    def add(self, count: int, category: str = COUNT_ATTENTION_SCORES) -> None:
        if count < 0:
            raise ValueError("multiplication count must be non-negative")
        if category not in self._counts:
            raise ValueError(f"unknown ledger category: {category!r}")
        if category in self.scope:
            self._counts[category] += int(count)

    @property
    def counted(self) -> int:
        return sum(self._counts.values())

    def by_category(self) -> dict[str, int]:
        return dict(self._counts)

    def reset(self) -> None:
        for category in self._counts:
            self._counts[category] = 0

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"MultiplyLedger(counted={self.counted}, {self._counts})"


def as_matrix(x, name: str = "matrix") -> np.ndarray:
    """Coerce to a 2-D float64 array, rejecting anything else."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    return arr


def as_vector(x, name: str = "vector") -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {arr.shape}")
    return arr


def matmul(a, b, ledger: MultiplyLedger | None = None, counted: bool = False,
           category: str = COUNT_ATTENTION_SCORES) -> np.ndarray:
    """Matrix product with optional multiplication accounting.

    When ``ledger`` is given and ``counted`` is set, ``rows * inner * cols``
    multiplications are attributed to ``category``.
    """
    a = as_matrix(a, "left operand")
    b = as_matrix(b, "right operand")
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"matmul dimension mismatch: {a.shape} x {b.shape}")
    if ledger is not None and counted:
        ledger.add(a.shape[0] * a.shape[1] * b.shape[1], category)
    return a @ b


def row_softmax(m) -> np.ndarray:
    """Row-wise softmax, stabilized by per-row max subtraction."""
    m = as_matrix(m, "softmax input")
    shifted = m - m.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def layer_norm(m, gain, bias, eps: float = 1e-12) -> np.ndarray:
    """Per-row normalization to zero mean / unit variance, then affine."""
    m = as_matrix(m, "layer_norm input")
    gain = as_vector(gain, "gain")
    bias = as_vector(bias, "bias")
    if gain.shape[0] != m.shape[1] or bias.shape[0] != m.shape[1]:
        raise ValueError(
            f"gain/bias lengths {gain.shape[0]}/{bias.shape[0]} do not match "
            f"{m.shape[1]} columns")
    mean = m.mean(axis=1, keepdims=True)
    var = np.square(m - mean).mean(axis=1, keepdims=True)
    return (m - mean) / np.sqrt(var + eps) * gain + bias


def sinusoidal_pe(n_frames: int, d_model: int) -> np.ndarray:
    """Sinusoidal positional encodings, zero-based frame index.

    Column 2i holds sin(n / 10000^(2i/d_model)), column 2i+1 the matching
    cosine.
    """
    if d_model <= 0 or d_model % 2 != 0:
        raise ValueError(f"d_model must be a positive even number, got {d_model}")
    if n_frames < 0:
        raise ValueError(f"n_frames must be non-negative, got {n_frames}")
    pos = np.arange(n_frames, dtype=np.float64)[:, None]
    half = np.arange(d_model // 2, dtype=np.float64)[None, :]
    angle = pos / np.power(10000.0, 2.0 * half / d_model)
    pe = np.empty((n_frames, d_model), dtype=np.float64)
    pe[:, 0::2] = np.sin(angle)
    pe[:, 1::2] = np.cos(angle)
    return pe


def relu(m) -> np.ndarray:
    return np.maximum(np.asarray(m, dtype=np.float64), 0.0)


def concat_time(matrices: Sequence[np.ndarray]) -> np.ndarray:
    """Stack matrices along the frame (row) axis; column counts must agree."""
    if not matrices:
        raise ValueError("concat_time requires at least one matrix")
    mats = [as_matrix(m, f"matrix {i}") for i, m in enumerate(matrices)]
    cols = {m.shape[1] for m in mats}
    if len(cols) != 1:
        raise ValueError(f"concat_time column mismatch: {[m.shape for m in mats]}")
    return np.concatenate(mats, axis=0)


def concat_feature(matrices: Sequence[np.ndarray]) -> np.ndarray:
    """Stack matrices along the feature (column) axis; row counts must agree."""
    if not matrices:
        raise ValueError("concat_feature requires at least one matrix")
    mats = [as_matrix(m, f"matrix {i}") for i, m in enumerate(matrices)]
    rows = {m.shape[0] for m in mats}
    if len(rows) != 1:
        raise ValueError(f"concat_feature row mismatch: {[m.shape for m in mats]}")
    return np.concatenate(mats, axis=1)


def seeded_gaussian(rows: int, cols: int, seed: int, std: float = 1.0) -> np.ndarray:
    """Deterministic Gaussian matrix; bit-identical for a fixed seed."""
    if rows < 0 or cols < 1:
        raise ValueError(f"invalid shape ({rows}, {cols})")
    return np.random.default_rng(seed).normal(0.0, std, size=(rows, cols))


def finite_diff_grad(f: Callable[[np.ndarray], float], x, h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of a scalar function, entry by entry.

    This is the independent oracle used by the gradient checks; it must not
    share code with any analytic backward pass.
    """
    if h <= 0:
        raise ValueError(f"step size must be positive, got {h}")
    x = np.array(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat_x = x.reshape(-1)
    flat_g = grad.reshape(-1)
    for i in range(flat_x.size):
        orig = flat_x[i]
        flat_x[i] = orig + h
        f_plus = float(f(x))
        flat_x[i] = orig - h
        f_minus = float(f(x))
        flat_x[i] = orig
        flat_g[i] = (f_plus - f_minus) / (2.0 * h)
    return grad


def scaled_init_std(d_model: int) -> float:
    """Initialization scale for projection matrices."""
    return 1.0 / math.sqrt(d_model)
