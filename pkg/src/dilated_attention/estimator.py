"""Scikit-learn style wrapper so the encoder composes with pipelines.

One "sample" is one time frame: ``X`` is an (n_frames, n_features) array
holding a single sequence, and ``transform`` returns the encoded
(n_frames, d_model) sequence. ``fit`` only validates hyperparameters and
materializes deterministic weights from the seed; it learns nothing from
the data beyond the input width.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError
from sklearn.utils import check_array

from .attention import RestrictionWindow
from .complexity import CostQuery, CostReport, estimate_closed_form
from .dilation import DilationConfig
from .encoder import EncoderConfig, encoder_forward, init_weights


class DilatedAttentionEncoder(BaseEstimator, TransformerMixin):
    """Transformer encoder with full, restricted, or dilated self-attention.

    Parameters mirror :class:`~dilated_attention.encoder.EncoderConfig`;
    ``d_ff`` defaults to ``4 * d_model`` when left unset.
    """

    def __init__(self, n_layers=2, d_model=64, d_ff=None, n_heads=4,
                 attention_type="dilated", look_back=8, look_ahead=8,
                 mechanism="attn_pool_pp", chunk_size=8, pool_heads=2,
                 bottleneck_dim=16, seed=0):
        self.n_layers = n_layers
        self.d_model = d_model
        self.d_ff = d_ff
        self.n_heads = n_heads
        self.attention_type = attention_type
        self.look_back = look_back
        self.look_ahead = look_ahead
        self.mechanism = mechanism
        self.chunk_size = chunk_size
        self.pool_heads = pool_heads
        self.bottleneck_dim = bottleneck_dim
        self.seed = seed

    def _build_config(self, input_dim: int) -> EncoderConfig:
        d_ff = 4 * self.d_model if self.d_ff is None else self.d_ff
        return EncoderConfig(
            n_layers=self.n_layers, d_model=self.d_model, d_ff=d_ff,
            n_heads=self.n_heads, attention_type=self.attention_type,
            window=RestrictionWindow(self.look_back, self.look_ahead),
            dilation=DilationConfig(self.mechanism, self.chunk_size,
                                    self.pool_heads, self.bottleneck_dim),
            input_dim=input_dim, seed=self.seed)

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        self.config_ = self._build_config(X.shape[1])
        self.weights_ = init_weights(self.config_)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X) -> np.ndarray:
        if not hasattr(self, "weights_"):
            raise NotFittedError(
                "This DilatedAttentionEncoder instance is not fitted yet.")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, but the encoder was fitted "
                f"with {self.n_features_in_}")
        return encoder_forward(X, self.weights_)

    def multiplication_count(self, n_frames: int) -> CostReport:
        """Closed-form multiplication count of one self-attention layer for a
        sequence of ``n_frames`` under the configured attention type."""
        if not hasattr(self, "config_"):
            raise NotFittedError(
                "This DilatedAttentionEncoder instance is not fitted yet.")
        cfg = self.config_
        return estimate_closed_form(CostQuery(
            n_frames=n_frames, d_model=cfg.d_model,
            attention_type=cfg.attention_type,
            look_back=cfg.window.look_back, look_ahead=cfg.window.look_ahead,
            chunk_size=cfg.dilation.chunk_size,
            mechanism=cfg.dilation.mechanism,
            pool_heads=cfg.dilation.pool_heads,
            bottleneck_dim=cfg.dilation.bottleneck_dim))
