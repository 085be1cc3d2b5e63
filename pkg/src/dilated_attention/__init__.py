"""Windowed self-attention with low-frame-rate dilation sequences.

Restricted self-attention keeps full resolution near each query frame; a
summary of the whole sequence (one row per chunk, by subsampling, mean
pooling, or attention pooling with optional post-processing) is appended to
every query's keys and values so distant context stays reachable at a
fraction of the full quadratic cost. The package also ships the exact
multiplication-count model behind those savings, a verification harness,
and a small CLI (``dsa``).
"""

from .attention import (
    FeedForwardParams,
    HeadParams,
    MhaParams,
    RestrictionWindow,
    attention_backward,
    ff_forward,
    mha_forward,
    restricted_mha_forward,
    scaled_dot_attention,
)
from .complexity import (
    CostQuery,
    CostReport,
    CostTable,
    PerFrameCost,
    estimate_exact,
    estimate_closed_form,
    streaming_report,
    table_generate,
)
from .dilation import (
    ApParams,
    ChunkingPlan,
    DilationConfig,
    DilationSequences,
    PpParams,
    StreamingDilatedAttention,
    attn_pool_embedding_grad,
    build_dilation,
    dilate_attn_pool,
    dilate_mean_pool,
    dilate_subsample,
    dilated_head_forward,
    dilated_mha_forward,
    post_process,
    split_chunks,
)
from .encoder import (
    EncoderConfig,
    EncoderWeights,
    encoder_forward,
    init_weights,
    load_weights,
    save_weights,
)
from .estimator import DilatedAttentionEncoder
from .numerics import (
    MultiplyLedger,
    concat_feature,
    concat_time,
    finite_diff_grad,
    layer_norm,
    matmul,
    relu,
    row_softmax,
    seeded_gaussian,
    sinusoidal_pe,
)

__version__ = "0.1.0"

__all__ = [
    "ApParams", "ChunkingPlan", "CostQuery", "CostReport", "CostTable",
    "DilatedAttentionEncoder", "DilationConfig", "DilationSequences",
    "EncoderConfig", "EncoderWeights", "FeedForwardParams", "HeadParams",
    "MhaParams", "MultiplyLedger", "PerFrameCost", "PpParams",
    "RestrictionWindow", "StreamingDilatedAttention",
    "attention_backward", "attn_pool_embedding_grad", "build_dilation",
    "concat_feature", "concat_time", "dilate_attn_pool", "dilate_mean_pool",
    "dilate_subsample", "dilated_head_forward", "dilated_mha_forward",
    "encoder_forward", "estimate_exact", "estimate_closed_form", "ff_forward",
    "finite_diff_grad", "init_weights", "layer_norm", "load_weights",
    "matmul", "mha_forward", "post_process", "relu",
    "restricted_mha_forward", "row_softmax", "save_weights",
    "scaled_dot_attention", "seeded_gaussian", "sinusoidal_pe",
    "split_chunks", "streaming_report", "table_generate",
]
