"""Forward-only transformer encoder stack with selectable self-attention
type, deterministic seeded initialization, and checksummed weight files."""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass

import numpy as np

from .attention import (
    FeedForwardParams,
    HeadParams,
    MhaParams,
    RestrictionWindow,
    ff_forward,
    mha_forward,
    restricted_mha_forward,
)
from .dilation import ApParams, DilationConfig, PpParams, dilated_mha_forward
from .numerics import (
    MultiplyLedger,
    as_matrix,
    layer_norm,
    scaled_init_std,
    sinusoidal_pe,
)

ATTENTION_TYPES = ("full", "restricted", "dilated")

WEIGHT_MAGIC = b"DSAW"
WEIGHT_FORMAT_VERSION = 1

_MECHANISM_CODES = {"none": 0, "subsample": 1, "mean_pool": 2,
                    "attn_pool": 3, "attn_pool_pp": 4}
_MECHANISM_FROM_CODE = {v: k for k, v in _MECHANISM_CODES.items()}
_ATTENTION_CODES = {t: i for i, t in enumerate(ATTENTION_TYPES)}
_ATTENTION_FROM_CODE = {v: k for k, v in _ATTENTION_CODES.items()}


class WeightFileError(Exception):
    """Unreadable or malformed weight file."""


class InvalidMagicError(WeightFileError):
    """File does not start with the weight-file magic."""


class ChecksumError(WeightFileError):
    """Payload checksum failed or the file is truncated."""


class ConfigMismatchError(WeightFileError):
    """Stored weights do not match the expected configuration."""


@dataclass(frozen=True)
class EncoderConfig:
    """Everything needed to build and run one encoder."""

    n_layers: int
    d_model: int
    d_ff: int
    n_heads: int
    attention_type: str
    window: RestrictionWindow
    dilation: DilationConfig
    input_dim: int
    seed: int

    def __post_init__(self):
        if self.attention_type not in ATTENTION_TYPES:
            raise ValueError(
                f"unknown attention type {self.attention_type!r}, "
                f"expected one of {ATTENTION_TYPES}")
        if self.n_layers < 0:
            raise ValueError(f"n_layers must be >= 0, got {self.n_layers}")
        if self.d_model < 2 or self.d_model % 2 != 0:
            raise ValueError(
                f"d_model must be a positive even number (positional "
                f"encodings), got {self.d_model}")
        if self.d_model % self.n_heads != 0:
            raise ValueError(
                f"d_model={self.d_model} must be divisible by n_heads={self.n_heads}")
        if self.d_ff < 1:
            raise ValueError(f"d_ff must be >= 1, got {self.d_ff}")
        if self.input_dim < 1:
            raise ValueError(f"input_dim must be >= 1, got {self.input_dim}")
        if not 0 <= self.seed < 2 ** 32:
            raise ValueError(f"seed must fit in 32 bits, got {self.seed}")

    @property
    def d_head(self) -> int:
        return self.d_model // self.n_heads

    @property
    def needs_pooling_params(self) -> bool:
        return (self.attention_type == "dilated"
                and self.dilation.uses_attention_pooling)

    @property
    def needs_post_processing(self) -> bool:
        return (self.attention_type == "dilated"
                and self.dilation.mechanism == "attn_pool_pp")


@dataclass(frozen=True, eq=False)
class LayerWeights:
    mha: MhaParams
    ff: FeedForwardParams
    norm1_gain: np.ndarray
    norm1_bias: np.ndarray
    norm2_gain: np.ndarray
    norm2_bias: np.ndarray
    ap: tuple[ApParams, ...] | None
    pp: tuple[PpParams, ...] | None


@dataclass(frozen=True, eq=False)
class EncoderWeights:
    config: EncoderConfig
    input_projection: np.ndarray
    layers: tuple[LayerWeights, ...]


def init_weights(cfg: EncoderConfig) -> EncoderWeights:
    """Seeded Gaussian init: std 1/sqrt(d_model) for every projection,
    zeros for biases, ones/zeros for layer-norm gains/biases. Tensors are
    drawn in declaration order, so the result is bit-reproducible per seed."""
    rng = np.random.default_rng(cfg.seed)
    std = scaled_init_std(cfg.d_model)

    def draw(rows, cols):
        return rng.normal(0.0, std, size=(rows, cols))

    input_projection = draw(cfg.input_dim, cfg.d_model)
    layers = []
    for _ in range(cfg.n_layers):
        heads = tuple(
            HeadParams(draw(cfg.d_model, cfg.d_head),
                       draw(cfg.d_model, cfg.d_head),
                       draw(cfg.d_model, cfg.d_head))
            for _ in range(cfg.n_heads))
        w_h = draw(cfg.n_heads * cfg.d_head, cfg.d_model)
        ff = FeedForwardParams(
            draw(cfg.d_model, cfg.d_ff), np.zeros(cfg.d_ff),
            draw(cfg.d_ff, cfg.d_model), np.zeros(cfg.d_model))
        ap = pp = None
        if cfg.needs_pooling_params:
            ap = tuple(ApParams(draw(cfg.dilation.pool_heads, cfg.d_head))
                       for _ in range(cfg.n_heads))
        if cfg.needs_post_processing:
            d_in = cfg.dilation.bottleneck_dim
            joined = cfg.dilation.pool_heads * cfg.d_head
            pp = tuple(
                PpParams(
                    value_ff=FeedForwardParams(
                        draw(joined, d_in), np.zeros(d_in),
                        draw(d_in, cfg.d_head), np.zeros(cfg.d_head)),
                    key_ff=FeedForwardParams(
                        draw(joined, d_in), np.zeros(d_in),
                        draw(d_in, cfg.d_head), np.zeros(cfg.d_head)))
                for _ in range(cfg.n_heads))
        layers.append(LayerWeights(
            mha=MhaParams(heads, w_h), ff=ff,
            norm1_gain=np.ones(cfg.d_model), norm1_bias=np.zeros(cfg.d_model),
            norm2_gain=np.ones(cfg.d_model), norm2_bias=np.zeros(cfg.d_model),
            ap=ap, pp=pp))
    return EncoderWeights(cfg, input_projection, tuple(layers))


def encoder_forward(x, weights: EncoderWeights,
                    ledger: MultiplyLedger | None = None) -> np.ndarray:
    """Input projection plus positional encodings, then pre-norm layers of
    residual self-attention and residual feed-forward."""
    cfg = weights.config
    x = as_matrix(x, "input")
    if x.shape[1] != cfg.input_dim:
        raise ValueError(
            f"input has {x.shape[1]} features, config expects {cfg.input_dim}")
    h = x @ weights.input_projection + sinusoidal_pe(x.shape[0], cfg.d_model)
    for layer in weights.layers:
        normed = layer_norm(h, layer.norm1_gain, layer.norm1_bias)
        if cfg.attention_type == "full":
            att = mha_forward(normed, normed, layer.mha, ledger)
        elif cfg.attention_type == "restricted":
            att = restricted_mha_forward(normed, layer.mha, cfg.window, ledger)
        else:
            att = dilated_mha_forward(
                normed, layer.mha, cfg.window, cfg.dilation,
                list(layer.ap) if layer.ap else None,
                list(layer.pp) if layer.pp else None, ledger)
        h = h + att
        normed = layer_norm(h, layer.norm2_gain, layer.norm2_bias)
        h = h + ff_forward(normed, layer.ff)
    return h


def _config_block(cfg: EncoderConfig) -> bytes:
    fields = (
        cfg.n_layers, cfg.d_model, cfg.d_ff, cfg.n_heads,
        _ATTENTION_CODES[cfg.attention_type],
        cfg.window.look_back, cfg.window.look_ahead,
        _MECHANISM_CODES[cfg.dilation.mechanism],
        cfg.dilation.chunk_size, cfg.dilation.pool_heads,
        cfg.dilation.bottleneck_dim, cfg.input_dim, cfg.seed,
    )
    return struct.pack("<13I", *fields)


def _config_from_block(block: bytes) -> EncoderConfig:
    (n_layers, d_model, d_ff, n_heads, att_code, look_back, look_ahead,
     mech_code, chunk, pool_heads, d_in, input_dim, seed) = struct.unpack("<13I", block)
    if att_code not in _ATTENTION_FROM_CODE:
        raise WeightFileError(f"unknown attention type code {att_code}")
    if mech_code not in _MECHANISM_FROM_CODE:
        raise WeightFileError(f"unknown mechanism code {mech_code}")
    return EncoderConfig(
        n_layers=n_layers, d_model=d_model, d_ff=d_ff, n_heads=n_heads,
        attention_type=_ATTENTION_FROM_CODE[att_code],
        window=RestrictionWindow(look_back, look_ahead),
        dilation=DilationConfig(_MECHANISM_FROM_CODE[mech_code], chunk,
                                pool_heads, d_in),
        input_dim=input_dim, seed=seed)


def _named_tensors(weights: EncoderWeights):
    """Every tensor with a stable name, in declaration (= file) order."""
    yield "input_projection", weights.input_projection
    for e, layer in enumerate(weights.layers):
        yield f"layer{e}.norm1_gain", layer.norm1_gain
        yield f"layer{e}.norm1_bias", layer.norm1_bias
        for i, head in enumerate(layer.mha.heads):
            yield f"layer{e}.head{i}.w_q", head.w_q
            yield f"layer{e}.head{i}.w_k", head.w_k
            yield f"layer{e}.head{i}.w_v", head.w_v
        yield f"layer{e}.w_h", layer.mha.w_h
        yield f"layer{e}.norm2_gain", layer.norm2_gain
        yield f"layer{e}.norm2_bias", layer.norm2_bias
        yield f"layer{e}.ff.w1", layer.ff.w1
        yield f"layer{e}.ff.b1", layer.ff.b1
        yield f"layer{e}.ff.w2", layer.ff.w2
        yield f"layer{e}.ff.b2", layer.ff.b2
        if layer.ap is not None:
            for i, ap in enumerate(layer.ap):
                yield f"layer{e}.head{i}.pool_queries", ap.query_embeddings
        if layer.pp is not None:
            for i, pp in enumerate(layer.pp):
                for branch in ("value", "key"):
                    ff = pp.value_ff if branch == "value" else pp.key_ff
                    yield f"layer{e}.head{i}.pp_{branch}.w1", ff.w1
                    yield f"layer{e}.head{i}.pp_{branch}.b1", ff.b1
                    yield f"layer{e}.head{i}.pp_{branch}.w2", ff.w2
                    yield f"layer{e}.head{i}.pp_{branch}.b2", ff.b2


def save_weights(weights: EncoderWeights, path) -> None:
    """Write magic, format version, config block, tensors as little-endian
    float64 in declaration order, then a CRC-32 of the payload."""
    payload = bytearray(_config_block(weights.config))
    for _, tensor in _named_tensors(weights):
        payload += np.ascontiguousarray(tensor, dtype="<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(WEIGHT_MAGIC)
        fh.write(struct.pack("<H", WEIGHT_FORMAT_VERSION))
        fh.write(payload)
        fh.write(struct.pack("<I", zlib.crc32(bytes(payload))))


def load_weights(path, expected_config: EncoderConfig | None = None) -> EncoderWeights:
    """Read a weight file back, verifying magic, checksum, and (optionally)
    that it matches an expected configuration tensor by tensor."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(WEIGHT_MAGIC) + 2 + 4:
        raise InvalidMagicError(f"{path}: too short to be a weight file")
    if blob[:4] != WEIGHT_MAGIC:
        raise InvalidMagicError(
            f"{path}: bad magic {blob[:4]!r}, expected {WEIGHT_MAGIC!r}")
    (version,) = struct.unpack("<H", blob[4:6])
    if version != WEIGHT_FORMAT_VERSION:
        raise WeightFileError(
            f"{path}: unsupported format version {version}")
    payload, (stored_crc,) = blob[6:-4], struct.unpack("<I", blob[-4:])
    if zlib.crc32(payload) != stored_crc:
        raise ChecksumError(f"{path}: checksum mismatch (file corrupt or truncated)")
    if len(payload) < 52:
        raise ChecksumError(f"{path}: payload truncated before config block")
    cfg = _config_from_block(payload[:52])

    skeleton = _zero_weights(cfg)
    offset = 52
    tensors = {}
    for name, tensor in _named_tensors(skeleton):
        nbytes = tensor.size * 8
        if offset + nbytes > len(payload):
            raise ChecksumError(f"{path}: payload truncated inside tensor {name}")
        tensors[name] = np.frombuffer(
            payload, dtype="<f8", count=tensor.size, offset=offset,
        ).astype(np.float64).reshape(tensor.shape)
        offset += nbytes
    if offset != len(payload):
        raise WeightFileError(
            f"{path}: {len(payload) - offset} unexpected trailing payload bytes")

    loaded = _assemble_weights(cfg, tensors)
    if expected_config is not None and expected_config != cfg:
        _raise_config_mismatch(path, expected_config, loaded)
    return loaded


def _raise_config_mismatch(path, expected: EncoderConfig,
                           loaded: EncoderWeights) -> None:
    expected_shapes = {name: t.shape for name, t in _named_tensors(_zero_weights(expected))}
    for name, tensor in _named_tensors(loaded):
        want = expected_shapes.pop(name, None)
        if want is None:
            raise ConfigMismatchError(
                f"{path}: file contains tensor {name} absent from the expected config")
        if want != tensor.shape:
            raise ConfigMismatchError(
                f"{path}: tensor {name} has shape {tensor.shape}, "
                f"expected {want}")
    if expected_shapes:
        missing = next(iter(expected_shapes))
        raise ConfigMismatchError(
            f"{path}: expected tensor {missing} is missing from the file")
    # identical tensor layout, so the difference is a non-shape field
    raise ConfigMismatchError(
        f"{path}: stored config {loaded.config} differs from expected {expected}")


def _zero_weights(cfg: EncoderConfig) -> EncoderWeights:
    """Shape skeleton used to drive (de)serialization."""
    def z(*shape):
        return np.zeros(shape)

    layers = []
    for _ in range(cfg.n_layers):
        heads = tuple(
            HeadParams(z(cfg.d_model, cfg.d_head), z(cfg.d_model, cfg.d_head),
                       z(cfg.d_model, cfg.d_head))
            for _ in range(cfg.n_heads))
        ap = pp = None
        if cfg.needs_pooling_params:
            ap = tuple(ApParams(z(cfg.dilation.pool_heads, cfg.d_head))
                       for _ in range(cfg.n_heads))
        if cfg.needs_post_processing:
            d_in = cfg.dilation.bottleneck_dim
            joined = cfg.dilation.pool_heads * cfg.d_head
            pp = tuple(
                PpParams(
                    value_ff=FeedForwardParams(z(joined, d_in), z(d_in),
                                               z(d_in, cfg.d_head), z(cfg.d_head)),
                    key_ff=FeedForwardParams(z(joined, d_in), z(d_in),
                                             z(d_in, cfg.d_head), z(cfg.d_head)))
                for _ in range(cfg.n_heads))
        layers.append(LayerWeights(
            mha=MhaParams(heads, z(cfg.n_heads * cfg.d_head, cfg.d_model)),
            ff=FeedForwardParams(z(cfg.d_model, cfg.d_ff), z(cfg.d_ff),
                                 z(cfg.d_ff, cfg.d_model), z(cfg.d_model)),
            norm1_gain=z(cfg.d_model), norm1_bias=z(cfg.d_model),
            norm2_gain=z(cfg.d_model), norm2_bias=z(cfg.d_model),
            ap=ap, pp=pp))
    return EncoderWeights(cfg, z(cfg.input_dim, cfg.d_model), tuple(layers))


def _assemble_weights(cfg: EncoderConfig, tensors: dict[str, np.ndarray]) -> EncoderWeights:
    layers = []
    for e in range(cfg.n_layers):
        heads = tuple(
            HeadParams(tensors[f"layer{e}.head{i}.w_q"],
                       tensors[f"layer{e}.head{i}.w_k"],
                       tensors[f"layer{e}.head{i}.w_v"])
            for i in range(cfg.n_heads))
        ap = pp = None
        if cfg.needs_pooling_params:
            ap = tuple(ApParams(tensors[f"layer{e}.head{i}.pool_queries"])
                       for i in range(cfg.n_heads))
        if cfg.needs_post_processing:
            pp = tuple(
                PpParams(
                    value_ff=FeedForwardParams(
                        tensors[f"layer{e}.head{i}.pp_value.w1"],
                        tensors[f"layer{e}.head{i}.pp_value.b1"],
                        tensors[f"layer{e}.head{i}.pp_value.w2"],
                        tensors[f"layer{e}.head{i}.pp_value.b2"]),
                    key_ff=FeedForwardParams(
                        tensors[f"layer{e}.head{i}.pp_key.w1"],
                        tensors[f"layer{e}.head{i}.pp_key.b1"],
                        tensors[f"layer{e}.head{i}.pp_key.w2"],
                        tensors[f"layer{e}.head{i}.pp_key.b2"]))
                for i in range(cfg.n_heads))
        layers.append(LayerWeights(
            mha=MhaParams(heads, tensors[f"layer{e}.w_h"]),
            ff=FeedForwardParams(tensors[f"layer{e}.ff.w1"], tensors[f"layer{e}.ff.b1"],
                                 tensors[f"layer{e}.ff.w2"], tensors[f"layer{e}.ff.b2"]),
            norm1_gain=tensors[f"layer{e}.norm1_gain"],
            norm1_bias=tensors[f"layer{e}.norm1_bias"],
            norm2_gain=tensors[f"layer{e}.norm2_gain"],
            norm2_bias=tensors[f"layer{e}.norm2_bias"],
            ap=ap, pp=pp))
    return EncoderWeights(cfg, tensors["input_projection"], tuple(layers))
