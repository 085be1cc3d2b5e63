"""Feature-file formats and the JSON run configuration.

Binary feature files carry a magic, the frame count, the feature width,
then the payload row-major little-endian: ``DSA1`` stores 32-bit floats
(front-end features), ``DSA8`` stores 64-bit floats (encoder outputs). A
CSV file with one frame per line is accepted anywhere a feature file is
read.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .attention import RestrictionWindow
from .dilation import MECHANISMS, DilationConfig
from .encoder import ATTENTION_TYPES, EncoderConfig

FEATURE_MAGIC_F32 = b"DSA1"
FEATURE_MAGIC_F64 = b"DSA8"

PRECISIONS = ("float64", "float32")


class FeatureFileError(Exception):
    """Unreadable or malformed feature file."""


class RunConfigError(Exception):
    """Run configuration failed schema validation."""


def write_features(path, frames, bits: int = 64) -> None:
    """Write a feature matrix; ``bits`` selects the 32- or 64-bit format."""
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim != 2 or frames.shape[0] < 1 or frames.shape[1] < 1:
        raise FeatureFileError(
            f"feature payload must be a non-empty 2-D matrix, got shape {frames.shape}")
    if bits == 32:
        magic, dtype = FEATURE_MAGIC_F32, "<f4"
    elif bits == 64:
        magic, dtype = FEATURE_MAGIC_F64, "<f8"
    else:
        raise FeatureFileError(f"bits must be 32 or 64, got {bits}")
    with open(path, "wb") as fh:
        fh.write(magic)
        fh.write(struct.pack("<II", frames.shape[0], frames.shape[1]))
        fh.write(np.ascontiguousarray(frames, dtype=dtype).tobytes())


def read_features(path) -> np.ndarray:
    """Read a DSA1/DSA8 binary feature file or a CSV fallback as float64."""
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise FeatureFileError(f"{path}: {exc}") from exc
    if blob[:4] in (FEATURE_MAGIC_F32, FEATURE_MAGIC_F64):
        return _parse_binary(path, blob)
    return _parse_csv(path, blob)


def _parse_binary(path: Path, blob: bytes) -> np.ndarray:
    if len(blob) < 12:
        raise FeatureFileError(f"{path}: truncated header")
    magic = blob[:4]
    n_frames, n_features = struct.unpack("<II", blob[4:12])
    if n_frames < 1 or n_features < 1:
        raise FeatureFileError(
            f"{path}: invalid dimensions {n_frames} x {n_features}")
    itemsize = 4 if magic == FEATURE_MAGIC_F32 else 8
    expected = 12 + n_frames * n_features * itemsize
    if len(blob) != expected:
        raise FeatureFileError(
            f"{path}: payload is {len(blob) - 12} bytes, expected "
            f"{expected - 12} for {n_frames} x {n_features}")
    dtype = "<f4" if magic == FEATURE_MAGIC_F32 else "<f8"
    data = np.frombuffer(blob, dtype=dtype, count=n_frames * n_features, offset=12)
    return data.astype(np.float64).reshape(n_frames, n_features)


def _parse_csv(path: Path, blob: bytes) -> np.ndarray:
    try:
        text = blob.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FeatureFileError(
            f"{path}: neither a binary feature file nor UTF-8 CSV") from exc
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            rows.append([float(tok) for tok in line.split(",")])
        except ValueError as exc:
            raise FeatureFileError(f"{path}:{lineno}: {exc}") from exc
    if not rows:
        raise FeatureFileError(f"{path}: no frames found")
    width = len(rows[0])
    if width < 1 or any(len(r) != width for r in rows):
        raise FeatureFileError(f"{path}: rows have inconsistent widths")
    return np.asarray(rows, dtype=np.float64)


# JSON run configuration: key -> (required, validator description, check)
_INT_KEYS = {
    "e_layers": (True, lambda v: v >= 0),
    "d_model": (True, lambda v: v >= 2 and v % 2 == 0),
    "d_ff": (True, lambda v: v >= 1),
    "d_h": (True, lambda v: v >= 1),
    "input_dim": (True, lambda v: v >= 1),
    "seed": (True, lambda v: 0 <= v < 2 ** 32),
    "nu_lb": (False, lambda v: v >= 0),
    "nu_la": (False, lambda v: v >= 0),
    "chunk": (False, lambda v: v >= 1),
    "heads": (False, lambda v: v >= 1),
    "d_in": (False, lambda v: v >= 1),
}
_STR_KEYS = {
    "attention_type": ATTENTION_TYPES,
    "mechanism": MECHANISMS,
    "precision": PRECISIONS,
}


def load_run_config(path) -> tuple[EncoderConfig, str]:
    """Parse and validate a JSON run configuration.

    Returns the encoder configuration plus the precision flag. Unknown keys
    are rejected outright.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise RunConfigError(f"{path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise RunConfigError(f"{path}: invalid JSON: {exc}") from exc
    return parse_run_config(raw, source=str(path))


def parse_run_config(raw, source: str = "run config") -> tuple[EncoderConfig, str]:
    if not isinstance(raw, dict):
        raise RunConfigError(f"{source}: expected a JSON object")
    unknown = set(raw) - set(_INT_KEYS) - set(_STR_KEYS)
    if unknown:
        raise RunConfigError(f"{source}: unknown keys {sorted(unknown)}")
    for key, (required, check) in _INT_KEYS.items():
        if key not in raw:
            if required:
                raise RunConfigError(f"{source}: missing required key {key!r}")
            continue
        value = raw[key]
        if isinstance(value, bool) or not isinstance(value, int) or not check(value):
            raise RunConfigError(f"{source}: invalid value for {key!r}: {value!r}")
    for key, allowed in _STR_KEYS.items():
        if key in raw and raw[key] not in allowed:
            raise RunConfigError(
                f"{source}: {key!r} must be one of {list(allowed)}, got {raw[key]!r}")
    if "attention_type" not in raw:
        raise RunConfigError(f"{source}: missing required key 'attention_type'")

    attention_type = raw["attention_type"]
    if attention_type in ("restricted", "dilated"):
        for key in ("nu_lb", "nu_la"):
            if key not in raw:
                raise RunConfigError(
                    f"{source}: {attention_type} attention requires {key!r}")
    mechanism = raw.get("mechanism", "none")
    if attention_type == "dilated":
        if "mechanism" not in raw:
            raise RunConfigError(f"{source}: dilated attention requires 'mechanism'")
        if mechanism != "none" and "chunk" not in raw:
            raise RunConfigError(f"{source}: mechanism {mechanism!r} requires 'chunk'")
        if mechanism in ("attn_pool", "attn_pool_pp") and "heads" not in raw:
            raise RunConfigError(f"{source}: mechanism {mechanism!r} requires 'heads'")
        if mechanism == "attn_pool_pp" and "d_in" not in raw:
            raise RunConfigError(f"{source}: mechanism {mechanism!r} requires 'd_in'")

    try:
        cfg = EncoderConfig(
            n_layers=raw["e_layers"], d_model=raw["d_model"], d_ff=raw["d_ff"],
            n_heads=raw["d_h"], attention_type=attention_type,
            window=RestrictionWindow(raw.get("nu_lb", 0), raw.get("nu_la", 0)),
            dilation=DilationConfig(mechanism, raw.get("chunk", 1),
                                    raw.get("heads", 1), raw.get("d_in", 16)),
            input_dim=raw["input_dim"], seed=raw["seed"])
    except ValueError as exc:
        raise RunConfigError(f"{source}: {exc}") from exc
    return cfg, raw.get("precision", "float64")


def run_config_to_dict(cfg: EncoderConfig, precision: str = "float64") -> dict:
    """Inverse of :func:`parse_run_config`, handy for writing configs."""
    return {
        "e_layers": cfg.n_layers, "d_model": cfg.d_model, "d_ff": cfg.d_ff,
        "d_h": cfg.n_heads, "attention_type": cfg.attention_type,
        "nu_lb": cfg.window.look_back, "nu_la": cfg.window.look_ahead,
        "mechanism": cfg.dilation.mechanism, "chunk": cfg.dilation.chunk_size,
        "heads": cfg.dilation.pool_heads, "d_in": cfg.dilation.bottleneck_dim,
        "input_dim": cfg.input_dim, "seed": cfg.seed, "precision": precision,
    }
