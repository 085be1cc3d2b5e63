import json
import struct

import numpy as np
import pytest

from dilated_attention.fileio import (
    FeatureFileError,
    RunConfigError,
    load_run_config,
    parse_run_config,
    read_features,
    run_config_to_dict,
    write_features,
)


def valid_config(**overrides):
    raw = {
        "e_layers": 1, "d_model": 8, "d_ff": 16, "d_h": 2,
        "attention_type": "dilated", "nu_lb": 2, "nu_la": 1,
        "mechanism": "attn_pool_pp", "chunk": 3, "heads": 2, "d_in": 4,
        "input_dim": 5, "seed": 0,
    }
    raw.update(overrides)
    return raw


class TestFeatureFiles:
    def test_f64_round_trip_bit_exact(self, tmp_path):
        path = tmp_path / "x.dsa8"
        frames = np.random.default_rng(0).normal(size=(9, 4))
        write_features(path, frames, bits=64)
        assert path.read_bytes()[:4] == b"DSA8"
        assert np.array_equal(read_features(path), frames)

    def test_f32_round_trip(self, tmp_path):
        path = tmp_path / "x.dsa1"
        frames = np.random.default_rng(1).normal(size=(5, 3))
        write_features(path, frames, bits=32)
        assert path.read_bytes()[:4] == b"DSA1"
        got = read_features(path)
        assert got.dtype == np.float64
        assert np.array_equal(got, frames.astype(np.float32).astype(np.float64))

    def test_csv_fallback(self, tmp_path):
        path = tmp_path / "x.csv"
        path.write_text("1.0,2.0\n3.0,4.5\n\n")
        assert np.array_equal(read_features(path), [[1.0, 2.0], [3.0, 4.5]])

    def test_truncated_payload_rejected(self, tmp_path):
        path = tmp_path / "bad.bin"
        path.write_bytes(b"DSA8" + struct.pack("<II", 4, 4) + b"\x00" * 10)
        with pytest.raises(FeatureFileError, match="payload"):
            read_features(path)

    def test_zero_dimensions_rejected(self, tmp_path):
        path = tmp_path / "bad.bin"
        path.write_bytes(b"DSA1" + struct.pack("<II", 0, 4))
        with pytest.raises(FeatureFileError, match="invalid dimensions"):
            read_features(path)

    def test_ragged_csv_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1.0,2.0\n3.0\n")
        with pytest.raises(FeatureFileError, match="widths"):
            read_features(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FeatureFileError):
            read_features(tmp_path / "absent.bin")

    def test_write_rejects_empty(self, tmp_path):
        with pytest.raises(FeatureFileError):
            write_features(tmp_path / "x.bin", np.zeros((0, 3)))


class TestRunConfig:
    def test_valid_config_parses(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(valid_config()))
        cfg, precision = load_run_config(path)
        assert cfg.n_layers == 1
        assert cfg.attention_type == "dilated"
        assert cfg.dilation.mechanism == "attn_pool_pp"
        assert precision == "float64"

    def test_unknown_keys_rejected(self):
        with pytest.raises(RunConfigError, match="unknown keys"):
            parse_run_config(valid_config(dropout=0.1))

    def test_missing_required_key(self):
        raw = valid_config()
        del raw["d_model"]
        with pytest.raises(RunConfigError, match="d_model"):
            parse_run_config(raw)

    def test_bad_value_types(self):
        with pytest.raises(RunConfigError):
            parse_run_config(valid_config(d_model="512"))
        with pytest.raises(RunConfigError):
            parse_run_config(valid_config(d_model=True))
        with pytest.raises(RunConfigError):
            parse_run_config(valid_config(d_model=7))

    def test_conditional_requirements(self):
        raw = valid_config()
        del raw["chunk"]
        with pytest.raises(RunConfigError, match="chunk"):
            parse_run_config(raw)
        raw = valid_config(attention_type="restricted")
        del raw["nu_lb"]
        with pytest.raises(RunConfigError, match="nu_lb"):
            parse_run_config(raw)

    def test_full_type_needs_no_window(self):
        raw = {"e_layers": 1, "d_model": 8, "d_ff": 16, "d_h": 2,
               "attention_type": "full", "input_dim": 5, "seed": 0}
        cfg, _ = parse_run_config(raw)
        assert cfg.attention_type == "full"

    def test_precision_flag(self):
        _, precision = parse_run_config(valid_config(precision="float32"))
        assert precision == "float32"
        with pytest.raises(RunConfigError):
            parse_run_config(valid_config(precision="bf16"))

    def test_round_trip_through_dict(self):
        cfg, precision = parse_run_config(valid_config())
        again, precision2 = parse_run_config(run_config_to_dict(cfg, precision))
        assert again == cfg and precision2 == precision

    def test_invalid_json_file(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text("{not json")
        with pytest.raises(RunConfigError, match="invalid JSON"):
            load_run_config(path)
