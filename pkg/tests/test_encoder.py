import numpy as np
import pytest

from dilated_attention.attention import RestrictionWindow
from dilated_attention.dilation import DilationConfig
from dilated_attention.encoder import (
    ChecksumError,
    ConfigMismatchError,
    EncoderConfig,
    InvalidMagicError,
    encoder_forward,
    init_weights,
    load_weights,
    save_weights,
)
from dilated_attention.numerics import layer_norm, sinusoidal_pe
from dilated_attention.verify import oracle_dilated_head


def make_config(attention_type="restricted", n_layers=1, d_model=8, d_ff=12,
                n_heads=2, look_back=2, look_ahead=1, mechanism="none",
                chunk=3, pool_heads=2, d_in=4, input_dim=5, seed=0):
    return EncoderConfig(
        n_layers=n_layers, d_model=d_model, d_ff=d_ff, n_heads=n_heads,
        attention_type=attention_type,
        window=RestrictionWindow(look_back, look_ahead),
        dilation=DilationConfig(mechanism, chunk, pool_heads, d_in),
        input_dim=input_dim, seed=seed)


class TestInitWeights:
    def test_same_seed_bit_identical(self):
        cfg = make_config(attention_type="dilated", mechanism="attn_pool_pp")
        a = init_weights(cfg)
        b = init_weights(cfg)
        assert np.array_equal(a.input_projection, b.input_projection)
        assert np.array_equal(a.layers[0].mha.heads[1].w_v,
                              b.layers[0].mha.heads[1].w_v)
        assert np.array_equal(a.layers[0].ap[0].query_embeddings,
                              b.layers[0].ap[0].query_embeddings)

    def test_different_seeds_differ(self):
        a = init_weights(make_config(seed=1))
        b = init_weights(make_config(seed=2))
        assert not np.array_equal(a.input_projection, b.input_projection)

    def test_projection_std_near_target(self):
        cfg = make_config(d_model=64, d_ff=64, input_dim=400, n_heads=2)
        w = init_weights(cfg)
        target = 1.0 / np.sqrt(64)
        assert abs(w.input_projection.std() - target) / target < 0.05

    def test_biases_zero_gains_one(self):
        w = init_weights(make_config())
        layer = w.layers[0]
        assert np.array_equal(layer.ff.b1, np.zeros(12))
        assert np.array_equal(layer.norm1_gain, np.ones(8))
        assert np.array_equal(layer.norm2_bias, np.zeros(8))


class TestEncoderForward:
    def test_zero_layers_returns_projected_input(self):
        cfg = make_config(n_layers=0)
        w = init_weights(cfg)
        rng = np.random.default_rng(0)
        x = rng.normal(size=(7, cfg.input_dim))
        got = encoder_forward(x, w)
        want = x @ w.input_projection + sinusoidal_pe(7, cfg.d_model)
        assert np.array_equal(got, want)

    def test_output_shape(self):
        cfg = make_config(n_layers=2)
        w = init_weights(cfg)
        x = np.random.default_rng(1).normal(size=(9, cfg.input_dim))
        assert encoder_forward(x, w).shape == (9, cfg.d_model)

    def test_full_equals_restricted_with_covering_window(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=(6, 5))
        full = encoder_forward(x, init_weights(make_config("full")))
        covering = encoder_forward(
            x, init_weights(make_config("restricted", look_back=10, look_ahead=10)))
        assert np.abs(full - covering).max() < 1e-9

    def test_toy_dilated_matches_straightline_oracle(self):
        cfg = make_config("dilated", mechanism="attn_pool_pp", chunk=3,
                          pool_heads=2, d_in=4, look_back=2, look_ahead=1)
        w = init_weights(cfg)
        rng = np.random.default_rng(3)
        x = rng.normal(size=(10, cfg.input_dim))

        h = x @ w.input_projection + sinusoidal_pe(10, cfg.d_model)
        layer = w.layers[0]
        normed = layer_norm(h, layer.norm1_gain, layer.norm1_bias)
        blocks = [
            oracle_dilated_head(normed, head, cfg.window.look_back,
                                cfg.window.look_ahead, "attn_pool_pp",
                                cfg.dilation.chunk_size,
                                layer.ap[i].query_embeddings, layer.pp[i])
            for i, head in enumerate(layer.mha.heads)
        ]
        h = h + np.concatenate(blocks, axis=1) @ layer.mha.w_h
        normed = layer_norm(h, layer.norm2_gain, layer.norm2_bias)
        want = h + (np.maximum(normed @ layer.ff.w1 + layer.ff.b1, 0.0)
                    @ layer.ff.w2 + layer.ff.b2)

        assert np.abs(encoder_forward(x, w) - want).max() < 1e-8

    def test_deterministic_repeat_calls(self):
        cfg = make_config("dilated", mechanism="mean_pool")
        w = init_weights(cfg)
        x = np.random.default_rng(4).normal(size=(8, cfg.input_dim))
        assert np.array_equal(encoder_forward(x, w), encoder_forward(x, w))

    def test_dilated_sees_distant_frames_restricted_does_not(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=(16, 5))
        perturbed = x.copy()
        perturbed[15] += 1.0
        probe_row = 2  # window reaches frames 0..3 only; frame 15 is distant
        shared = dict(look_back=2, look_ahead=1, chunk=4)
        restricted = init_weights(make_config("restricted", **shared))
        dilated = init_weights(make_config("dilated", mechanism="mean_pool", **shared))
        r_diff = (encoder_forward(perturbed, restricted)
                  - encoder_forward(x, restricted))[probe_row]
        d_diff = (encoder_forward(perturbed, dilated)
                  - encoder_forward(x, dilated))[probe_row]
        assert np.array_equal(r_diff, np.zeros_like(r_diff))
        assert np.abs(d_diff).max() > 1e-12

    def test_finite_outputs_across_seeds(self):
        rng = np.random.default_rng(6)
        x = rng.normal(size=(5, 5))
        for seed in range(1000):
            w = init_weights(make_config(seed=seed))
            assert np.isfinite(encoder_forward(x, w)).all()

    def test_wrong_input_width_rejected(self):
        w = init_weights(make_config(input_dim=5))
        with pytest.raises(ValueError):
            encoder_forward(np.ones((4, 6)), w)


class TestConfigValidation:
    def test_divisibility(self):
        with pytest.raises(ValueError):
            make_config(d_model=10, n_heads=4)

    def test_odd_d_model(self):
        with pytest.raises(ValueError):
            make_config(d_model=7, n_heads=1)

    def test_bad_attention_type(self):
        with pytest.raises(ValueError):
            make_config(attention_type="global")

    def test_seed_range(self):
        with pytest.raises(ValueError):
            make_config(seed=2 ** 32)


class TestWeightFiles:
    def test_round_trip_bit_identical(self, tmp_path):
        cfg = make_config("dilated", mechanism="attn_pool_pp", n_layers=2)
        w = init_weights(cfg)
        path = tmp_path / "weights.bin"
        save_weights(w, path)
        loaded = load_weights(path)
        assert loaded.config == cfg
        assert np.array_equal(loaded.input_projection, w.input_projection)
        for got, want in zip(loaded.layers, w.layers):
            assert np.array_equal(got.mha.w_h, want.mha.w_h)
            assert np.array_equal(got.ff.w1, want.ff.w1)
            for g_pp, w_pp in zip(got.pp, want.pp):
                assert np.array_equal(g_pp.key_ff.w2, w_pp.key_ff.w2)
        x = np.random.default_rng(0).normal(size=(7, cfg.input_dim))
        assert np.array_equal(encoder_forward(x, loaded), encoder_forward(x, w))

    def test_truncated_file_fails_checksum(self, tmp_path):
        path = tmp_path / "weights.bin"
        save_weights(init_weights(make_config()), path)
        blob = path.read_bytes()
        path.write_bytes(blob[:len(blob) // 2])
        with pytest.raises(ChecksumError):
            load_weights(path)

    def test_corrupt_payload_fails_checksum(self, tmp_path):
        path = tmp_path / "weights.bin"
        save_weights(init_weights(make_config()), path)
        blob = bytearray(path.read_bytes())
        blob[100] ^= 0xFF
        path.write_bytes(bytes(blob))
        with pytest.raises(ChecksumError):
            load_weights(path)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "weights.bin"
        path.write_bytes(b"NOPE" + b"\x00" * 64)
        with pytest.raises(InvalidMagicError):
            load_weights(path)

    def test_config_mismatch_names_tensor(self, tmp_path):
        path = tmp_path / "weights.bin"
        save_weights(init_weights(make_config(input_dim=5)), path)
        with pytest.raises(ConfigMismatchError, match="input_projection"):
            load_weights(path, expected_config=make_config(input_dim=6))

    def test_non_shape_config_mismatch_still_rejected(self, tmp_path):
        path = tmp_path / "weights.bin"
        save_weights(init_weights(make_config(seed=1)), path)
        with pytest.raises(ConfigMismatchError):
            load_weights(path, expected_config=make_config(seed=2))

    def test_matching_expected_config_accepted(self, tmp_path):
        cfg = make_config()
        path = tmp_path / "weights.bin"
        save_weights(init_weights(cfg), path)
        assert load_weights(path, expected_config=cfg).config == cfg
