import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dilated_attention.numerics import (
    COUNT_POST_PROCESS,
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


def naive_matmul(a, b):
    """Independent triple-loop oracle."""
    out = np.zeros((a.shape[0], b.shape[1]))
    for i in range(a.shape[0]):
        for j in range(b.shape[1]):
            acc = 0.0
            for k in range(a.shape[1]):
                acc += a[i, k] * b[k, j]
            out[i, j] = acc
    return out


class TestMatmul:
    def test_identity(self):
        m = np.arange(12.0).reshape(3, 4)
        assert np.array_equal(matmul(np.eye(3), m), m)

    def test_hand_checked_2x2(self):
        got = matmul([[1.0, 2.0], [3.0, 4.0]], [[1.0], [1.0]])
        assert np.array_equal(got, [[3.0], [7.0]])

    def test_matches_triple_loop_oracle(self):
        rng = np.random.default_rng(11)
        a = rng.normal(size=(5, 4))
        b = rng.normal(size=(4, 3))
        assert np.abs(matmul(a, b) - naive_matmul(a, b)).max() < 1e-12

    def test_dimension_mismatch_names_both_shapes(self):
        with pytest.raises(ValueError, match=r"\(2, 3\) x \(4, 2\)"):
            matmul(np.zeros((2, 3)), np.zeros((4, 2)))

    def test_ledger_counts_exactly(self):
        ledger = MultiplyLedger()
        rng = np.random.default_rng(0)
        expected = 0
        for _ in range(5):
            r, i, c = rng.integers(1, 7, size=3)
            matmul(rng.normal(size=(r, i)), rng.normal(size=(i, c)),
                   ledger, counted=True)
            expected += int(r * i * c)
        assert ledger.counted == expected

    def test_uncounted_and_missing_ledger(self):
        ledger = MultiplyLedger()
        matmul(np.ones((2, 2)), np.ones((2, 2)), ledger, counted=False)
        matmul(np.ones((2, 2)), np.ones((2, 2)))
        assert ledger.counted == 0

    @given(st.integers(1, 5), st.integers(1, 5), st.integers(1, 5),
           st.integers(1, 5), st.integers(0, 10_000))
    @settings(max_examples=30, deadline=None)
    def test_associativity(self, a, b, c, d, seed):
        rng = np.random.default_rng(seed)
        x = rng.normal(size=(a, b))
        y = rng.normal(size=(b, c))
        z = rng.normal(size=(c, d))
        left = matmul(matmul(x, y), z)
        right = matmul(x, matmul(y, z))
        assert np.abs(left - right).max() < 1e-9


class TestLedger:
    def test_categories_and_reset(self):
        ledger = MultiplyLedger()
        ledger.add(5)
        ledger.add(7, COUNT_POST_PROCESS)
        assert ledger.counted == 12
        assert ledger.by_category() == {"attention_scores": 5, "post_process": 7}
        ledger.reset()
        assert ledger.counted == 0

    def test_scope_filters_categories(self):
        ledger = MultiplyLedger(scope=("post_process",))
        ledger.add(5)
        ledger.add(7, COUNT_POST_PROCESS)
        assert ledger.counted == 7

    def test_rejects_bad_input(self):
        ledger = MultiplyLedger()
        with pytest.raises(ValueError):
            ledger.add(-1)
        with pytest.raises(ValueError):
            ledger.add(1, "projections")
        with pytest.raises(ValueError):
            MultiplyLedger(scope=("nonsense",))


class TestRowSoftmax:
    def test_symmetry(self):
        assert np.allclose(row_softmax([[0.0, 0.0]]), [[0.5, 0.5]])

    def test_analytic_ln2(self):
        got = row_softmax([[np.log(2.0), 0.0]])
        assert np.abs(got - [[2 / 3, 1 / 3]]).max() < 1e-12

    def test_matches_direct_formula(self):
        rng = np.random.default_rng(3)
        m = rng.normal(size=(3, 5))
        direct = np.exp(m) / np.exp(m).sum(axis=1, keepdims=True)
        assert np.abs(row_softmax(m) - direct).max() < 1e-12

    @given(st.lists(st.lists(st.floats(-700, 700), min_size=1, max_size=6),
                    min_size=1, max_size=5).filter(
                        lambda rows: len({len(r) for r in rows}) == 1))
    @settings(max_examples=60, deadline=None)
    def test_rows_sum_to_one(self, rows):
        out = row_softmax(np.asarray(rows))
        assert np.abs(out.sum(axis=1) - 1.0).max() < 1e-9


class TestLayerNorm:
    def test_constant_row_maps_to_zero(self):
        out = layer_norm([[4.0, 4.0, 4.0]], np.ones(3), np.zeros(3))
        assert np.array_equal(out, np.zeros((1, 3)))

    def test_analytic_two_values(self):
        out = layer_norm([[1.0, 3.0]], np.ones(2), np.zeros(2), eps=0.0)
        assert np.allclose(out, [[-1.0, 1.0]])

    def test_random_row_statistics(self):
        rng = np.random.default_rng(8)
        m = rng.normal(2.0, 3.0, size=(4, 50))
        out = layer_norm(m, np.ones(50), np.zeros(50), eps=0.0)
        assert np.abs(out.mean(axis=1)).max() < 1e-12
        assert np.abs(out.var(axis=1) - 1.0).max() < 1e-9

    def test_affine_applied_after(self):
        out = layer_norm([[1.0, 3.0]], 2.0 * np.ones(2), 5.0 * np.ones(2), eps=0.0)
        assert np.allclose(out, [[3.0, 7.0]])


class TestSinusoidalPe:
    def test_first_row_alternates(self):
        pe = sinusoidal_pe(3, 6)
        assert np.array_equal(pe[0], [0.0, 1.0, 0.0, 1.0, 0.0, 1.0])

    def test_entries_bounded(self):
        pe = sinusoidal_pe(50, 16)
        assert pe.min() >= -1.0 and pe.max() <= 1.0

    def test_direct_evaluation(self):
        pe = sinusoidal_pe(2, 4)
        assert pe[1, 0] == pytest.approx(np.sin(1.0), abs=1e-15)
        assert pe[1, 1] == pytest.approx(np.cos(1.0), abs=1e-15)

    def test_odd_width_rejected(self):
        with pytest.raises(ValueError):
            sinusoidal_pe(4, 5)


class TestFiniteDiff:
    def test_sum_has_unit_gradient(self):
        grad = finite_diff_grad(lambda m: float(m.sum()), np.zeros((2, 3)))
        assert np.abs(grad - 1.0).max() < 1e-9

    def test_half_squared_norm(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=(3, 2))
        grad = finite_diff_grad(lambda m: 0.5 * float((m * m).sum()), x, h=1e-5)
        assert np.abs(grad - x).max() < 1e-9

    def test_rejects_bad_step(self):
        with pytest.raises(ValueError):
            finite_diff_grad(lambda m: 0.0, np.zeros((1, 1)), h=0.0)


class TestSmallOps:
    def test_relu(self):
        assert np.array_equal(relu([[-1.0, 2.0]]), [[0.0, 2.0]])

    def test_concat_time(self):
        got = concat_time([np.ones((2, 3)), np.zeros((1, 3))])
        assert got.shape == (3, 3)
        with pytest.raises(ValueError):
            concat_time([np.ones((2, 3)), np.ones((2, 2))])

    def test_concat_feature(self):
        got = concat_feature([np.ones((2, 3)), np.zeros((2, 1))])
        assert got.shape == (2, 4)
        with pytest.raises(ValueError):
            concat_feature([np.ones((2, 3)), np.ones((3, 3))])

    def test_seeded_gaussian_reproducible(self):
        a = seeded_gaussian(20, 10, seed=42, std=0.5)
        b = seeded_gaussian(20, 10, seed=42, std=0.5)
        c = seeded_gaussian(20, 10, seed=43, std=0.5)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)
