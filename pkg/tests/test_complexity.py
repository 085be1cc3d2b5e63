import pytest

from dilated_attention.attention import MhaParams, HeadParams, RestrictionWindow
from dilated_attention.attention import restricted_mha_forward
from dilated_attention.complexity import (
    CostQuery,
    CostReport,
    estimate_exact,
    estimate_closed_form,
    streaming_report,
    table_generate,
)
from dilated_attention.numerics import MultiplyLedger, seeded_gaussian


def q_restricted(n, d, lb, la):
    return CostQuery(n, d, "restricted", look_back=lb, look_ahead=la)


def q_dilated(n, d, lb, la, m, mechanism="mean_pool", b=None, d_in=None):
    return CostQuery(n, d, "dilated", look_back=lb, look_ahead=la,
                     chunk_size=m, mechanism=mechanism, pool_heads=b,
                     bottleneck_dim=d_in)


class TestClosedFormEstimate:
    def test_reference_restricted_row(self):
        report = estimate_closed_form(CostQuery.symmetric(310, 512, "restricted", 41))
        assert report.total == 310 * 41 * 512 == 6_507_520
        assert report.display == "6.5M"

    def test_reference_ap2_pp_row(self):
        report = estimate_closed_form(CostQuery.symmetric(
            310, 512, "dilated", 25, chunk_size=20, mechanism="attn_pool_pp",
            pool_heads=2, bottleneck_dim=16))
        assert report.attention_term == 310 * (25 + 16) * 512 == 6_507_520
        assert report.xi_ap == 310 * 512 * 2 == 317_440
        assert report.xi_pp == 2 * 3 * 512 * 16 * 16 == 786_432
        assert report.total == 7_611_392
        assert report.display == "7.6M"

    def test_reference_subsampling_row(self):
        report = estimate_closed_form(CostQuery.symmetric(
            310, 512, "dilated", 13, chunk_size=40, mechanism="subsample"))
        assert report.total == 310 * 21 * 512 == 3_333_120
        assert report.display == "3.3M"

    def test_full_sequence_row(self):
        report = estimate_closed_form(CostQuery(310, 512, "full"))
        assert report.total == 49_203_200
        assert report.display == "49.2M"

    def test_subsample_and_mean_pool_have_no_surcharge(self):
        for mechanism in ("subsample", "mean_pool"):
            report = estimate_closed_form(q_dilated(100, 8, 2, 2, 7, mechanism))
            assert report.xi_ap == 0 and report.xi_pp == 0


class TestDisplayRounding:
    def test_terms_round_to_hundredths_then_tenths(self):
        # 6,549,504 = 5,396,480 + 317,440 + 835,584 -> 540 + 32 + 84
        # hundredths -> 656 -> 6.6M (single rounding of the total would
        # give 6.5495 -> 6.5M, which the reference table contradicts)
        report = CostReport(5_396_480, 317_440, 835_584)
        assert report.total == 6_549_504
        assert report.display == "6.6M"

    def test_exact_half_of_single_term_rounds_toward_zero(self):
        # 1,747,200 -> 174.72 -> 175 hundredths -> 17.5 tenths -> 1.7M
        assert CostReport(1_747_200).display == "1.7M"

    def test_small_values(self):
        assert CostReport(1).display == "0.0M"
        assert CostReport(50_000).display == "0.0M"  # exact half, toward zero
        assert CostReport(60_000).display == "0.1M"


class TestEstimateExact:
    def test_covering_window_equals_full(self):
        n, d = 12, 8
        exact = estimate_exact(q_restricted(n, d, n, n))
        assert exact.total == n * n * d

    def test_edge_deficit_bound(self):
        n, d, lb, la = 200, 16, 5, 3
        nominal = estimate_closed_form(q_restricted(n, d, lb, la)).total
        exact = estimate_exact(q_restricted(n, d, lb, la)).total
        assert exact < nominal
        assert nominal - exact <= (lb + la) ** 2 * d

    def test_instrumented_restricted_run_matches(self):
        n, d_model, n_heads = 8, 4, 2
        d_head = d_model // n_heads
        heads = tuple(
            HeadParams(seeded_gaussian(d_model, d_head, seed=i),
                       seeded_gaussian(d_model, d_head, seed=i + 10),
                       seeded_gaussian(d_model, d_head, seed=i + 20))
            for i in range(n_heads))
        params = MhaParams(heads, seeded_gaussian(n_heads * d_head, d_model, seed=30))
        x = seeded_gaussian(n, d_model, seed=40)
        ledger = MultiplyLedger()
        restricted_mha_forward(x, params, RestrictionWindow(2, 2), ledger)
        exact = estimate_exact(q_restricted(n, d_model, 2, 2))
        # visible frames per query: 3+4+5+5+5+5+4+3 = 34, times d_model
        assert ledger.counted == exact.total == 136

    def test_never_exceeds_closed_form(self):
        for n in (1, 3, 9, 20):
            for lb, la in ((0, 0), (1, 0), (2, 3), (n, n)):
                r_nominal = estimate_closed_form(q_restricted(n, 8, lb, la)).total
                r_exact = estimate_exact(q_restricted(n, 8, lb, la)).total
                assert r_exact <= r_nominal
                d_nominal = estimate_closed_form(q_dilated(n, 8, lb, la, 3)).total
                d_exact = estimate_exact(q_dilated(n, 8, lb, la, 3)).total
                assert d_exact <= d_nominal

    def test_equality_when_no_clipping(self):
        for n in (1, 5, 12):
            q = q_restricted(n, 8, 0, 0)
            assert estimate_exact(q) == estimate_closed_form(q)
            full = CostQuery(n, 8, "full")
            assert estimate_exact(full) == estimate_closed_form(full)


class TestOrderingInvariants:
    def test_dilated_at_least_restricted_same_window(self):
        for n in (5, 30, 100):
            lb = la = 2
            restricted = estimate_closed_form(q_restricted(n, 8, lb, la)).total
            for m in (3, 10):
                dilated = estimate_closed_form(q_dilated(n, 8, lb, la, m)).total
                assert dilated >= restricted
                if n > m:
                    assert dilated > restricted

    def test_full_at_least_restricted_when_window_fits(self):
        for n in (4, 9, 40):
            lb = la = 1
            assert (estimate_closed_form(CostQuery(n, 8, "full")).total
                    >= estimate_closed_form(q_restricted(n, 8, lb, la)).total)

    def test_monotonicity(self):
        base = dict(d=8, lb=2, la=2, m=4, b=2, d_in=3)

        def total(n=20, d=8, lb=2, la=2, m=4, b=2, d_in=3):
            return estimate_closed_form(q_dilated(n, d, lb, la, m, "attn_pool_pp",
                                            b, d_in)).total

        assert total(n=21) >= total(n=20)
        assert total(lb=3) >= total(lb=2)
        assert total(d=16) >= total(d=8)
        assert total(b=3) >= total(b=2)
        assert total(m=5) <= total(m=4)
        for m in range(1, 25):
            assert total(m=m + 1) <= total(m=m)


class TestTables:
    def test_librispeech_displays(self):
        table = table_generate("librispeech")
        assert [row.report.display for row in table.rows] == [
            "49.2M", "6.5M", "4.0M", "2.1M",
            "6.5M", "6.5M", "6.7M", "6.8M", "7.2M", "7.6M", "6.6M",
            "3.3M", "3.3M", "3.5M", "3.5M"]
        assert any("52M" in note for note in table.notes)

    def test_wsj_within_ten_percent_of_printed(self):
        printed = [9.8, 1.8, 1.1, 0.8, 0.7, 0.6,
                   1.8, 1.8, 1.8, 1.8, 1.8, 1.8,
                   1.1, 1.1, 1.1, 1.1, 1.1, 1.1]
        table = table_generate("wsj")
        assert len(table.rows) == len(printed)
        for row, want in zip(table.rows, printed):
            assert abs(row.report.total / 1e6 - want) / want <= 0.10

    def test_wsj_restricted_r35_display(self):
        table = table_generate("wsj")
        row = table.rows[1]
        assert row.window_size == 35
        assert row.report.total == 1_747_200
        assert row.report.display == "1.7M"

    def test_unknown_preset(self):
        with pytest.raises(ValueError):
            table_generate("timit")


class TestStreamingReport:
    def preset_query(self, n=310):
        return CostQuery(n, 512, "dilated", look_back=9, look_ahead=1,
                         chunk_size=15, mechanism="attn_pool_pp",
                         pool_heads=2, bottleneck_dim=16)

    def test_zero_past_is_ratio_one_regime(self):
        report = streaming_report(0.0, 40.0, self.preset_query())
        assert report.baseline == report.dilated == 2 * 512
        assert report.ratio == pytest.approx(1.0)

    def test_eight_seconds_hand_computed(self):
        report = streaming_report(8.0, 40.0, self.preset_query(), chunk_event=True)
        assert report.past_frames == 200
        assert report.baseline == 202 * 512
        assert report.dilated == (9 + 1 + 1 + 13) * 512
        assert report.chunk_cost == 15 * 512 * 2 + 2 * 3 * 512 * 16
        assert report.ratio == pytest.approx(202 / 24)
        assert report.ratio_with_chunk < report.ratio

    def test_doubling_past_increases_ratio(self):
        for seconds in (1.0, 2.0, 4.0, 8.0):
            a = streaming_report(seconds, 40.0, self.preset_query())
            b = streaming_report(2 * seconds, 40.0, self.preset_query())
            assert b.ratio > a.ratio

    def test_dilated_below_baseline_past_two_chunks(self):
        q = self.preset_query()
        for past_frames in range(2 * q.chunk_size, 800, 13):
            report = streaming_report(past_frames * 0.04, 40.0, q)
            assert report.dilated < report.baseline

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            streaming_report(-1.0, 40.0, self.preset_query())
        with pytest.raises(ValueError):
            streaming_report(1.0, 0.0, self.preset_query())
        with pytest.raises(ValueError):
            streaming_report(1.0, 40.0, CostQuery(10, 8, "full"))


class TestQueryValidation:
    def test_dilated_needs_mechanism(self):
        with pytest.raises(ValueError):
            CostQuery(10, 8, "dilated")

    def test_pooling_needs_heads(self):
        with pytest.raises(ValueError):
            CostQuery(10, 8, "dilated", chunk_size=2, mechanism="attn_pool")

    def test_symmetric_rejects_even_window(self):
        with pytest.raises(ValueError):
            CostQuery.symmetric(10, 8, "restricted", 10)

    def test_custom_minimum(self):
        assert estimate_closed_form(CostQuery(1, 1, "full")).total == 1
