"""Closed-form privacy/distortion, robustness caps, mismatch brackets, sweeps."""

import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smlkit import (
    ParameterSpace,
    RRMechanism,
    TabularScale,
    build_partition,
    distortion_exact,
    distortion_mc,
    fraction_secret,
    mechanism_comparison,
    qm_decay_threshold,
    qm_distortion,
    qm_mismatch_bounds,
    qm_privacy,
    qm_privacy_raw,
    rr_distortion,
    rr_mismatch_bounds,
    rr_privacy,
    rr_privacy_raw,
    rr_robust_epsilon_cap,
    rr_robust_weight_cap,
    solve_rr_ratio,
    tradeoff_sweep,
)


def matched(tau, d):
    return TabularScale(tau=tau, d0=d)


class TestScale:
    def test_defaults(self):
        sc = TabularScale(tau=5, d0=3)
        assert sc.dstar == 3
        assert sc.s == 6
        assert sc.d_hat == 3
        assert sc.missed == 0

    def test_mismatch_fields(self):
        sc = TabularScale(tau=4, d0=2, d1=1, dstar=4)
        assert sc.missed == 2
        assert sc.d_hat == 3


class TestRRFormulas:
    def test_privacy_raw_example(self):
        # tau=3, d=3: N = C(5,2) = 10, weight 3 gives r = 2/10.
        sc = matched(3, 3)
        assert rr_privacy_raw(sc, Fraction(3)) == Fraction(1 + 4 * Fraction(2, 10),
                                                           1 + Fraction(2, 10))

    def test_privacy_monotone_in_weight(self):
        sc = matched(4, 3)
        raws = [rr_privacy_raw(sc, Fraction(w)) for w in (1, 2, 3, 10, 100)]
        assert raws == sorted(raws)
        assert raws[0] == 1

    def test_privacy_bounded_by_log_s(self):
        sc = matched(4, 3)
        assert rr_privacy(sc, Fraction(10**9)) < math.log2(sc.s)

    def test_distortion_decreases_in_weight(self):
        sc = matched(5, 3)
        ds = [rr_distortion(sc, Fraction(w)) for w in (1, 2, 5, 50)]
        assert ds == sorted(ds, reverse=True)

    def test_solve_rr_ratio_inverts(self):
        sc = matched(4, 2)
        for w in (2, 3, 7):
            raw = rr_privacy_raw(sc, Fraction(w))
            r = solve_rr_ratio(sc.s, raw)
            assert (1 + sc.s * r) / (1 + r) == raw

    def test_solve_rr_ratio_domain(self):
        with pytest.raises(ValueError):
            solve_rr_ratio(4, Fraction(4))
        with pytest.raises(ValueError):
            solve_rr_ratio(4, Fraction(1, 2))


class TestQMFormulas:
    def test_privacy_raw_is_bin_count(self):
        sc = matched(6, 2)  # s = 7
        assert [qm_privacy_raw(sc, i) for i in range(1, 8)] == [7, 4, 3, 2, 2, 2, 1]

    def test_privacy_log(self):
        sc = matched(3, 2)
        assert qm_privacy(sc, 2) == pytest.approx(1.0)

    def test_distortion_d2_matches_enumeration(self):
        # Oracle: exact distortion of the materialized mechanism.
        from smlkit import QMMechanism

        for tau in range(2, 7):
            sp = ParameterSpace(categories=(0, 1), tau=tau)
            part = build_partition(sp.members(), fraction_secret(0, tau))
            for interval in range(1, tau + 2):
                pol = QMMechanism(part, interval=interval).policy()
                exact, _ = distortion_exact(pol)
                assert exact == qm_distortion(matched(tau, 2), interval)

    def test_distortion_needs_two_categories(self):
        with pytest.raises(ValueError):
            qm_distortion(TabularScale(tau=3, d0=1), 2)


class TestComparison:
    def test_rr_never_beats_qm_at_matched_privacy(self):
        # Weak dominance of quantization holds except at the ragged corner
        # interval = s - 1 (bins of size s-1 and 1), where randomized
        # response is better by a factor (s-1)^2/s^2 < 1.
        for tau in (50, 80, 120):
            sc = matched(tau, 2)
            points = mechanism_comparison(sc, budget=math.log2(sc.s))
            assert points
            for pt in points:
                if pt.ratio is None:
                    continue
                if pt.interval == sc.s - 1:
                    assert pt.ratio < 1
                else:
                    assert pt.ratio >= 1

    def test_budget_filters_points(self):
        sc = matched(50, 2)
        tight = mechanism_comparison(sc, budget=1.0)
        loose = mechanism_comparison(sc, budget=math.log2(sc.s))
        assert len(tight) <= len(loose)


class TestDistortionEstimators:
    def test_exact_matches_rr_closed_form(self):
        sc = matched(3, 3)
        sp = ParameterSpace(categories=(0, 1, 2), tau=3)
        pol = RRMechanism(sp, weight=Fraction(3)).policy()
        exact, arg = distortion_exact(pol)
        assert exact == rr_distortion(sc, Fraction(3))
        # The worst case puts all mass on one attribute combination.
        assert sc.tau in arg.counts

    def test_mc_close_to_exact(self):
        sc = matched(2, 2)
        sp = ParameterSpace(categories=(0, 1), tau=2)
        mech = RRMechanism(sp, weight=Fraction(2))
        exact, _ = distortion_exact(mech.policy())
        est, se = distortion_mc(mech, sp.members(), samples=2000, seed=42)
        assert abs(est - float(exact)) < max(5 * se, 0.02)


class TestRobustness:
    def test_weight_cap_value(self):
        # tau=3, d_hat=2: 4 release parameters over s=4 secrets.
        sc = matched(3, 2)
        assert rr_robust_weight_cap(sc) == 1

    def test_epsilon_cap_matches_weight_cap(self):
        sc = TabularScale(tau=6, d0=3, d1=1, dstar=4)
        cap = rr_robust_weight_cap(sc)
        assert rr_robust_epsilon_cap(sc) == pytest.approx(math.log(1 + cap))

    def test_epsilon_cap_big_instance_no_overflow(self):
        sc = TabularScale(tau=48842, d0=22381)
        eps = rr_robust_epsilon_cap(sc)
        assert math.isfinite(eps) and eps > 0

    def test_decay_threshold_positive_and_zero_at_log_s(self):
        sc = TabularScale(tau=5, d0=2, dstar=3)
        assert qm_decay_threshold(sc, 2) > 0
        assert qm_decay_threshold(sc, 1) == 0


class TestMismatchBrackets:
    def test_collapse_when_matched(self):
        # No missed combinations: both brackets close on the matched value.
        sc = matched(4, 3)
        b = rr_mismatch_bounds(sc, Fraction(2))
        assert b.privacy_lower == pytest.approx(rr_privacy(sc, Fraction(2)))
        assert b.privacy_upper >= b.privacy_lower - 1e-12
        # Quantization lower bound uses floor(s/I): exact collapse when I | s.
        sc6 = matched(5, 3)  # s = 6
        q = qm_mismatch_bounds(sc6, 2)
        assert q.privacy_lower == pytest.approx(qm_privacy(sc6, 2))
        # Otherwise it still brackets from below.
        q2 = qm_mismatch_bounds(sc, 2)
        assert q2.privacy_lower <= qm_privacy(sc, 2) <= q2.privacy_upper + 1e-12

    def test_brackets_ordered(self):
        sc = TabularScale(tau=4, d0=2, d1=1, dstar=4)
        b = rr_mismatch_bounds(sc, Fraction(2))
        assert b.privacy_lower <= b.privacy_upper + 1e-12
        assert b.distortion_lower <= b.distortion_upper

    def test_lower_branch_selection(self):
        # m = 1 <= log2(s): the few-missed branch applies.
        sc = TabularScale(tau=4, d0=3, dstar=4)
        assert rr_mismatch_bounds(sc, Fraction(2)).lower_branch == "few-missed"

    @given(
        st.integers(2, 5),
        st.integers(2, 4),
        st.integers(0, 2),
        st.integers(0, 2),
        st.integers(2, 6),
    )
    @settings(max_examples=60, deadline=None)
    def test_privacy_bracket_never_inverted_rr(self, tau, d0, extra, d1, w):
        sc = TabularScale(tau=tau, d0=d0, d1=d1, dstar=d0 + extra)
        b = rr_mismatch_bounds(sc, Fraction(w))
        assert b.privacy_lower <= b.privacy_upper + 1e-9
        # The lower bound never exceeds the trivial log s ceiling on leakage.
        assert b.privacy_lower <= math.log2(sc.s) + 1e-9


class TestSweep:
    def test_matched_sweep_points(self):
        sc = matched(4, 2)
        pts = tradeoff_sweep(sc, rr_weights=[Fraction(2), Fraction(3)], qm_intervals=[1, 2])
        assert len(pts) == 4
        for p in pts:
            row = p.as_row()
            assert row["privacy_lo"] == row["privacy"] == row["privacy_hi"]
            assert row["method"] == "closed-form"

    def test_mismatched_sweep_attaches_bounds(self):
        sc = TabularScale(tau=4, d0=2, d1=1, dstar=3)
        pts = tradeoff_sweep(sc, rr_weights=[Fraction(2)], qm_intervals=[2])
        for p in pts:
            row = p.as_row()
            assert row["method"] == "closed-form+bounds"
            assert row["privacy_lo"] <= row["privacy_hi"] + 1e-9

    def test_parallel_matches_serial(self):
        sc = matched(5, 2)
        ws = [Fraction(2), Fraction(3), Fraction(5)]
        serial = tradeoff_sweep(sc, rr_weights=ws, qm_intervals=[1, 2, 3])
        parallel = tradeoff_sweep(sc, rr_weights=ws, qm_intervals=[1, 2, 3], jobs=3)
        assert [p.as_row() for p in serial] == [p.as_row() for p in parallel]
