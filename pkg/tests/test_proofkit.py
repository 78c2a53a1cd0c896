import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import llnlab.families as fam
from llnlab.conditions import CONVERGES, DIVERGES, NormalizerSpec
from llnlab.errors import (
    HorizonMismatchError,
    InvalidParamsError,
    NegativityDetectedError,
    NonFiniteMeanError,
    SupExceededError,
)
from llnlab.proofkit import (
    build_index,
    chebyshev_report,
    kappa_report,
    sandwich_check,
    subsequence_variance_series,
)
from llnlab.seeding import derived_seed

ALPHAS = (1.5, 2.0, 4.0)
EPSILONS = (0.1, 0.5)


def shifted_cosine_family():
    return fam.make_family(fam.shifted_cosine())


def unit_mean_path(n):
    return np.asarray(n, dtype=float)


class TestBuildIndex:
    def test_constant_scaled_mean_bands(self):
        idx = build_index(unit_mean_path, 2.0, 0.5, 1000)
        assert idx.a_value == 1.0
        assert idx.L == 2
        assert np.all(idx.s[1:] == 2)

    def test_m_of_five_at_alpha_two(self):
        idx = build_index(unit_mean_path, 2.0, 0.5, 10)
        assert idx.m[5] == 2  # 4 <= 5 < 8

    @pytest.mark.parametrize("alpha", ALPHAS)
    @pytest.mark.parametrize("epsilon", EPSILONS)
    @pytest.mark.parametrize("family_builder", [fam.shifted_cosine, lambda: fam.iid_exponential(1.0)])
    def test_invariants_hold_on_grid(self, alpha, epsilon, family_builder):
        f = fam.make_family(family_builder())
        idx = build_index(f.moments.mean_sum_fn, alpha, epsilon, 10**5)
        assert idx.check_invariants() == {
            "bracket": 0,
            "band": 0,
            "membership": 0,
            "cell_floor": 0,
            "scaled_mean_gap": 0,
        }

    def test_membership_brackets_every_index(self):
        idx = build_index(unit_mean_path, 1.5, 0.1, 5000)
        for n in (1, 2, 17, 100, 4999, 5000):
            km, kp = idx.k_pair(n)
            assert km <= n <= kp

    def test_mean_path_accessor(self):
        idx = build_index(unit_mean_path, 2.0, 0.5, 100)
        assert idx.mean_path(7) == 7.0
        assert np.array_equal(idx.mean_path(np.array([1, 50, 100])), [1.0, 50.0, 100.0])

    def test_empty_cells_use_fallback(self):
        # A constant scaled mean occupies a single band; every other band
        # holds the floor(alpha**level) fallback.
        idx = build_index(unit_mean_path, 2.0, 0.1, 1000)
        occupied = int(idx.s[1])
        levels = np.arange(idx.max_level + 1)
        floors = np.floor(2.0 ** levels.astype(float)).astype(int)
        for band in range(idx.L + 1):
            if band == occupied:
                continue
            assert np.array_equal(idx.k_minus[:, band], floors)
            assert np.array_equal(idx.k_plus[:, band], floors)

    def test_scaled_mean_gap_bound(self):
        f = shifted_cosine_family()
        idx = build_index(f.moments.mean_sum_fn, 2.0, 0.1, 10**4)
        n = np.arange(1, idx.horizon + 1)
        km = idx.k_minus[idx.m[1:], idx.s[1:]]
        kp = idx.k_plus[idx.m[1:], idx.s[1:]]
        e = idx.scaled_means
        assert np.max(np.abs(e[km] - e[n])) <= idx.epsilon
        assert np.max(np.abs(e[kp] - e[n])) <= idx.epsilon

    def test_supplied_bound_validation(self):
        build_index(unit_mean_path, 2.0, 0.5, 100, a_value=1.0)
        with pytest.raises(SupExceededError):
            build_index(unit_mean_path, 2.0, 0.5, 100, a_value=0.2)

    def test_input_validation(self):
        with pytest.raises(InvalidParamsError):
            build_index(unit_mean_path, 1.0, 0.5, 100)
        with pytest.raises(InvalidParamsError):
            build_index(unit_mean_path, 2.0, 0.0, 100)
        with pytest.raises(NonFiniteMeanError):
            build_index(lambda n: np.where(np.asarray(n) > 5, np.nan, 1.0), 2.0, 0.5, 100)
        with pytest.raises(InvalidParamsError):
            build_index(lambda n: -np.asarray(n, float), 2.0, 0.5, 100)

    @given(
        st.floats(min_value=1.05, max_value=8.0, allow_nan=False),
        st.integers(min_value=1, max_value=2000),
    )
    @settings(max_examples=60, deadline=None)
    def test_bracket_property(self, alpha, n):
        idx = build_index(unit_mean_path, alpha, 0.5, n)
        m = int(idx.m[n])
        assert alpha**m <= n < alpha ** (m + 1)

    def test_normalizer_generalization(self):
        # Against b_n = n**2 the step family's scaled means (n+1)/(4 n)
        # stay within [1/4, 1/2]; the index accepts them.
        f = fam.make_family(fam.step())
        idx = build_index(f.moments.mean_sum_fn, 2.0, 0.25, 1000, NormalizerSpec.power(2.0))
        assert sum(idx.check_invariants().values()) == 0
        assert idx.a_value == pytest.approx(0.5)


class TestKappaReport:
    @pytest.mark.parametrize("alpha", ALPHAS)
    def test_bound_holds_everywhere(self, alpha):
        f = shifted_cosine_family()
        idx = build_index(f.moments.mean_sum_fn, alpha, 0.5, 10**4)
        band = int(idx.s[idx.horizon])
        report = kappa_report(idx, band, 1000)
        assert all(r.holds for r in report)

    def test_direct_summation_oracle(self):
        f = shifted_cosine_family()
        idx = build_index(f.moments.mean_sum_fn, 2.0, 0.5, 10**4)
        band = int(idx.s[idx.horizon])
        report = kappa_report(idx, band, 8)
        tail = 4.0 * 2.0 ** (-2.0 * idx.max_level) / (2.0**2 - 1.0)
        for rec in report:
            brute = max(
                sum(1.0 / k**2 for k in idx.k_minus[:, band] if k >= rec.j),
                sum(1.0 / k**2 for k in idx.k_plus[:, band] if k >= rec.j),
            )
            assert rec.kappa_j == pytest.approx(brute + tail, rel=1e-12)

    def test_j_beyond_largest_extreme_leaves_only_tail(self):
        f = shifted_cosine_family()
        idx = build_index(f.moments.mean_sum_fn, 2.0, 0.5, 100)
        band = int(idx.s[idx.horizon])
        big_j = int(idx.k_plus[:, band].max()) + 1
        rec = kappa_report(idx, band, big_j)[-1]
        tail = 4.0 * 2.0 ** (-2.0 * idx.max_level) / 3.0
        assert rec.kappa_j == pytest.approx(tail, rel=1e-12)

    def test_band_validation(self):
        idx = build_index(unit_mean_path, 2.0, 0.5, 100)
        with pytest.raises(InvalidParamsError):
            kappa_report(idx, idx.L + 1, 10)


class TestSubsequenceVarianceSeries:
    def test_unit_variances_give_reciprocal_extremes(self):
        idx = build_index(unit_mean_path, 2.0, 0.5, 10**4)
        band = int(idx.s[1])
        rep = subsequence_variance_series(
            idx, lambda n: np.ones_like(np.asarray(n, float)), "plus", band
        )
        ks = idx.k_plus[:, band].astype(float)
        assert np.allclose(rep.terms, 1.0 / ks, rtol=1e-12)
        assert rep.verdict == CONVERGES

    def test_zero_variances(self):
        idx = build_index(unit_mean_path, 2.0, 0.5, 1000)
        rep = subsequence_variance_series(
            idx, lambda n: 0.0 * np.asarray(n, float), "minus", int(idx.s[1])
        )
        assert np.all(rep.terms == 0.0)

    def test_step_variances_diverge(self):
        idx = build_index(unit_mean_path, 2.0, 0.5, 10**4)
        f = fam.make_family(fam.step())
        rep = subsequence_variance_series(idx, f.moments.var_fn, "plus", int(idx.s[1]))
        assert rep.verdict == DIVERGES

    def test_quasi_constant_scales_terms(self):
        idx = build_index(unit_mean_path, 2.0, 0.5, 1000)
        ones = lambda n: np.ones_like(np.asarray(n, float))
        base = subsequence_variance_series(idx, ones, "plus", 2)
        scaled = subsequence_variance_series(idx, ones, "plus", 2, c=3.0)
        assert np.allclose(scaled.terms, 3.0 * base.terms, rtol=1e-12)


class TestChebyshevReport:
    def test_bounds_match_closed_form_and_dominate(self):
        f = shifted_cosine_family()
        idx = build_index(f.moments.mean_sum_fn, 2.0, 0.5, 10**4)
        band = int(idx.s[idx.horizon])
        delta = 0.1
        rep = chebyshev_report(f, idx, band, delta, 2000, seed=13)
        assert rep.bound_source == "analytic var_sum"
        km = rep.k_minus.astype(float)
        assert np.allclose(rep.bound_minus, 1.0 / (2.0 * km * delta**2), rtol=1e-12)
        assert np.all(rep.p_hat_minus <= rep.bound_minus + 4.0 * rep.stderr_minus)
        assert np.all(rep.p_hat_plus <= rep.bound_plus + 4.0 * rep.stderr_plus)
        # running sums of bounds stay finite (geometric in the level)
        assert rep.bound_partial_plus[-1] < 2.0 / delta**2

    def test_huge_delta_empties_events(self):
        f = shifted_cosine_family()
        idx = build_index(f.moments.mean_sum_fn, 2.0, 0.5, 1000)
        rep = chebyshev_report(f, idx, int(idx.s[1]), 1e6, 200, seed=14)
        assert np.all(rep.p_hat_minus == 0.0)
        assert np.all(rep.p_hat_plus == 0.0)


class TestSandwich:
    @pytest.mark.parametrize("alpha", ALPHAS)
    @pytest.mark.parametrize("epsilon", EPSILONS)
    def test_zero_violations_across_seeds(self, alpha, epsilon):
        f = shifted_cosine_family()
        idx = build_index(f.moments.mean_sum_fn, alpha, epsilon, 10**4)
        for r in range(10):
            traj = fam.sample_trajectory(f, 10**4, derived_seed(20110, r))
            rep = sandwich_check(traj, idx)
            assert rep.violations == []
            assert rep.max_breach <= rep.tolerance

    def test_constant_family_centres_the_chain(self):
        f = fam.make_family(fam.constant(1.0))
        idx = build_index(f.moments.mean_sum_fn, 2.0, 0.25, 1000)
        traj = fam.sample_trajectory(f, 1000, 3)
        rep = sandwich_check(traj, idx)
        assert np.all(rep.mid == 0.0)
        assert rep.violations == []
        # slack of at least epsilon on both outer sides
        assert np.all(rep.mid - rep.lower_lhs >= idx.epsilon - 1e-12)
        assert np.all(rep.upper_rhs - rep.mid >= idx.epsilon - 1e-12)

    def test_monotone_prefix_for_nonnegative_trajectories(self):
        f = fam.make_family(fam.iid_exponential(1.0))
        traj = fam.sample_trajectory(f, 5000, 77)
        assert np.all(np.diff(traj.prefix_sums) >= 0.0)
        assert np.all(traj.prefix_sums >= 0.0)

    def test_horizon_mismatch(self):
        f = shifted_cosine_family()
        idx = build_index(f.moments.mean_sum_fn, 2.0, 0.5, 1000)
        traj = fam.sample_trajectory(f, 500, 1)
        with pytest.raises(HorizonMismatchError):
            sandwich_check(traj, idx)

    def test_negativity_rejected(self):
        f = shifted_cosine_family()
        idx = build_index(f.moments.mean_sum_fn, 2.0, 0.5, 100)
        raw = fam.sample_trajectory(fam.make_family(fam.cosine()), 100, 1)
        with pytest.raises(NegativityDetectedError):
            sandwich_check(raw, idx)

    def test_outer_slacks_shrink_along_diagonal(self):
        f = shifted_cosine_family()
        a_value = 1.0
        uppers, lowers = [], []
        for m in range(1, 6):
            alpha, eps = 1.0 + 1.0 / m, 1.0 / m
            idx = build_index(f.moments.mean_sum_fn, alpha, eps, 1000)
            traj = fam.sample_trajectory(f, 1000, 5)
            rep = sandwich_check(traj, idx)
            assert rep.bound_constant == a_value
            uppers.append(rep.outer_slack_upper)
            lowers.append(rep.outer_slack_lower)
        assert all(a > b for a, b in zip(uppers, uppers[1:]))
        assert all(a > b for a, b in zip(lowers, lowers[1:]))

    def test_csv_rows_shape(self):
        f = shifted_cosine_family()
        idx = build_index(f.moments.mean_sum_fn, 2.0, 0.5, 200)
        rep = sandwich_check(fam.sample_trajectory(f, 200, 9), idx)
        rows = rep.to_csv_rows()
        assert len(rows) == 200
        assert rep.csv_header == ("n", "lower", "mid_lo", "mid", "mid_hi", "upper", "violated")
        assert all(len(r) == 7 for r in rows)
        summary = rep.to_json_summary()
        assert summary["violations"] == 0
        assert summary["bound_constant"] == 1.0
