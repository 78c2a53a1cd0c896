import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import llnlab.families as fam
from llnlab.conditions import (
    CONVERGES,
    DIVERGES,
    NormalizerSpec,
    basel_tail_bound,
    basel_tail_suite,
    cg_tail_integral,
    kolmogorov_series,
    mean_abs_deviation_rate,
    quasi_uncorrelation_ratio,
    scaled_mean_sup,
    sup_tail_over_horizon,
    truncation_gap_report,
)
from llnlab.errors import (
    InsufficientReplicationsError,
    InvalidParamsError,
    MomentsUnavailableError,
    NegativeVarianceError,
    NegativityDetectedError,
    NonMonotoneTailError,
)

PI2_6 = math.pi**2 / 6.0


class TestNormalizer:
    def test_kinds(self):
        lin = NormalizerSpec.linear()
        assert lin.value_at(7) == 7.0
        pw = NormalizerSpec.power(0.5)
        assert pw.value_at(4) == 2.0
        ex = NormalizerSpec.explicit([1.0, 2.0, 4.0])
        assert ex.horizon_limited and ex.max_n == 3
        assert np.array_equal(ex.value_at(np.array([1, 3])), [1.0, 4.0])

    def test_validation(self):
        with pytest.raises(InvalidParamsError):
            NormalizerSpec.power(0.0)
        with pytest.raises(InvalidParamsError):
            NormalizerSpec.explicit([1.0, 0.5])
        with pytest.raises(InvalidParamsError):
            NormalizerSpec.explicit([0.0, 1.0])
        with pytest.raises(InvalidParamsError):
            NormalizerSpec.explicit([1.0, 2.0]).value_at(3)


class TestKolmogorovSeries:
    def test_step_diverges_with_quarter_terms(self):
        f = fam.make_family(fam.step())
        rep = kolmogorov_series(f.moments.var_fn, NormalizerSpec.linear(), 1000)
        assert np.all(rep.terms == 0.25)
        assert rep.verdict == DIVERGES

    def test_zero_series_converges(self):
        rep = kolmogorov_series(lambda n: 0.0 * np.asarray(n, float), NormalizerSpec.linear(), 100)
        assert np.all(rep.terms == 0.0)
        assert rep.verdict == CONVERGES

    def test_unit_variance_partial_sum_oracle(self):
        horizon = 10**4
        rep = kolmogorov_series(
            lambda n: np.ones_like(np.asarray(n, float)), NormalizerSpec.linear(), horizon
        )
        direct = math.fsum(1.0 / (k * k) for k in range(1, horizon + 1))
        assert rep.partial_sums[-1] == pytest.approx(direct, abs=1e-12)
        assert rep.partial_sums[-1] < PI2_6
        assert rep.verdict == CONVERGES

    def test_partial_sums_monotone_for_nonneg_terms(self):
        f = fam.make_family(fam.iid_exponential(2.0))
        rep = kolmogorov_series(f.moments.var_fn, NormalizerSpec.linear(), 500)
        assert np.all(np.diff(rep.partial_sums) >= 0)

    def test_truncated_exponential_variance_series(self):
        # Closed-form variances of the index-truncated unit exponential;
        # their quadratic series stays below (pi^2/6) * mean.
        def var_trunc(n):
            n = np.asarray(n, dtype=float)
            mean = 1.0 - (n + 1.0) * np.exp(-n)
            second = 2.0 - (n * n + 2.0 * n + 2.0) * np.exp(-n)
            return second - mean**2

        rep = kolmogorov_series(var_trunc, NormalizerSpec.linear(), 10**4)
        assert rep.verdict == CONVERGES
        assert rep.partial_sums[-1] <= PI2_6 * 1.0

    def test_generalized_normalizer(self):
        f = fam.make_family(fam.step())
        rep = kolmogorov_series(f.moments.var_fn, NormalizerSpec.power(2.0), 200)
        # variances n^2/4 against b_n = n^2 give the quadratic series / 4
        assert rep.terms[3] == pytest.approx(0.25 / 16.0, abs=1e-15)
        assert rep.verdict == CONVERGES

    def test_errors(self):
        with pytest.raises(InvalidParamsError):
            kolmogorov_series(lambda n: 1.0, NormalizerSpec.linear(), 5)
        with pytest.raises(NegativeVarianceError):
            kolmogorov_series(lambda n: -np.asarray(n, float), NormalizerSpec.linear(), 100)

    def test_explicit_normalizer_is_horizon_limited(self):
        norm = NormalizerSpec.explicit(np.arange(1.0, 51.0))
        f = fam.make_family(fam.cosine())
        rep = kolmogorov_series(f.moments.var_fn, norm, 50)
        assert rep.horizon == 50
        with pytest.raises(InvalidParamsError):
            kolmogorov_series(f.moments.var_fn, norm, 51)


class TestQuasiUncorrelationRatio:
    def test_cosine_near_one(self):
        f = fam.make_family(fam.cosine())
        rep = quasi_uncorrelation_ratio(f, [1, 10, 100], 40000, seed=2026)
        assert rep.denominator_source == "analytic var_fn"
        for r, s in zip(rep.ratios, rep.stderrs):
            assert abs(r - 1.0) <= 4.0 * s
        assert rep.c_hat == np.max(rep.ratios)

    def test_step_family_near_one(self):
        f = fam.make_family(fam.step())
        rep = quasi_uncorrelation_ratio(f, [5, 50], 20000, seed=7)
        for r, s in zip(rep.ratios, rep.stderrs):
            assert abs(r - 1.0) <= 4.0 * s

    def test_positive_part_gated_matches_analytic(self):
        f = fam.transform_family(fam.make_family(fam.gated_gaussian()), "positive_part")
        rep = quasi_uncorrelation_ratio(f, [100], 20000, seed=11)
        cov = 1.0 / (8.0 * math.pi)
        v = 0.25 - cov
        analytic = 1.0 + 99.0 * cov / v
        assert rep.ratios[0] == pytest.approx(analytic, abs=4.0 * rep.stderrs[0] + 0.3)
        assert 15.0 <= rep.ratios[0] <= 25.0

    def test_empirical_denominator_path(self):
        f = fam.transform_family(fam.make_family(fam.cosine()), "positive_part")
        assert f.moments is None
        rep = quasi_uncorrelation_ratio(f, [20], 20000, seed=3)
        assert rep.denominator_source == "per-index sample variances"
        # shared latent forces correlation: ratio significantly above 1
        assert rep.ratios[0] > 1.0 + 4.0 * rep.stderrs[0]

    def test_insufficient_replications(self):
        f = fam.make_family(fam.cosine())
        with pytest.raises(InsufficientReplicationsError):
            quasi_uncorrelation_ratio(f, [10], 50, seed=1)


class TestScaledMeanSup:
    def test_shifted_cosine_is_one(self):
        f = fam.make_family(fam.shifted_cosine())
        rep = scaled_mean_sup(f, NormalizerSpec.linear(), 1000)
        assert rep.a_hat == 1.0
        assert rep.argmax_n == 1
        assert not rep.unbounded_evidence

    def test_step_growth_flagged(self):
        f = fam.make_family(fam.step())
        rep = scaled_mean_sup(f, NormalizerSpec.linear(), 1000)
        n = np.arange(1, 1001, dtype=float)
        assert np.allclose(rep.values, (n + 1.0) / 4.0)
        assert rep.unbounded_evidence
        assert rep.argmax_n == 1000

    def test_zero_family(self):
        f = fam.make_family(fam.constant(0.0))
        rep = scaled_mean_sup(f, NormalizerSpec.linear(), 100)
        assert rep.a_hat == 0.0
        assert not rep.unbounded_evidence

    def test_monte_carlo_fallback(self):
        f = fam.transform_family(fam.make_family(fam.cosine()), "positive_part")
        rep = scaled_mean_sup(f, NormalizerSpec.linear(), 50, mc_replications=2000, seed=5)
        assert rep.a_hat == pytest.approx(1.0 / math.pi, abs=0.05)

    def test_requires_profile_or_fallback(self):
        f = fam.transform_family(fam.make_family(fam.cosine()), "positive_part")
        with pytest.raises(MomentsUnavailableError):
            scaled_mean_sup(f, NormalizerSpec.linear(), 50)


class TestCgTailIntegral:
    def test_exponential_unit_integral(self):
        f = fam.make_family(fam.iid_exponential(1.0))
        rep = cg_tail_integral(sup_tail_over_horizon(f, 100), 40.0, 1e-8)
        assert rep.value == pytest.approx(1.0, abs=1e-4)
        assert not rep.diverges_evidence
        assert rep.truncation_bound <= 1e-12

    def test_zero_tail(self):
        rep = cg_tail_integral(lambda t: 0.0, 5.0, 1e-8)
        assert rep.value == 0.0
        assert not rep.diverges_evidence

    @pytest.mark.parametrize("t_max", [1.0, 50.0, 400.0])
    def test_step_supremum_flagged(self, t_max):
        f = fam.make_family(fam.step())
        rep = cg_tail_integral(sup_tail_over_horizon(f, 10000), t_max, 1e-6)
        assert rep.diverges_evidence
        assert rep.value == pytest.approx(0.5 * t_max, rel=1e-6)

    def test_monotone_in_t_max_and_bounded(self):
        f = fam.make_family(fam.iid_exponential(1.0))
        tail = sup_tail_over_horizon(f, 10)
        values = [cg_tail_integral(tail, t, 1e-8).value for t in (1.0, 2.0, 5.0, 20.0)]
        assert all(a <= b + 1e-12 for a, b in zip(values, values[1:]))
        for t, v in zip((1.0, 2.0, 5.0, 20.0), values):
            assert v <= t

    def test_nonmonotone_tail_rejected(self):
        with pytest.raises(NonMonotoneTailError):
            cg_tail_integral(lambda t: min(1.0, 0.2 + 0.1 * t), 5.0, 1e-8)

    def test_sup_tail_requires_nonnegative_family(self):
        f = fam.make_family(fam.cosine())
        with pytest.raises(InvalidParamsError):
            sup_tail_over_horizon(f, 10)


class TestMeanAbsDeviationRate:
    def test_gated_level(self):
        f = fam.make_family(fam.gated_gaussian())
        rep = mean_abs_deviation_rate(f, 200, 4000, seed=6)
        expected = 0.5 * math.sqrt(2.0 / math.pi)
        assert rep.terms[-1] == pytest.approx(expected, abs=0.05)
        assert rep.verdict == CONVERGES

    def test_zero_family(self):
        f = fam.make_family(fam.constant(5.0))
        rep = mean_abs_deviation_rate(f, 64, 100, seed=1)
        assert np.all(rep.terms == 0.0)

    def test_cosine_bounded_by_one(self):
        f = fam.make_family(fam.cosine())
        rep = mean_abs_deviation_rate(f, 128, 500, seed=2)
        assert np.all(rep.terms <= 1.0 + 1e-12)
        assert rep.verdict == CONVERGES

    def test_insufficient_replications(self):
        f = fam.make_family(fam.cosine())
        with pytest.raises(InsufficientReplicationsError):
            mean_abs_deviation_rate(f, 50, 10, seed=1)


class TestTruncationGap:
    def test_exponential_closed_forms(self):
        f = fam.make_family(fam.iid_exponential(1.0))
        rep = truncation_gap_report(f, 50)
        assert rep.method == "analytic_tail"
        assert rep.mismatch_prob_partial_sums[-1] == pytest.approx(1.0 / (math.e - 1.0), abs=1e-3)
        n = np.arange(1, 51, dtype=float)
        assert np.allclose(rep.l1_gaps, (n + 1.0) * np.exp(-n), atol=1e-9)

    def test_cesaro_identity_exact(self):
        f = fam.make_family(fam.iid_exponential(1.0))
        rep = truncation_gap_report(f, 30)
        n = np.arange(1, 31, dtype=float)
        assert np.array_equal(rep.cesaro_gap, np.cumsum(rep.l1_gaps) / n)

    def test_step_gaps_identically_zero(self):
        f = fam.make_family(fam.step())
        rep = truncation_gap_report(f, 40)
        assert np.all(rep.l1_gaps == 0.0)
        assert np.all(rep.mismatch_prob_partial_sums == 0.0)

    def test_monte_carlo_path_matches_closed_form(self):
        # positive_part is a pathwise identity on the exponential but
        # drops the analytic profile, forcing the sampling estimator.
        base = fam.make_family(fam.iid_exponential(1.0))
        noprof = fam.transform_family(base, "positive_part")
        assert noprof.moments is None
        rep = truncation_gap_report(noprof, 8, replications=200000, seed=12)
        assert rep.method == "monte_carlo"
        n = np.arange(1, 9, dtype=float)
        assert np.allclose(rep.l1_gaps, (n + 1.0) * np.exp(-n), atol=5e-3)
        assert np.allclose(
            rep.mismatch_prob_partial_sums, np.cumsum(np.exp(-n)), atol=5e-3
        )

    def test_negativity_rejected(self):
        f = fam.make_family(fam.cosine())
        with pytest.raises(NegativityDetectedError):
            truncation_gap_report(f, 10)
        shifted = fam.transform_family(fam.make_family(fam.iid_uniform(-1.0, 1.0)), "center")
        with pytest.raises(NegativityDetectedError):
            truncation_gap_report(shifted, 10)


class TestBaselBound:
    def test_equality_at_one(self):
        rec = basel_tail_bound(1)
        assert rec.tail_value == rec.bound
        assert rec.holds

    def test_k2_values(self):
        rec = basel_tail_bound(2)
        assert rec.tail_value == pytest.approx(PI2_6 - 1.0, abs=1e-12)
        assert rec.bound == pytest.approx(PI2_6 / 2.0, abs=1e-12)
        assert rec.holds

    def test_k1000_partial_summation_oracle(self):
        rec = basel_tail_bound(1000)
        direct = math.fsum(1.0 / (j * j) for j in range(1000, 10**7))
        assert rec.tail_value == pytest.approx(direct, abs=1e-6)
        assert rec.holds

    def test_suite_holds_to_ten_thousand(self):
        suite = basel_tail_suite(10**4)
        assert len(suite) == 10**4
        assert all(r.holds for r in suite)

    @given(st.integers(min_value=1, max_value=10**4))
    @settings(max_examples=50, deadline=None)
    def test_holds_property(self, k):
        assert basel_tail_bound(k).holds

    def test_invalid_k(self):
        with pytest.raises(InvalidParamsError):
            basel_tail_bound(0)
