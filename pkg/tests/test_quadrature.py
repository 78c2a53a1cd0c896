import math

import numpy as np
import pytest

from llnlab.errors import InvalidParamsError, NonFiniteIntegrandError, ToleranceNotMetError
from llnlab.quadrature import (
    cosine_moment,
    gaussian_pospart_moments,
    gaussian_pospart_triple_nested,
    integrate_1d,
    normal_upper_tail,
)

INV_2PI = 1.0 / (2.0 * math.pi)
POSPART_MEAN = 1.0 / (2.0 * math.sqrt(2.0 * math.pi))


# Closed-form suite: (integrand, a, b, exact value).
CLOSED_FORMS = [
    (lambda t: math.exp(-t), 0.0, math.inf, 1.0),
    (lambda t: 0.0, 0.0, 5.0, 0.0),
    (lambda x: math.exp(-0.5 * x * x) / math.sqrt(2 * math.pi), -math.inf, math.inf, 1.0),
    (lambda x: x * x, 0.0, 1.0, 1.0 / 3.0),
    (lambda t: 1.0 / (1.0 + t * t), -math.inf, math.inf, math.pi),
]


@pytest.mark.parametrize("f,a,b,exact", CLOSED_FORMS)
def test_closed_forms(f, a, b, exact):
    res = integrate_1d(f, a, b, tolerance=1e-8)
    assert res.value == pytest.approx(exact, abs=1e-8)
    assert res.evaluations > 0
    # Error estimate is conservative on this suite.
    assert abs(res.value - exact) <= max(res.abs_error_estimate, 1e-15)


def test_exponential_via_fold_is_tight():
    res = integrate_1d(lambda t: math.exp(-t), 0.0, math.inf, tolerance=1e-10)
    assert abs(res.value - 1.0) <= 1e-10


def test_invalid_bounds_and_tolerance():
    with pytest.raises(InvalidParamsError):
        integrate_1d(lambda x: x, 1.0, 1.0)
    with pytest.raises(InvalidParamsError):
        integrate_1d(lambda x: x, 2.0, 1.0)
    with pytest.raises(InvalidParamsError):
        integrate_1d(lambda x: x, 0.0, 1.0, tolerance=0.0)


def test_non_finite_integrand_raises():
    with pytest.raises(NonFiniteIntegrandError):
        integrate_1d(lambda x: float("nan"), 0.0, 1.0)
    with pytest.raises(NonFiniteIntegrandError):
        integrate_1d(lambda x: math.inf if abs(x) < 0.5 else 1.0, -1.0, 1.0)


def test_tolerance_not_met_carries_partial_result():
    with pytest.raises(ToleranceNotMetError) as exc:
        integrate_1d(lambda x: math.cos(100.0 * x), 0.0, 50.0, tolerance=1e-12, limit=2)
    assert exc.value.result is not None
    assert exc.value.result.evaluations > 0


class TestCosineMoment:
    def test_full_grid_matches_closed_form(self):
        worst = 0.0
        for i in range(0, 21):
            for j in range(0, 21):
                res = cosine_moment(i, j)
                worst = max(worst, abs(res.value - res.analytic))
        assert worst <= 1e-10

    def test_values(self):
        assert cosine_moment(1, 2).value == pytest.approx(0.0, abs=1e-10)
        assert cosine_moment(3, 3).value == pytest.approx(0.5, abs=1e-10)
        assert cosine_moment(0, 0).value == pytest.approx(1.0, abs=1e-10)

    def test_negative_index_rejected(self):
        with pytest.raises(InvalidParamsError):
            cosine_moment(-1, 2)


class TestGaussianPositivePart:
    def test_mean_pos(self):
        rec = gaussian_pospart_moments()
        assert rec.mean_pos == pytest.approx(POSPART_MEAN, abs=1e-9)
        assert rec.mean_pos == pytest.approx(0.199471, abs=1e-4)

    def test_triple_and_product(self):
        rec = gaussian_pospart_moments()
        assert rec.triple_integral == pytest.approx(INV_2PI, abs=1e-8)
        # The gate identity halves the displayed integral, by construction.
        assert rec.product_pos == rec.triple_integral / 2.0
        assert rec.cov_pos > 0.0
        assert rec.cov_pos == pytest.approx(1.0 / (8.0 * math.pi), abs=1e-8)
        assert rec.var_pos == pytest.approx(0.25 - POSPART_MEAN**2, abs=1e-9)

    def test_nested_cross_check(self):
        rec = gaussian_pospart_moments()
        nested = gaussian_pospart_triple_nested(1e-5)
        assert nested.value == pytest.approx(rec.triple_integral, abs=1e-4)

    def test_monte_carlo_cross_check(self):
        rec = gaussian_pospart_moments()
        rng = np.random.Generator(np.random.Philox(20260809))
        z = rng.standard_normal((10**6, 2))
        prod = np.maximum(z[:, 0], 0.0) * np.maximum(z[:, 1], 0.0)
        est = float(prod.mean())
        se = float(prod.std(ddof=1)) / math.sqrt(len(prod))
        assert abs(est - rec.triple_integral) <= 4.0 * se
        pos = np.maximum(z[:, 0], 0.0)
        se_m = float(pos.std(ddof=1)) / math.sqrt(len(pos))
        assert abs(float(pos.mean()) - 2.0 * rec.mean_pos) <= 4.0 * se_m


def test_normal_upper_tail_values():
    assert normal_upper_tail(0.0) == pytest.approx(0.5, abs=1e-15)
    assert normal_upper_tail(1.959963984540054) == pytest.approx(0.025, abs=1e-9)
