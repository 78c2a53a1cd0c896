"""Checkers for the hypotheses behind law-of-large-numbers statements.

Each checker turns one analytic condition into a finite-horizon
diagnostic: variance-series summability, the quasi-uncorrelation
constant, boundedness of scaled mean sums, the integrated supremum tail,
mean-absolute-deviation rates, truncation gaps, and the quadratic-series
tail bound used by the truncation argument.

Verdicts are evidence, not proof.  A series is labelled
``diverges_evidence`` when its terms stay above a floor over the last
half of the horizon, ``converges_evidence`` when ``term * n**1.1``
remains bounded there (against ten times the first-half median), and
``inconclusive`` otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable, Optional

import numpy as np

from .errors import (
    InsufficientReplicationsError,
    InvalidParamsError,
    MomentsUnavailableError,
    NegativeVarianceError,
    NegativityDetectedError,
    NonMonotoneTailError,
    ToleranceNotMetError,
)
from .families import SequenceFamily, sample_matrix
from .quadrature import integrate_1d
from .seeding import chunk_generator, chunk_rows

CONVERGES = "converges_evidence"
DIVERGES = "diverges_evidence"
INCONCLUSIVE = "inconclusive"

PI2_OVER_6 = math.pi**2 / 6.0


# --------------------------------------------------------------------- #
# Normalizers and report types
# --------------------------------------------------------------------- #


@dataclass(frozen=True)
class NormalizerSpec:
    """The positive, non-decreasing normalizing sequence b_n.

    ``linear`` is b_n = n, ``power`` is b_n = n**p with p > 0, and
    ``explicit`` wraps a finite user-supplied array (flagged as
    horizon-limited).
    """

    kind: str
    p: Optional[float] = None
    values: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind == "linear":
            return
        if self.kind == "power":
            if self.p is None or not (self.p > 0):
                raise InvalidParamsError(f"power normalizer needs p > 0, got {self.p!r}")
            return
        if self.kind == "explicit":
            arr = np.asarray(self.values, dtype=float)
            if arr.ndim != 1 or len(arr) == 0:
                raise InvalidParamsError("explicit normalizer needs a non-empty 1-D array")
            if not np.all(arr > 0):
                raise InvalidParamsError("normalizer values must be positive")
            if np.any(np.diff(arr) < 0):
                raise InvalidParamsError("normalizer values must be non-decreasing")
            object.__setattr__(self, "values", arr)
            return
        raise InvalidParamsError(f"unknown normalizer kind {self.kind!r}")

    @classmethod
    def linear(cls) -> "NormalizerSpec":
        return cls("linear")

    @classmethod
    def power(cls, p: float) -> "NormalizerSpec":
        return cls("power", p=float(p))

    @classmethod
    def explicit(cls, values) -> "NormalizerSpec":
        return cls("explicit", values=np.asarray(values, dtype=float))

    @property
    def horizon_limited(self) -> bool:
        return self.kind == "explicit"

    @property
    def max_n(self) -> Optional[int]:
        return len(self.values) if self.kind == "explicit" else None

    def value_at(self, n):
        """b_n for a scalar index or an index array."""
        arr = np.asarray(n)
        if self.kind == "linear":
            out = arr.astype(float)
        elif self.kind == "power":
            out = arr.astype(float) ** self.p
        else:
            if np.any(arr > len(self.values)) or np.any(arr < 1):
                raise InvalidParamsError(
                    f"explicit normalizer only covers n in [1, {len(self.values)}]"
                )
            out = self.values[arr - 1]
        return out if arr.ndim else float(out)


@dataclass(frozen=True)
class SeriesReport:
    """Terms and running sums of a condition series, with a verdict."""

    n_values: np.ndarray
    terms: np.ndarray
    partial_sums: np.ndarray
    verdict: str
    verdict_basis: str
    horizon: int

    def to_csv_rows(self) -> list[list]:
        return [[int(n), float(t), float(s)] for n, t, s in zip(self.n_values, self.terms, self.partial_sums)]

    csv_header = ("n", "term", "partial_sum")

    def to_json_summary(self) -> dict[str, Any]:
        return {
            "verdict": self.verdict,
            "verdict_basis": self.verdict_basis,
            "horizon": int(self.horizon),
            "final_partial_sum": float(self.partial_sums[-1]),
            "max_term": float(np.max(self.terms)),
            "last_term": float(self.terms[-1]),
        }


@dataclass(frozen=True)
class RatioReport:
    """Estimated Var(S_n) over the summed per-index variances."""

    n_grid: np.ndarray
    ratios: np.ndarray
    stderrs: np.ndarray
    c_hat: float
    replications: int
    denominator_source: str

    def to_csv_rows(self) -> list[list]:
        return [[int(n), float(r), float(s)] for n, r, s in zip(self.n_grid, self.ratios, self.stderrs)]

    csv_header = ("n", "ratio", "stderr")

    def to_json_summary(self) -> dict[str, Any]:
        return {
            "c_hat": float(self.c_hat),
            "replications": int(self.replications),
            "denominator_source": self.denominator_source,
            "ratios": [float(r) for r in self.ratios],
            "stderrs": [float(s) for s in self.stderrs],
            "n_grid": [int(n) for n in self.n_grid],
        }


def _series_verdict(n_values: np.ndarray, terms: np.ndarray, divergence_floor: float) -> tuple[str, str]:
    size = len(terms)
    half = size // 2
    if half == 0:
        return INCONCLUSIVE, "horizon too small for a verdict"
    last_terms = terms[half:]
    # "Fails to approach 0": the last-half minimum sits above the floor
    # and the window is not in visible decay (a geometric run that has
    # not reached the floor yet still halves across the window).
    liminf_proxy = float(np.min(last_terms))
    window_decays = float(terms[-1]) < 0.5 * float(terms[half])
    if liminf_proxy > divergence_floor and not window_decays:
        return DIVERGES, (
            f"terms do not approach 0: min over the last half is "
            f"{liminf_proxy:.6g} > floor {divergence_floor:.1g} and the window "
            f"shows no decay ({terms[half]:.6g} -> {terms[-1]:.6g})"
        )
    scaled = terms * np.asarray(n_values, dtype=float) ** 1.1
    ceiling = max(10.0 * float(np.median(scaled[:half])), 1e-12)
    peak = float(np.max(scaled[half:]))
    if peak <= ceiling:
        return CONVERGES, (
            f"term*n^1.1 bounded over the last half: max {peak:.6g} <= "
            f"10x first-half median {ceiling:.6g}"
        )
    return INCONCLUSIVE, (
        f"term*n^1.1 grows: max {peak:.6g} > ceiling {ceiling:.6g}"
    )


# --------------------------------------------------------------------- #
# Series and supremum checks
# --------------------------------------------------------------------- #


def kolmogorov_series(
    var_fn: Callable[[Any], Any],
    normalizer: NormalizerSpec,
    horizon: int,
    divergence_floor: float = 1e-6,
) -> SeriesReport:
    """Summability diagnostic for Var(X_n) / b_n**2."""
    if horizon < 10:
        raise InvalidParamsError(f"horizon must be >= 10, got {horizon}")
    n = np.arange(1, int(horizon) + 1)
    variances = np.asarray(var_fn(n), dtype=float)
    variances = np.broadcast_to(variances, n.shape)
    if np.any(variances < 0):
        bad = int(n[variances < 0][0])
        raise NegativeVarianceError(f"var_fn({bad}) < 0")
    b = np.asarray(normalizer.value_at(n), dtype=float)
    terms = variances / (b * b)
    verdict, basis = _series_verdict(n, terms, divergence_floor)
    return SeriesReport(
        n_values=n,
        terms=terms,
        partial_sums=np.cumsum(terms),
        verdict=verdict,
        verdict_basis=basis,
        horizon=int(horizon),
    )


def quasi_uncorrelation_ratio(
    family: SequenceFamily,
    n_grid,
    replications: int,
    seed: int,
    batches: int = 10,
) -> RatioReport:
    """Estimate Var(S_n) / sum_k Var(X_k) on a grid of n.

    Var(S_n) is estimated across independent whole-trajectory
    replications (the families are not stationary, so overlapping
    windows would bias it); the denominator comes from the analytic
    variance profile when present, otherwise from per-index sample
    variances.  Standard errors come from replication batching: the
    replications split into ``batches`` contiguous blocks, each block
    yields its own ratio, and the spread of block ratios scales down by
    sqrt(batches).
    """
    if replications < 100:
        raise InsufficientReplicationsError(f"need >= 100 replications, got {replications}")
    grid = np.asarray(sorted(set(int(v) for v in np.atleast_1d(n_grid))), dtype=int)
    if len(grid) == 0 or grid[0] < 1:
        raise InvalidParamsError("n_grid must contain positive integers")
    horizon = int(grid[-1])
    replications = int(replications)
    batches = max(1, min(int(batches), replications // 2))

    g = len(grid)
    cols = grid - 1
    # Per batch: replication count, sum and sum of squares of S_n per
    # grid point; plus per-index value sums for the empirical denominator.
    counts = np.zeros(batches, dtype=np.int64)
    s_sum = np.zeros((batches, g))
    s_sq = np.zeros((batches, g))
    need_empirical = family.moments is None or family.moments.var_fn is None
    if need_empirical:
        v_sum = np.zeros(horizon)
        v_sq = np.zeros(horizon)

    rows = chunk_rows(horizon)
    done = 0
    chunk_index = 0
    while done < replications:
        take = min(rows, replications - done)
        values, _ = sample_matrix(family, take, horizon, chunk_generator(seed, chunk_index))
        sums = np.cumsum(values, axis=1)[:, cols]
        batch_ids = (np.arange(done, done + take) * batches) // replications
        for bid in np.unique(batch_ids):
            mask = batch_ids == bid
            counts[bid] += int(np.count_nonzero(mask))
            s_sum[bid] += sums[mask].sum(axis=0)
            s_sq[bid] += (sums[mask] ** 2).sum(axis=0)
        if need_empirical:
            v_sum += values.sum(axis=0)
            v_sq += (values**2).sum(axis=0)
        done += take
        chunk_index += 1

    if need_empirical:
        col_var = (v_sq - v_sum**2 / replications) / (replications - 1)
        denom = np.cumsum(col_var)[cols]
        denom_source = "per-index sample variances"
    else:
        per_index = np.asarray(family.moments.var_fn(np.arange(1, horizon + 1)), dtype=float)
        denom = np.cumsum(per_index)[cols]
        denom_source = "analytic var_fn"
    if np.any(denom <= 0):
        raise InvalidParamsError("variance denominator vanished; ratio undefined")

    total_sum = s_sum.sum(axis=0)
    total_sq = s_sq.sum(axis=0)
    var_total = (total_sq - total_sum**2 / replications) / (replications - 1)
    ratios = var_total / denom

    if batches > 1:
        batch_ratios = np.empty((batches, g))
        for bid in range(batches):
            m = counts[bid]
            bv = (s_sq[bid] - s_sum[bid] ** 2 / m) / (m - 1)
            batch_ratios[bid] = bv / denom
        stderrs = batch_ratios.std(axis=0, ddof=1) / math.sqrt(batches)
    else:
        stderrs = np.zeros(g)

    return RatioReport(
        n_grid=grid,
        ratios=ratios,
        stderrs=stderrs,
        c_hat=float(np.max(ratios)),
        replications=replications,
        denominator_source=denom_source,
    )


@dataclass(frozen=True)
class ScaledMeanReport:
    """Running maximum of E S_n / b_n over the horizon."""

    a_hat: float
    argmax_n: int
    values: np.ndarray
    unbounded_evidence: bool
    horizon: int

    csv_header = ("n", "scaled_mean")

    def to_csv_rows(self) -> list[list]:
        return [[i + 1, float(v)] for i, v in enumerate(self.values)]

    def to_json_summary(self) -> dict[str, Any]:
        return {
            "a_hat": float(self.a_hat),
            "argmax_n": int(self.argmax_n),
            "unbounded_evidence": bool(self.unbounded_evidence),
            "horizon": int(self.horizon),
        }


def scaled_mean_sup(
    family: SequenceFamily,
    normalizer: NormalizerSpec,
    horizon: int,
    mc_replications: int = 0,
    seed: int = 0,
) -> ScaledMeanReport:
    """Largest E S_n / b_n over n <= horizon.

    Uses the analytic mean-sum profile when available; otherwise falls
    back to a Monte Carlo estimate with ``mc_replications`` paths.  The
    report flags growth at the horizon (the finite scan cannot certify a
    finite supremum when the maximum is still moving).
    """
    if horizon < 1:
        raise InvalidParamsError("horizon must be >= 1")
    n = np.arange(1, int(horizon) + 1)
    if family.moments is not None and family.moments.mean_sum_fn is not None:
        mean_sums = np.asarray(family.moments.mean_sum_fn(n), dtype=float)
        mean_sums = np.broadcast_to(mean_sums, n.shape).copy()
    elif mc_replications > 0:
        mean_sums = np.zeros(int(horizon))
        rows = chunk_rows(horizon)
        done = 0
        chunk_index = 0
        while done < mc_replications:
            take = min(rows, mc_replications - done)
            values, _ = sample_matrix(family, take, int(horizon), chunk_generator(seed, chunk_index))
            mean_sums += np.cumsum(values, axis=1).sum(axis=0)
            done += take
            chunk_index += 1
        mean_sums /= mc_replications
    else:
        raise MomentsUnavailableError(
            f"{family.label} has no mean_sum profile and no Monte Carlo fallback was configured"
        )
    scaled = mean_sums / np.asarray(normalizer.value_at(n), dtype=float)
    argmax = int(np.argmax(scaled))
    half = len(scaled) // 2
    growing = bool(len(scaled) >= 2 and np.max(scaled[half:]) > np.max(scaled[: max(half, 1)]) + 1e-15)
    return ScaledMeanReport(
        a_hat=float(scaled[argmax]),
        argmax_n=argmax + 1,
        values=scaled,
        unbounded_evidence=growing,
        horizon=int(horizon),
    )


# --------------------------------------------------------------------- #
# Tail integral
# --------------------------------------------------------------------- #


@dataclass(frozen=True)
class TailIntegralReport:
    value: float
    truncation_bound: float
    diverges_evidence: bool
    abs_error_estimate: float

    def to_json_summary(self) -> dict[str, Any]:
        return {
            "value": float(self.value),
            "truncation_bound": float(self.truncation_bound),
            "diverges_evidence": bool(self.diverges_evidence),
            "abs_error_estimate": float(self.abs_error_estimate),
        }


def cg_tail_integral(
    tail_sup_fn: Callable[[float], float],
    t_max: float,
    tolerance: float = 1e-8,
    decay_floor: float = 1e-8,
) -> TailIntegralReport:
    """Integrate a supremum tail over [0, t_max] plus a remainder estimate.

    A finite window can certify a finite integral only when the tail has
    visibly decayed by ``t_max``.  When ``tail(t_max) <= decay_floor``
    the remainder over (t_max, inf) is evaluated by quadrature on the
    folded range and reported as ``truncation_bound``; otherwise (or
    when that quadrature fails or exceeds 1) the report sets
    ``diverges_evidence``: the data up to ``t_max`` cannot certify
    integrability, as with tails whose supremum never decays.
    """
    if not (t_max > 0):
        raise InvalidParamsError("t_max must be positive")
    if not (tolerance > 0):
        raise InvalidParamsError("tolerance must be positive")

    probe = np.linspace(0.0, float(t_max), 257)
    vals = np.asarray([float(tail_sup_fn(t)) for t in probe])
    if np.any(vals < -tolerance) or np.any(vals > 1.0 + tolerance):
        raise InvalidParamsError("tail values must lie in [0, 1]")
    increases = np.diff(vals)
    if np.any(increases > tolerance):
        at = probe[1:][increases > tolerance][0]
        raise NonMonotoneTailError(f"tail increases near t={at:g} beyond tolerance {tolerance:g}")

    head = integrate_1d(tail_sup_fn, 0.0, float(t_max), tolerance)

    if float(tail_sup_fn(float(t_max))) > decay_floor:
        bound, rem_err, diverges = math.inf, math.inf, True
    else:
        diverges = False
        try:
            remainder = integrate_1d(tail_sup_fn, float(t_max), math.inf, max(tolerance, 1e-9))
            bound, rem_err = remainder.value, remainder.abs_error_estimate
        except ToleranceNotMetError as exc:
            bound = exc.result.value if exc.result is not None else math.inf
            rem_err = exc.result.abs_error_estimate if exc.result is not None else math.inf
            diverges = True
        if not math.isfinite(bound) or bound > 1.0:
            diverges = True

    return TailIntegralReport(
        value=head.value,
        truncation_bound=float(bound),
        diverges_evidence=diverges,
        abs_error_estimate=head.abs_error_estimate + rem_err,
    )


def sup_tail_over_horizon(family: SequenceFamily, n_max: int) -> Callable[[float], float]:
    """max over n <= n_max of P(|X_n| > t), from the analytic tails.

    The true supremum over every index is not computable from finitely
    many tails; callers should report ``n_max`` alongside the result.
    Families with negative support would need a two-sided tail, so this
    helper requires essinf >= 0.
    """
    if family.moments is None or family.moments.tail_fn is None:
        raise MomentsUnavailableError(f"{family.label} carries no analytic tail")
    n = np.arange(1, int(n_max) + 1)
    essinf = np.asarray(family.moments.essinf_fn(n), dtype=float)
    if np.any(essinf < 0):
        raise InvalidParamsError("sup_tail_over_horizon needs a non-negative family")
    tail = family.moments.tail_fn

    def sup_tail(t: float) -> float:
        return float(np.max(tail(n, float(t))))

    return sup_tail


# --------------------------------------------------------------------- #
# Mean absolute deviation and truncation gaps
# --------------------------------------------------------------------- #


def mean_abs_deviation_rate(
    family: SequenceFamily,
    horizon: int,
    replications: int,
    seed: int,
) -> SeriesReport:
    """Running averages of estimated E|X_k - E X_k| up to each n.

    The verdict tests boundedness of the averaged sequence (not
    summability): bounded evidence when the last-half maximum stays
    within ten times the first-half median.
    """
    if replications < 30:
        raise InsufficientReplicationsError(f"need >= 30 replications, got {replications}")
    if horizon < 2:
        raise InvalidParamsError("horizon must be >= 2")
    horizon = int(horizon)
    replications = int(replications)
    n = np.arange(1, horizon + 1)

    has_mean = family.moments is not None and family.moments.mean_fn is not None
    if has_mean:
        means = np.broadcast_to(np.asarray(family.moments.mean_fn(n), dtype=float), n.shape)
    else:
        means = _column_means(family, horizon, replications, seed)

    abs_dev = np.zeros(horizon)
    rows = chunk_rows(horizon)
    done = 0
    chunk_index = 0
    while done < replications:
        take = min(rows, replications - done)
        values, _ = sample_matrix(family, take, horizon, chunk_generator(seed, chunk_index))
        abs_dev += np.abs(values - means[None, :]).sum(axis=0)
        done += take
        chunk_index += 1
    abs_dev /= replications

    terms = np.cumsum(abs_dev) / n
    half = horizon // 2
    peak = float(np.max(terms[half:]))
    ceiling = max(10.0 * float(np.median(terms[:half])), 1e-12)
    if peak <= ceiling:
        verdict, basis = CONVERGES, (
            f"bounded evidence: last-half max {peak:.6g} <= 10x first-half median {ceiling:.6g}"
        )
    else:
        verdict, basis = INCONCLUSIVE, (
            f"growth: last-half max {peak:.6g} > 10x first-half median {ceiling:.6g}"
        )
    return SeriesReport(
        n_values=n,
        terms=terms,
        partial_sums=np.cumsum(terms),
        verdict=verdict,
        verdict_basis=basis,
        horizon=horizon,
    )


def _column_means(family: SequenceFamily, horizon: int, replications: int, seed: int) -> np.ndarray:
    total = np.zeros(horizon)
    rows = chunk_rows(horizon)
    done = 0
    chunk_index = 0
    while done < replications:
        take = min(rows, replications - done)
        values, _ = sample_matrix(family, take, horizon, chunk_generator(seed, chunk_index))
        total += values.sum(axis=0)
        done += take
        chunk_index += 1
    return total / replications


@dataclass(frozen=True)
class TruncationGapReport:
    """Diagnostics for replacing X_n by X_n 1{X_n <= n}."""

    n_values: np.ndarray
    l1_gaps: np.ndarray
    mismatch_prob_partial_sums: np.ndarray
    cesaro_gap: np.ndarray
    method: str

    csv_header = ("n", "l1_gap", "mismatch_prob_partial_sum", "cesaro_gap")

    def to_csv_rows(self) -> list[list]:
        return [
            [int(n), float(g), float(m), float(c)]
            for n, g, m, c in zip(
                self.n_values, self.l1_gaps, self.mismatch_prob_partial_sums, self.cesaro_gap
            )
        ]

    def to_json_summary(self) -> dict[str, Any]:
        return {
            "method": self.method,
            "final_mismatch_partial_sum": float(self.mismatch_prob_partial_sums[-1]),
            "max_l1_gap": float(np.max(self.l1_gaps)),
            "final_cesaro_gap": float(self.cesaro_gap[-1]),
        }


def truncation_gap_report(
    family: SequenceFamily,
    horizon: int,
    replications: int = 0,
    seed: int = 0,
) -> TruncationGapReport:
    """L1 gaps E(X_n - Y_n), running sums of P(X_n > n), and Cesaro gaps.

    Requires a non-negative family.  Uses the analytic tail profile when
    available: for non-negative X, E(X 1{X > n}) = n P(X > n) plus the
    integrated tail beyond n.  Falls back to Monte Carlo otherwise.
    The Cesaro gap is by construction the running average of the L1
    gaps, so (E S_n - E T_n)/n inherits whatever accuracy they have.
    """
    if horizon < 1:
        raise InvalidParamsError("horizon must be >= 1")
    horizon = int(horizon)
    n = np.arange(1, horizon + 1)

    analytic = (
        family.moments is not None
        and family.moments.tail_fn is not None
        and family.moments.essinf_fn is not None
    )
    if analytic:
        essinf = np.broadcast_to(np.asarray(family.moments.essinf_fn(n), dtype=float), n.shape)
        if np.any(essinf < 0):
            raise NegativityDetectedError(f"{family.label} has negative essential infimum")
        tail = family.moments.tail_fn
        mismatch = np.array([float(tail(k, float(k))) for k in n])
        l1 = np.empty(horizon)
        for i, k in enumerate(n):
            point = float(tail(k, float(k)))
            if point == 0.0:
                l1[i] = 0.0
                continue
            integrated = integrate_1d(lambda t, kk=k: float(tail(kk, t)), float(k), math.inf, 1e-10)
            l1[i] = k * point + integrated.value
        method = "analytic_tail"
    else:
        if replications < 30:
            raise InsufficientReplicationsError("Monte Carlo path needs >= 30 replications")
        replications = int(replications)
        gap_sum = np.zeros(horizon)
        exceed = np.zeros(horizon, dtype=np.int64)
        seen_min = math.inf
        rows = chunk_rows(horizon)
        done = 0
        chunk_index = 0
        while done < replications:
            take = min(rows, replications - done)
            values, _ = sample_matrix(family, take, horizon, chunk_generator(seed, chunk_index))
            seen_min = min(seen_min, float(values.min()))
            over = values > n[None, :].astype(float)
            gap_sum += np.where(over, values, 0.0).sum(axis=0)
            exceed += over.sum(axis=0)
            done += take
            chunk_index += 1
        if seen_min < 0:
            raise NegativityDetectedError(
                f"{family.label} produced a negative sample ({seen_min:g}) "
                "but truncation diagnostics assume non-negativity"
            )
        l1 = gap_sum / replications
        mismatch = exceed / replications
        method = "monte_carlo"

    return TruncationGapReport(
        n_values=n,
        l1_gaps=l1,
        mismatch_prob_partial_sums=np.cumsum(mismatch),
        cesaro_gap=np.cumsum(l1) / n,
        method=method,
    )


# --------------------------------------------------------------------- #
# Quadratic-series tail bound
# --------------------------------------------------------------------- #


@dataclass(frozen=True)
class BaselBound:
    k: int
    tail_value: float
    bound: float
    holds: bool


def basel_tail_bound(k: int) -> BaselBound:
    """Tail of the reciprocal-square series against the (pi^2/6)/k bound.

    The tail is computed as the exact rearrangement pi^2/6 minus the
    leading partial sum, so k = 1 reproduces the full series value and
    the bound holds with equality there.
    """
    if k < 1:
        raise InvalidParamsError("k must be >= 1")
    partial = math.fsum(1.0 / (j * j) for j in range(1, int(k)))
    tail = PI2_OVER_6 - partial
    bound = PI2_OVER_6 / k
    return BaselBound(k=int(k), tail_value=tail, bound=bound, holds=tail <= bound)


def basel_tail_suite(k_max: int) -> list[BaselBound]:
    """Vectorised sweep of ``basel_tail_bound`` over k = 1..k_max."""
    if k_max < 1:
        raise InvalidParamsError("k_max must be >= 1")
    j = np.arange(1, int(k_max) + 1, dtype=float)
    partials = np.concatenate([[0.0], np.cumsum(1.0 / (j * j))[:-1]])
    tails = PI2_OVER_6 - partials
    bounds = PI2_OVER_6 / j
    return [
        BaselBound(k=int(kk), tail_value=float(t), bound=float(b), holds=bool(t <= b))
        for kk, t, b in zip(j.astype(int), tails, bounds)
    ]
