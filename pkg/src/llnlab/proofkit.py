"""Subsequence apparatus for the almost-sure convergence argument.

The argument behind the strong-law statements controls (S_n - E S_n)/n
by squeezing every index n between two members of a geometrically
sparse subsequence.  The machinery here makes that squeeze numerically
checkable:

* ``build_index`` partitions indices by geometric scale
  m(n) = floor(log_alpha n) and by which epsilon-band the scaled mean
  E S_n / b_n falls into, and records the extreme members k(level, s)-
  and k(level, s)+ of every (scale, band) cell.
* ``kappa_report`` bounds the reciprocal-square sums over those
  extremes against the closed geometric bound 4 alpha^4 /
  ((alpha^2 - 1) j^2); every reported value includes an explicit
  geometric tail term so it stays a rigorous upper bound.
* ``subsequence_variance_series`` and ``chebyshev_report`` carry the
  variance summability of the extremes through the Chebyshev bound,
  the summability evidence feeding a Borel-Cantelli conclusion.
* ``sandwich_check`` evaluates the five-expression squeeze pathwise on
  a sampled trajectory and records any ordering violations.

The squeeze uses the scaled-mean supremum A both as band ceiling and as
the constant in the outer slack terms; reports surface it as
``bound_constant``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from .conditions import INCONCLUSIVE, NormalizerSpec, SeriesReport, _series_verdict
from .errors import (
    HorizonMismatchError,
    InsufficientReplicationsError,
    InvalidParamsError,
    NegativeVarianceError,
    NegativityDetectedError,
    NonFiniteMeanError,
    SupExceededError,
)
from .families import SequenceFamily, Trajectory, sample_matrix
from .seeding import chunk_generator, chunk_rows

SANDWICH_TOLERANCE = 1e-12


# --------------------------------------------------------------------- #
# Index construction
# --------------------------------------------------------------------- #


@dataclass(frozen=True)
class SubsequenceIndex:
    """Geometric-scale / mean-band partition of the indices 1..horizon.

    Arrays ``m``, ``s``, ``mean_sums`` and ``scaled_means`` are indexed
    directly by n (slot 0 is unused).  ``k_minus`` and ``k_plus`` hold
    the cell extremes per (level, band); cells no index falls into carry
    the fallback floor(alpha**level).
    """

    alpha: float
    epsilon: float
    a_value: float
    L: int
    horizon: int
    normalizer: NormalizerSpec
    m: np.ndarray
    s: np.ndarray
    k_minus: np.ndarray
    k_plus: np.ndarray
    mean_sums: np.ndarray
    scaled_means: np.ndarray

    @property
    def max_level(self) -> int:
        return self.k_minus.shape[0] - 1

    def mean_path(self, n):
        """E S_n for a scalar index or an index array (n <= horizon)."""
        return self.mean_sums[np.asarray(n)] if np.ndim(n) else float(self.mean_sums[int(n)])

    def cell(self, level: int, band: int) -> tuple[int, int]:
        return int(self.k_minus[level, band]), int(self.k_plus[level, band])

    def k_pair(self, n: int) -> tuple[int, int]:
        """Cell extremes (k-, k+) of the cell containing index n."""
        lvl, band = int(self.m[n]), int(self.s[n])
        return int(self.k_minus[lvl, band]), int(self.k_plus[lvl, band])

    def check_invariants(self) -> dict[str, int]:
        """Violation counts for the structural invariants (all should be 0)."""
        n = np.arange(1, self.horizon + 1)
        m = self.m[1:]
        s = self.s[1:]
        e = self.scaled_means[1:]
        alpha, eps = self.alpha, self.epsilon

        bracket = int(np.count_nonzero((alpha**m > n) | (alpha ** (m + 1) <= n)))
        band = int(np.count_nonzero((eps * s > e) | (eps * (s + 1) <= e)))

        km = self.k_minus[m, s]
        kp = self.k_plus[m, s]
        membership = int(np.count_nonzero((km > n) | (kp < n)))

        levels = np.arange(self.max_level + 1)
        floors = np.floor(alpha ** levels.astype(float)).astype(np.int64)
        cell_floor = int(
            np.count_nonzero(self.k_minus < floors[:, None])
            + np.count_nonzero(self.k_plus < floors[:, None])
        )

        gap_minus = np.abs(self.scaled_means[km] - e)
        gap_plus = np.abs(self.scaled_means[kp] - e)
        scaled_mean_gap = int(np.count_nonzero((gap_minus > eps) | (gap_plus > eps)))

        return {
            "bracket": bracket,
            "band": band,
            "membership": membership,
            "cell_floor": cell_floor,
            "scaled_mean_gap": scaled_mean_gap,
        }


def _eval_mean_path(mean_path: Callable[[Any], Any], n: np.ndarray) -> np.ndarray:
    try:
        out = np.asarray(mean_path(n), dtype=float)
        if out.shape == n.shape:
            return out
    except Exception:
        pass
    return np.array([float(mean_path(int(k))) for k in n])


def _floor_consistent(x: float, unit: float) -> int:
    """floor(x / unit) adjusted so unit*q <= x < unit*(q+1) as floats."""
    q = math.floor(x / unit)
    while unit * (q + 1) <= x:
        q += 1
    while unit * q > x:
        q -= 1
    return q


def build_index(
    mean_path: Callable[[Any], Any],
    alpha: float,
    epsilon: float,
    horizon: int,
    normalizer: NormalizerSpec | None = None,
    a_value: float | None = None,
) -> SubsequenceIndex:
    """Construct the subsequence index for a mean path E S_n.

    ``a_value`` defaults to the scan maximum of E S_n / b_n over the
    horizon; a caller-supplied value is validated against the band
    structure and raises :class:`SupExceededError` when some scaled mean
    reaches the band above floor(a_value / epsilon).
    """
    if not alpha > 1:
        raise InvalidParamsError(f"alpha must exceed 1, got {alpha}")
    if not epsilon > 0:
        raise InvalidParamsError(f"epsilon must be positive, got {epsilon}")
    if horizon < 1:
        raise InvalidParamsError("horizon must be >= 1")
    normalizer = normalizer or NormalizerSpec.linear()
    horizon = int(horizon)

    n = np.arange(1, horizon + 1)
    mean_sums = _eval_mean_path(mean_path, n)
    if not np.all(np.isfinite(mean_sums)):
        bad = int(n[~np.isfinite(mean_sums)][0])
        raise NonFiniteMeanError(f"mean path is not finite at n={bad}")
    scaled = mean_sums / np.asarray(normalizer.value_at(n), dtype=float)
    if np.any(scaled < 0):
        bad = int(n[scaled < 0][0])
        raise InvalidParamsError(f"scaled mean is negative at n={bad}; non-negative families only")

    if a_value is None:
        a = float(np.max(scaled))
    else:
        a = float(a_value)
        if not math.isfinite(a) or a < 0:
            raise InvalidParamsError(f"a_value must be a finite non-negative real, got {a!r}")
    L = _floor_consistent(a, epsilon) if a > 0 else 0
    if np.any(scaled >= epsilon * (L + 1)):
        bad = int(n[scaled >= epsilon * (L + 1)][0])
        raise SupExceededError(
            f"scaled mean at n={bad} reaches {scaled[bad - 1]:.6g} >= "
            f"epsilon*(L+1) = {epsilon * (L + 1):.6g}; the supplied bound underestimates the supremum"
        )

    # Geometric scale: floor of log_alpha n, with fix-ups so the float
    # power comparisons alpha**m <= n < alpha**(m+1) hold exactly.
    m = np.floor(np.log(n) / math.log(alpha)).astype(np.int64)
    for _ in range(4):
        too_high = alpha ** m.astype(float) > n
        m[too_high] -= 1
        too_low = alpha ** (m + 1).astype(float) <= n
        m[too_low] += 1
        if not (np.any(too_high) or np.any(too_low)):
            break

    # Band labels with the same fix-up treatment against the half-open
    # interval arithmetic used by the invariant checks.
    s = np.floor(scaled / epsilon).astype(np.int64)
    for _ in range(4):
        too_low = epsilon * (s + 1) <= scaled
        s[too_low] += 1
        too_high = epsilon * s > scaled
        s[too_high] -= 1
        if not (np.any(too_low) or np.any(too_high)):
            break
    if np.any(s < 0) or np.any(s > L):
        raise SupExceededError("band label escaped {0..L}; inconsistent bound")

    max_level = int(m[-1])
    levels = np.arange(max_level + 1, dtype=float)
    fallback = np.floor(alpha**levels).astype(np.int64)

    big = np.iinfo(np.int64).max
    k_minus = np.full((max_level + 1, L + 1), big, dtype=np.int64)
    k_plus = np.full((max_level + 1, L + 1), -1, dtype=np.int64)
    np.minimum.at(k_minus, (m, s), n)
    np.maximum.at(k_plus, (m, s), n)
    empty = k_plus < 0
    k_minus[empty] = fallback[:, None].repeat(L + 1, axis=1)[empty]
    k_plus[empty] = k_minus[empty]

    pad = lambda arr, fill: np.concatenate([[fill], arr])
    return SubsequenceIndex(
        alpha=float(alpha),
        epsilon=float(epsilon),
        a_value=a,
        L=int(L),
        horizon=horizon,
        normalizer=normalizer,
        m=pad(m, -1),
        s=pad(s, -1),
        k_minus=k_minus,
        k_plus=k_plus,
        mean_sums=pad(mean_sums, 0.0),
        scaled_means=pad(scaled, np.nan),
    )


# --------------------------------------------------------------------- #
# Reciprocal-square sums over cell extremes
# --------------------------------------------------------------------- #


@dataclass(frozen=True)
class KappaBound:
    j: int
    kappa_j: float
    bound: float
    holds: bool


def kappa_report(index: SubsequenceIndex, s: int, j_max: int) -> list[KappaBound]:
    """Bound the sums kappa_j = sum over levels with k >= j of k**-2.

    The finite sum over materialised levels is topped up with the
    geometric tail bound 4 alpha**(-2 M) / (alpha**2 - 1) covering all
    deeper levels (every cell extreme at level v is at least
    floor(alpha**v) >= alpha**v / 2), so each kappa_j is a rigorous
    upper bound.  Both cell extremes are evaluated and the larger sum is
    reported.  The target is 4 alpha**4 / ((alpha**2 - 1) j**2).
    """
    if not (0 <= s <= index.L):
        raise InvalidParamsError(f"band s must lie in [0, {index.L}], got {s}")
    if j_max < 1:
        raise InvalidParamsError("j_max must be >= 1")
    alpha = index.alpha
    tail = 4.0 * alpha ** (-2.0 * index.max_level) / (alpha**2 - 1.0)

    suffix_sums = []
    sorted_ks = []
    for ks in (index.k_minus[:, s], index.k_plus[:, s]):
        order = np.sort(ks.astype(float))
        inv2 = 1.0 / order**2
        suffix = np.concatenate([np.cumsum(inv2[::-1])[::-1], [0.0]])
        sorted_ks.append(order)
        suffix_sums.append(suffix)

    out = []
    coeff = 4.0 * alpha**4 / (alpha**2 - 1.0)
    for j in range(1, int(j_max) + 1):
        kappa = max(
            suffix_sums[0][np.searchsorted(sorted_ks[0], j, side="left")],
            suffix_sums[1][np.searchsorted(sorted_ks[1], j, side="left")],
        ) + tail
        bound = coeff / (j * j)
        out.append(KappaBound(j=j, kappa_j=float(kappa), bound=float(bound), holds=bool(kappa <= bound)))
    return out


def subsequence_variance_series(
    index: SubsequenceIndex,
    var_fn: Callable[[Any], Any],
    sign: str,
    s: int,
    c: float = 1.0,
) -> SeriesReport:
    """Per-level bound c * (sum_{j<=k} Var X_j) / k**2 at the cell extremes.

    ``c`` is the quasi-uncorrelation constant (1 for pairwise
    uncorrelated families); the terms dominate Var(S_k)/k**2 along the
    chosen extreme, so their summability carries the variance condition
    to the subsequence.
    """
    if sign not in ("plus", "minus"):
        raise InvalidParamsError(f"sign must be 'plus' or 'minus', got {sign!r}")
    if not (0 <= s <= index.L):
        raise InvalidParamsError(f"band s must lie in [0, {index.L}], got {s}")
    ks = (index.k_plus if sign == "plus" else index.k_minus)[:, s].astype(np.int64)
    k_max = int(ks.max())
    j = np.arange(1, k_max + 1)
    variances = np.broadcast_to(np.asarray(var_fn(j), dtype=float), j.shape)
    if np.any(variances < 0):
        bad = int(j[variances < 0][0])
        raise NegativeVarianceError(f"var_fn({bad}) < 0")
    cum = np.cumsum(variances)
    terms = float(c) * cum[ks - 1] / ks.astype(float) ** 2
    levels = np.arange(len(ks))
    if len(terms) >= 4:
        verdict, basis = _series_verdict(np.maximum(levels, 1), terms, 1e-6)
    else:
        verdict, basis = INCONCLUSIVE, "too few levels for a verdict"
    return SeriesReport(
        n_values=levels,
        terms=terms,
        partial_sums=np.cumsum(terms),
        verdict=verdict,
        verdict_basis=basis,
        horizon=len(ks),
    )


# --------------------------------------------------------------------- #
# Chebyshev bounds along the subsequence
# --------------------------------------------------------------------- #


@dataclass(frozen=True)
class ChebyshevLevelReport:
    """Empirical deviation probabilities vs Chebyshev bounds per level."""

    levels: np.ndarray
    k_minus: np.ndarray
    k_plus: np.ndarray
    p_hat_minus: np.ndarray
    p_hat_plus: np.ndarray
    stderr_minus: np.ndarray
    stderr_plus: np.ndarray
    bound_minus: np.ndarray
    bound_plus: np.ndarray
    bound_partial_minus: np.ndarray
    bound_partial_plus: np.ndarray
    delta: float
    replications: int
    bound_source: str

    csv_header = (
        "level",
        "k_minus",
        "k_plus",
        "p_hat_minus",
        "p_hat_plus",
        "stderr_minus",
        "stderr_plus",
        "bound_minus",
        "bound_plus",
    )

    def to_csv_rows(self) -> list[list]:
        return [
            [int(l), int(km), int(kp), float(pm), float(pp), float(sm), float(sp), float(bm), float(bp)]
            for l, km, kp, pm, pp, sm, sp, bm, bp in zip(
                self.levels,
                self.k_minus,
                self.k_plus,
                self.p_hat_minus,
                self.p_hat_plus,
                self.stderr_minus,
                self.stderr_plus,
                self.bound_minus,
                self.bound_plus,
            )
        ]

    def to_json_summary(self) -> dict[str, Any]:
        excess_minus = self.p_hat_minus - (self.bound_minus + 4.0 * self.stderr_minus)
        excess_plus = self.p_hat_plus - (self.bound_plus + 4.0 * self.stderr_plus)
        return {
            "delta": float(self.delta),
            "replications": int(self.replications),
            "bound_source": self.bound_source,
            "max_excess_over_bound": float(max(np.max(excess_minus), np.max(excess_plus))),
            "bound_partial_sum_minus": float(self.bound_partial_minus[-1]),
            "bound_partial_sum_plus": float(self.bound_partial_plus[-1]),
        }


def chebyshev_report(
    family: SequenceFamily,
    index: SubsequenceIndex,
    s: int,
    delta: float,
    replications: int,
    seed: int,
) -> ChebyshevLevelReport:
    """Estimate P(|S_k - E S_k| > k delta) at the cell extremes.

    Pairs each estimate with the Chebyshev bound Var(S_k)/(k delta)**2
    and accumulates the running sum of bounds; a bounded running sum is
    the summability evidence the Borel-Cantelli step consumes.
    Var(S_k) comes from the analytic profile when available, otherwise
    from the sample.
    """
    if not delta > 0:
        raise InvalidParamsError("delta must be positive")
    if replications < 100:
        raise InsufficientReplicationsError(f"need >= 100 replications, got {replications}")
    if not (0 <= s <= index.L):
        raise InvalidParamsError(f"band s must lie in [0, {index.L}], got {s}")
    replications = int(replications)

    km = index.k_minus[:, s].astype(np.int64)
    kp = index.k_plus[:, s].astype(np.int64)
    unique_ks = np.unique(np.concatenate([km, kp]))
    horizon = int(unique_ks.max())
    cols = unique_ks - 1

    moments = family.moments
    if moments is not None and moments.mean_sum_fn is not None:
        es = np.asarray(moments.mean_sum_fn(unique_ks), dtype=float)
        es = np.broadcast_to(es, unique_ks.shape)
    else:
        es = np.cumsum(_column_means_mc(family, horizon, replications, seed))[cols]

    counts = np.zeros(len(unique_ks), dtype=np.int64)
    sum_s = np.zeros(len(unique_ks))
    sq_s = np.zeros(len(unique_ks))
    rows = chunk_rows(horizon)
    done = 0
    chunk_index = 0
    while done < replications:
        take = min(rows, replications - done)
        values, _ = sample_matrix(family, take, horizon, chunk_generator(seed, chunk_index))
        sums = np.cumsum(values, axis=1)[:, cols]
        counts += (np.abs(sums - es[None, :]) > delta * unique_ks[None, :]).sum(axis=0)
        sum_s += sums.sum(axis=0)
        sq_s += (sums**2).sum(axis=0)
        done += take
        chunk_index += 1

    p_hat = counts / replications
    stderr = np.sqrt(p_hat * (1.0 - p_hat) / replications)

    if moments is not None and moments.var_sum_fn is not None:
        var_s = np.asarray(moments.var_sum_fn(unique_ks), dtype=float)
        var_s = np.broadcast_to(var_s, unique_ks.shape)
        bound_source = "analytic var_sum"
    else:
        var_s = (sq_s - sum_s**2 / replications) / (replications - 1)
        bound_source = "sample variance"
    bounds = var_s / (unique_ks.astype(float) * delta) ** 2

    lookup = {int(k): i for i, k in enumerate(unique_ks)}
    idx_m = np.array([lookup[int(k)] for k in km])
    idx_p = np.array([lookup[int(k)] for k in kp])
    return ChebyshevLevelReport(
        levels=np.arange(len(km)),
        k_minus=km,
        k_plus=kp,
        p_hat_minus=p_hat[idx_m],
        p_hat_plus=p_hat[idx_p],
        stderr_minus=stderr[idx_m],
        stderr_plus=stderr[idx_p],
        bound_minus=bounds[idx_m],
        bound_plus=bounds[idx_p],
        bound_partial_minus=np.cumsum(bounds[idx_m]),
        bound_partial_plus=np.cumsum(bounds[idx_p]),
        delta=float(delta),
        replications=replications,
        bound_source=bound_source,
    )


def _column_means_mc(family: SequenceFamily, horizon: int, replications: int, seed: int) -> np.ndarray:
    total = np.zeros(horizon)
    rows = chunk_rows(horizon)
    done = 0
    chunk_index = 0
    while done < replications:
        take = min(rows, replications - done)
        values, _ = sample_matrix(family, take, horizon, chunk_generator(seed, 10_000 + chunk_index))
        total += values.sum(axis=0)
        done += take
        chunk_index += 1
    return total / replications


# --------------------------------------------------------------------- #
# Pathwise squeeze
# --------------------------------------------------------------------- #


@dataclass(frozen=True)
class SandwichReport:
    """Pathwise evaluation of the five-expression squeeze chain."""

    n_values: np.ndarray
    lower_lhs: np.ndarray
    mid_lo: np.ndarray
    mid: np.ndarray
    mid_hi: np.ndarray
    upper_rhs: np.ndarray
    violations: list[tuple[int, str, float]]
    max_breach: float
    alpha: float
    epsilon: float
    bound_constant: float
    tolerance: float

    csv_header = ("n", "lower", "mid_lo", "mid", "mid_hi", "upper", "violated")

    @property
    def outer_slack_lower(self) -> float:
        return self.epsilon + (1.0 - 1.0 / self.alpha) * self.bound_constant

    @property
    def outer_slack_upper(self) -> float:
        return (self.alpha - 1.0) * self.bound_constant + self.epsilon

    def to_csv_rows(self) -> list[list]:
        violated_n = {n for n, _, _ in self.violations}
        return [
            [int(n), float(a), float(b), float(c), float(d), float(e), int(int(n) in violated_n)]
            for n, a, b, c, d, e in zip(
                self.n_values, self.lower_lhs, self.mid_lo, self.mid, self.mid_hi, self.upper_rhs
            )
        ]

    def to_json_summary(self) -> dict[str, Any]:
        return {
            "violations": len(self.violations),
            "max_residual": float(self.max_breach),
            "alpha": float(self.alpha),
            "epsilon": float(self.epsilon),
            "bound_constant": float(self.bound_constant),
            "outer_slack_lower": float(self.outer_slack_lower),
            "outer_slack_upper": float(self.outer_slack_upper),
        }


_PAIR_NAMES = ("lower<=mid_lo", "mid_lo<=mid", "mid<=mid_hi", "mid_hi<=upper")


def sandwich_check(trajectory: Trajectory, index: SubsequenceIndex) -> SandwichReport:
    """Evaluate the squeeze chain at every n <= index.horizon.

    The chain (with A the scaled-mean supremum, k-/k+ the cell extremes
    of n's cell) is

        -eps - (1 - 1/alpha) A + (S_{k-} - E S_{k-}) / (alpha k-)
          <= S_{k-}/n - E S_n / n
          <= (S_n - E S_n) / n
          <= S_{k+}/n - E S_{k+}/k+ + eps
          <= alpha (S_{k+} - E S_{k+}) / k+ + (alpha - 1) A + eps.

    Any breach beyond the floating-point guard tolerance is recorded as
    a violation.
    """
    if len(trajectory) < index.horizon:
        raise HorizonMismatchError(
            f"trajectory length {len(trajectory)} < index horizon {index.horizon}"
        )
    if float(np.min(trajectory.values[: index.horizon])) < 0.0:
        raise NegativityDetectedError(
            f"{trajectory.descriptor.label} produced negative values; the squeeze needs "
            "a non-negative family"
        )

    H = index.horizon
    n = np.arange(1, H + 1)
    lv = index.m[1:]
    band = index.s[1:]
    km = index.k_minus[lv, band]
    kp = index.k_plus[lv, band]

    S = trajectory.prefix_sums
    s_n, s_km, s_kp = S[n - 1], S[km - 1], S[kp - 1]
    es_n = index.mean_sums[1:]
    es_km = index.mean_sums[km]
    es_kp = index.mean_sums[kp]

    alpha, eps, a = index.alpha, index.epsilon, index.a_value
    nf = n.astype(float)
    kmf = km.astype(float)
    kpf = kp.astype(float)

    lower = -eps - (1.0 - 1.0 / alpha) * a + (s_km - es_km) / (alpha * kmf)
    mid_lo = s_km / nf - es_n / nf
    mid = (s_n - es_n) / nf
    mid_hi = s_kp / nf - es_kp / kpf + eps
    upper = alpha * (s_kp - es_kp) / kpf + (alpha - 1.0) * a + eps

    violations: list[tuple[int, str, float]] = []
    max_breach = -math.inf
    chain = (lower, mid_lo, mid, mid_hi, upper)
    for name, lhs, rhs in zip(_PAIR_NAMES, chain[:-1], chain[1:]):
        breach = lhs - rhs
        max_breach = max(max_breach, float(np.max(breach)))
        bad = np.nonzero(breach > SANDWICH_TOLERANCE)[0]
        violations.extend((int(n[i]), name, float(breach[i])) for i in bad)
    violations.sort()

    return SandwichReport(
        n_values=n,
        lower_lhs=lower,
        mid_lo=mid_lo,
        mid=mid,
        mid_hi=mid_hi,
        upper_rhs=upper,
        violations=violations,
        max_breach=max_breach,
        alpha=alpha,
        epsilon=eps,
        bound_constant=a,
        tolerance=SANDWICH_TOLERANCE,
    )
