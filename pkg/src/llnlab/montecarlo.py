"""Seeded, replicated simulation engine for convergence diagnostics.

Determinism contracts
---------------------
``run_lln_experiment`` draws replication r from the child seed
``derived_seed(master_seed, r)``, so its statistics are identical for
any worker count; the thread pool only decides who fills which
preallocated row.  The event estimators instead consume fixed-size
vectorised chunks, each from its own derived chunk generator, and merge
per-chunk partials in chunk order; results depend only on the master
seed and the call parameters.

The step-family deviation oracle is exact: sums of the centred steps
live on a half-integer lattice, so the distribution is enumerated with
integer counts over sign vectors and every probability is a dyadic
rational count / 2**n.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Optional

import numpy as np
from scipy.stats import norm

from .conditions import NormalizerSpec
from .errors import (
    EmptyConditionError,
    InsufficientReplicationsError,
    InvalidParamsError,
    MomentsUnavailableError,
)
from .families import (
    FamilyDescriptor,
    SequenceFamily,
    descriptor_to_json,
    sample_matrix,
    sample_trajectory,
)
from .seeding import chunk_generator, chunk_rows, derived_seed

_Z95 = float(norm.ppf(0.975))


def wilson_interval(successes: int, trials: int, z: float = _Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion.

    Behaves sensibly at small counts and near 0 or 1, which is where the
    quarter-bound checks live.
    """
    if trials <= 0:
        return (0.0, 1.0)
    p = successes / trials
    denom = 1.0 + z * z / trials
    centre = (p + z * z / (2.0 * trials)) / denom
    margin = (z / denom) * math.sqrt(p * (1.0 - p) / trials + z * z / (4.0 * trials * trials))
    # centre -/+ margin hits the endpoint exactly at degenerate counts;
    # spare the caller the rounding dust.
    lo = 0.0 if successes == 0 else max(0.0, centre - margin)
    hi = 1.0 if successes == trials else min(1.0, centre + margin)
    return (lo, hi)


# --------------------------------------------------------------------- #
# Replicated trajectory experiments
# --------------------------------------------------------------------- #


@dataclass(frozen=True)
class CheckpointStats:
    checkpoint: int
    mean_dev: float
    stddev: float
    q05: float
    q50: float
    q95: float
    frac_within_tol: float


@dataclass(frozen=True)
class ExperimentResult:
    """Deviation statistics (S_n - E S_n)/b_n across replications."""

    descriptor: "FamilyDescriptor"
    normalizer_kind: str
    master_seed: int
    replications: int
    tolerance: float
    checkpoints: np.ndarray
    per_checkpoint: list[CheckpointStats]
    runtime_ms: float

    csv_header = ("checkpoint", "mean_dev", "stddev", "q05", "q50", "q95", "frac_within_tol")

    def to_csv_rows(self) -> list[list]:
        return [
            [int(c.checkpoint), c.mean_dev, c.stddev, c.q05, c.q50, c.q95, c.frac_within_tol]
            for c in self.per_checkpoint
        ]

    def to_json_summary(self, include_runtime: bool = True) -> dict[str, Any]:
        out: dict[str, Any] = {
            "family": self.descriptor.label,
            "descriptor": descriptor_to_json(self.descriptor),
            "normalizer": self.normalizer_kind,
            "master_seed": int(self.master_seed),
            "replications": int(self.replications),
            "tolerance": float(self.tolerance),
            "checkpoints": [int(c) for c in self.checkpoints],
            "stats": [
                {
                    "checkpoint": int(c.checkpoint),
                    "mean_dev": float(c.mean_dev),
                    "stddev": float(c.stddev),
                    "q05": float(c.q05),
                    "q50": float(c.q50),
                    "q95": float(c.q95),
                    "frac_within_tol": float(c.frac_within_tol),
                }
                for c in self.per_checkpoint
            ],
        }
        if include_runtime:
            out["runtime_ms"] = float(self.runtime_ms)
        return out


def run_lln_experiment(
    family: SequenceFamily,
    normalizer: NormalizerSpec,
    checkpoints,
    replications: int,
    tolerance: float,
    master_seed: int,
    threads: int = 1,
) -> ExperimentResult:
    """Replicate trajectories and summarise (S_n - E S_n)/b_n at checkpoints."""
    checkpoints = np.asarray(checkpoints, dtype=np.int64)
    if checkpoints.ndim != 1 or len(checkpoints) == 0 or checkpoints[0] < 1:
        raise InvalidParamsError("checkpoints must be a non-empty list of positive integers")
    if np.any(np.diff(checkpoints) <= 0):
        raise InvalidParamsError("checkpoints must be sorted strictly ascending")
    if replications < 30:
        raise InsufficientReplicationsError(f"need >= 30 replications, got {replications}")
    if family.moments is None or family.moments.mean_sum_fn is None:
        raise MomentsUnavailableError(f"{family.label} has no analytic E S_n profile")
    if not tolerance > 0:
        raise InvalidParamsError("tolerance must be positive")

    start = time.perf_counter()
    replications = int(replications)
    horizon = int(checkpoints[-1])
    cols = checkpoints - 1
    es = np.broadcast_to(
        np.asarray(family.moments.mean_sum_fn(checkpoints), dtype=float), checkpoints.shape
    )
    b = np.asarray(normalizer.value_at(checkpoints), dtype=float)

    devs = np.empty((replications, len(checkpoints)))

    def fill(r: int) -> None:
        traj = sample_trajectory(family, horizon, derived_seed(master_seed, r))
        devs[r] = (traj.prefix_sums[cols] - es) / b

    if threads > 1:
        with ThreadPoolExecutor(max_workers=int(threads)) as pool:
            list(pool.map(fill, range(replications)))
    else:
        for r in range(replications):
            fill(r)

    quantiles = np.quantile(devs, [0.05, 0.5, 0.95], axis=0)
    stats = [
        CheckpointStats(
            checkpoint=int(checkpoints[i]),
            mean_dev=float(np.mean(devs[:, i])),
            stddev=float(np.std(devs[:, i], ddof=1)),
            q05=float(quantiles[0, i]),
            q50=float(quantiles[1, i]),
            q95=float(quantiles[2, i]),
            frac_within_tol=float(np.mean(np.abs(devs[:, i]) <= tolerance)),
        )
        for i in range(len(checkpoints))
    ]
    return ExperimentResult(
        descriptor=family.descriptor,
        normalizer_kind=normalizer.kind,
        master_seed=int(master_seed),
        replications=replications,
        tolerance=float(tolerance),
        checkpoints=checkpoints,
        per_checkpoint=stats,
        runtime_ms=(time.perf_counter() - start) * 1e3,
    )


# --------------------------------------------------------------------- #
# Event probability estimation
# --------------------------------------------------------------------- #


@dataclass(frozen=True)
class EventSpec:
    """Deviation or coordinate events for probability estimation.

    ``centered_sum_geq``    {S_n - E S_n >= threshold * n}
    ``scaled_mean_outside`` {|S_n / n - center| > delta}
    ``conditional``         {X_target > target_threshold} given
                            {X_condition > condition_threshold}
    """

    kind: str
    threshold: Optional[float] = None
    center: Optional[float] = None
    delta: Optional[float] = None
    condition_index: Optional[int] = None
    target_index: Optional[int] = None
    condition_threshold: float = 0.0
    target_threshold: float = 0.0

    def __post_init__(self):
        if self.kind == "centered_sum_geq":
            if self.threshold is None or not math.isfinite(self.threshold):
                raise InvalidParamsError("centered_sum_geq needs a finite threshold")
        elif self.kind == "scaled_mean_outside":
            if self.center is None or not math.isfinite(self.center):
                raise InvalidParamsError("scaled_mean_outside needs a finite center")
            if self.delta is None or not self.delta > 0:
                raise InvalidParamsError("scaled_mean_outside needs delta > 0")
        elif self.kind == "conditional":
            if not self.condition_index or not self.target_index:
                raise InvalidParamsError("conditional events need condition and target indices")
            if self.condition_index == self.target_index:
                raise InvalidParamsError("condition and target indices must differ")
        else:
            raise InvalidParamsError(f"unknown event kind {self.kind!r}")


@dataclass(frozen=True)
class EventEstimate:
    p_hat: float
    stderr: float
    ci95: tuple[float, float]
    samples: int
    p_condition: Optional[float] = None
    p_target: Optional[float] = None

    def to_json_summary(self) -> dict[str, Any]:
        out = {
            "p_hat": float(self.p_hat),
            "stderr": float(self.stderr),
            "ci95": [float(self.ci95[0]), float(self.ci95[1])],
            "samples": int(self.samples),
        }
        if self.p_condition is not None:
            out["p_condition"] = float(self.p_condition)
        if self.p_target is not None:
            out["p_target"] = float(self.p_target)
        return out


def estimate_event_probability(
    family: SequenceFamily, event: EventSpec, n: int, samples: int, seed: int
) -> EventEstimate:
    """Bernoulli estimate of an event probability with a Wilson interval.

    Conditional events use the ratio estimator with the binomial
    standard error on the conditioned subsample.
    """
    if samples < 1000:
        raise InsufficientReplicationsError(f"need >= 1000 samples, got {samples}")
    if n < 1:
        raise InvalidParamsError("n must be >= 1")
    samples = int(samples)

    if event.kind == "conditional":
        horizon = max(event.condition_index, event.target_index)
    else:
        horizon = int(n)

    needs_mean = event.kind == "centered_sum_geq"
    if needs_mean:
        if family.moments is None or family.moments.mean_sum_fn is None:
            raise MomentsUnavailableError(f"{family.label} has no analytic E S_n profile")
        es_n = float(family.moments.mean_sum_fn(n))

    hits = 0
    cond_hits = 0
    target_hits = 0
    done = 0
    chunk_index = 0
    rows = chunk_rows(horizon)
    while done < samples:
        take = min(rows, samples - done)
        values, _ = sample_matrix(family, take, horizon, chunk_generator(seed, chunk_index))
        if event.kind == "centered_sum_geq":
            sums = values.sum(axis=1)
            hits += int(np.count_nonzero(sums - es_n >= event.threshold * n))
        elif event.kind == "scaled_mean_outside":
            sums = values.sum(axis=1)
            hits += int(np.count_nonzero(np.abs(sums / n - event.center) > event.delta))
        else:
            cond = values[:, event.condition_index - 1] > event.condition_threshold
            target = values[:, event.target_index - 1] > event.target_threshold
            cond_hits += int(np.count_nonzero(cond))
            target_hits += int(np.count_nonzero(target))
            hits += int(np.count_nonzero(cond & target))
        done += take
        chunk_index += 1

    if event.kind == "conditional":
        if cond_hits == 0:
            raise EmptyConditionError("no sample satisfied the conditioning event")
        p = hits / cond_hits
        return EventEstimate(
            p_hat=p,
            stderr=math.sqrt(p * (1.0 - p) / cond_hits),
            ci95=wilson_interval(hits, cond_hits),
            samples=samples,
            p_condition=cond_hits / samples,
            p_target=target_hits / samples,
        )
    p = hits / samples
    return EventEstimate(
        p_hat=p,
        stderr=math.sqrt(p * (1.0 - p) / samples),
        ci95=wilson_interval(hits, samples),
        samples=samples,
    )


# --------------------------------------------------------------------- #
# Exact deviation oracle for the step family
# --------------------------------------------------------------------- #

MAX_EXACT_STEP_N = 64


def _subset_sum_counts(n: int) -> list[int]:
    """counts[s] = number of subsets of {1..n} with sum s, exactly."""
    total = n * (n + 1) // 2
    counts = [0] * (total + 1)
    counts[0] = 1
    for k in range(1, n + 1):
        for v in range(total, k - 1, -1):
            counts[v] += counts[v - k]
    return counts


def _exact_step_tail(n: int, doubled_threshold: int) -> float:
    """Exact P(sum of centred steps >= doubled_threshold / 2).

    The centred step variables take the values +/- k/2 with equal
    probability.  Doubling clears the half-integer lattice: the doubled
    sum is 2 s - T over subset sums s of {1..n} with T = n(n+1)/2,
    counted with exact integers, so the probability is count / 2**n.
    """
    if not (1 <= n <= MAX_EXACT_STEP_N):
        raise InvalidParamsError(f"n must lie in [1, {MAX_EXACT_STEP_N}], got {n}")
    n = int(n)
    total = n * (n + 1) // 2
    counts = _subset_sum_counts(n)
    # 2 s - T >= d  <=>  s >= ceil((T + d) / 2).
    threshold = max(0, -((total + doubled_threshold) // -2))
    favourable = sum(counts[threshold:])
    return float(Fraction(favourable, 2**n))


def exact_step_deviation(n: int) -> float:
    """Exact P(centred step sum >= n/2) for the step family."""
    return _exact_step_tail(n, int(n))


def exact_step_sign_probability(n: int) -> float:
    """Exact P(centred step sum >= 0), the symmetry half-bound."""
    return _exact_step_tail(n, 0)


# --------------------------------------------------------------------- #
# Dependence probes and pointwise Chebyshev comparison
# --------------------------------------------------------------------- #


@dataclass(frozen=True)
class DependenceProbeResult:
    p_joint: float
    p_i: float
    p_j: float
    p_cond: float
    independence_gap: float
    gap_stderr: float
    samples: int

    def to_json_summary(self) -> dict[str, Any]:
        return {
            "p_joint": float(self.p_joint),
            "p_i": float(self.p_i),
            "p_j": float(self.p_j),
            "p_cond": float(self.p_cond),
            "independence_gap": float(self.independence_gap),
            "gap_stderr": float(self.gap_stderr),
            "samples": int(self.samples),
        }


def dependence_probe(
    family: SequenceFamily,
    i: int,
    j: int,
    probe: str,
    samples: int,
    seed: int,
    epsilon: float = 0.05,
    threshold: float = 0.0,
) -> DependenceProbeResult:
    """Joint / marginal / conditional probabilities for coordinate events.

    ``sign`` probes the events {X > threshold} (0 by default);
    ``near_max`` probes {X > esssup - epsilon} (needs a finite analytic
    essential supremum).  The independence gap P(both) - P(i) P(j)
    carries an influence-function standard error, which accounts for the
    correlation between the three estimates sharing one sample.
    """
    if i == j:
        raise InvalidParamsError("indices i and j must differ")
    if i < 1 or j < 1:
        raise InvalidParamsError("indices must be >= 1")
    if samples < 10_000:
        raise InsufficientReplicationsError(f"need >= 10^4 samples, got {samples}")
    samples = int(samples)
    horizon = max(i, j)

    if probe == "sign":
        thr_i = thr_j = float(threshold)
    elif probe == "near_max":
        moments = family.moments
        if moments is None or moments.esssup_fn is None:
            raise MomentsUnavailableError(f"{family.label} has no analytic essential supremum")
        hi_i, hi_j = float(moments.esssup_fn(i)), float(moments.esssup_fn(j))
        if not (math.isfinite(hi_i) and math.isfinite(hi_j)):
            raise InvalidParamsError("near_max probe needs a finite essential supremum")
        thr_i, thr_j = hi_i - epsilon, hi_j - epsilon
    else:
        raise InvalidParamsError(f"unknown probe {probe!r}")

    n_joint = n_i = n_j = 0
    done = 0
    chunk_index = 0
    rows = chunk_rows(horizon)
    while done < samples:
        take = min(rows, samples - done)
        values, _ = sample_matrix(family, take, horizon, chunk_generator(seed, chunk_index))
        a = values[:, i - 1] > thr_i
        b = values[:, j - 1] > thr_j
        n_joint += int(np.count_nonzero(a & b))
        n_i += int(np.count_nonzero(a))
        n_j += int(np.count_nonzero(b))
        done += take
        chunk_index += 1

    p_joint = n_joint / samples
    p_i = n_i / samples
    p_j = n_j / samples
    gap = p_joint - p_i * p_j

    # Influence function of the covariance of two indicators,
    # h = (a - p_i)(b - p_j), takes one value per (a, b) combination, so
    # its sample variance follows from the four cell counts alone.
    n11 = n_joint
    n10 = n_i - n_joint
    n01 = n_j - n_joint
    n00 = samples - n_i - n_j + n_joint
    cells = (
        (n11, (1.0 - p_i) * (1.0 - p_j)),
        (n10, (1.0 - p_i) * (-p_j)),
        (n01, (-p_i) * (1.0 - p_j)),
        (n00, p_i * p_j),
    )
    h_mean = sum(cnt * h for cnt, h in cells) / samples
    var_h = max(0.0, sum(cnt * h * h for cnt, h in cells) / samples - h_mean * h_mean)
    gap_stderr = math.sqrt(var_h / samples)

    if n_i == 0:
        raise EmptyConditionError("no sample satisfied the conditioning event X_i")
    return DependenceProbeResult(
        p_joint=p_joint,
        p_i=p_i,
        p_j=p_j,
        p_cond=n_joint / n_i,
        independence_gap=gap,
        gap_stderr=gap_stderr,
        samples=samples,
    )


@dataclass(frozen=True)
class ChebyshevComparison:
    p_hat: float
    bound: float
    stderr: float
    holds_within_noise: bool
    samples: int
    bound_source: str

    def to_json_summary(self) -> dict[str, Any]:
        return {
            "p_hat": float(self.p_hat),
            "bound": float(self.bound),
            "stderr": float(self.stderr),
            "holds_within_noise": bool(self.holds_within_noise),
            "samples": int(self.samples),
            "bound_source": self.bound_source,
        }


def chebyshev_empirical(
    family: SequenceFamily, n: int, delta: float, samples: int, seed: int
) -> ChebyshevComparison:
    """Compare P(|S_n - E S_n| > n delta) with Var(S_n)/(n delta)**2.

    Var(S_n) comes from the analytic profile (the variance-of-sums
    identity for pairwise-uncorrelated families) when available,
    otherwise from the sample.
    """
    if n < 1:
        raise InvalidParamsError("n must be >= 1")
    if not delta > 0:
        raise InvalidParamsError("delta must be positive")
    if samples < 1000:
        raise InsufficientReplicationsError(f"need >= 1000 samples, got {samples}")
    moments = family.moments
    if moments is None or moments.mean_sum_fn is None or moments.var_fn is None:
        raise MomentsUnavailableError(f"{family.label} has no analytic moment path")
    samples = int(samples)
    es_n = float(moments.mean_sum_fn(n))

    hits = 0
    s_sum = 0.0
    s_sq = 0.0
    done = 0
    chunk_index = 0
    rows = chunk_rows(n)
    while done < samples:
        take = min(rows, samples - done)
        values, _ = sample_matrix(family, take, int(n), chunk_generator(seed, chunk_index))
        sums = values.sum(axis=1)
        hits += int(np.count_nonzero(np.abs(sums - es_n) > n * delta))
        s_sum += float(sums.sum())
        s_sq += float((sums * sums).sum())
        done += take
        chunk_index += 1

    if moments.var_sum_fn is not None:
        var_s = float(moments.var_sum_fn(n))
        bound_source = "analytic var_sum"
    else:
        var_s = (s_sq - s_sum * s_sum / samples) / (samples - 1)
        bound_source = "sample variance"
    bound = var_s / (float(n) * delta) ** 2
    p_hat = hits / samples
    stderr = math.sqrt(p_hat * (1.0 - p_hat) / samples)
    return ChebyshevComparison(
        p_hat=p_hat,
        bound=bound,
        stderr=stderr,
        holds_within_noise=p_hat <= bound + 4.0 * stderr,
        samples=samples,
        bound_source=bound_source,
    )
