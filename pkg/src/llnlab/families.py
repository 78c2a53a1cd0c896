"""Random-sequence families: descriptors, samplers, moments, transforms.

Built-in kinds
--------------
``cosine``          X_n = cos(2*pi*n*U) with a single shared U uniform on
                    [-1, 1]; pairwise uncorrelated but strongly dependent.
``gated_gaussian``  X_n = W * Z_n with one shared fair coin W in {0, 1}
                    and independent standard normals Z_n.
``step``            P(X_n = n) = P(X_n = 0) = 1/2, independent across n;
                    variances grow like n**2 / 4.
``iid``             independent draws from an exponential(rate),
                    uniform(a, b), or scaled-Bernoulli base.
``transformed``     a pointwise per-index map (truncation at the index,
                    positive/negative part, centring, essential-infimum
                    shift, affine) applied on top of another descriptor.

Sampling contract
-----------------
``sample_trajectory`` is a pure function of (descriptor, seed, horizon).
Latent-variable families draw their latent first from the trajectory's
latent stream, then fill indexed values from a separate value stream, so
trajectories of different horizons agree on shared prefixes.  Bit-exact
agreement across numpy versions is not promised, only within one build.

``sample_matrix`` is the vectorised block sampler used by the Monte
Carlo estimators: ``count`` independent trajectories drawn from one
caller-supplied generator.  Its rows follow the same distribution as
individual trajectories but come from a different stream layout.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Optional

import numpy as np
from scipy.special import erfc

from .errors import (
    HorizonOverflowError,
    InvalidParamsError,
    MomentsUnavailableError,
    UnknownKindError,
)
from .seeding import trajectory_streams

MAX_HORIZON = 10**8

BASE_KINDS = ("cosine", "gated_gaussian", "step", "iid")
IID_BASES = ("exponential", "uniform", "bernoulli_scaled")
TRANSFORMS = ("truncate", "positive_part", "negative_part", "center", "essinf_shift", "affine")
MAX_TRANSFORM_DEPTH = 8

_INV_8PI = 1.0 / (8.0 * math.pi)
_POSPART_MEAN = 1.0 / (2.0 * math.sqrt(2.0 * math.pi))


# --------------------------------------------------------------------- #
# Descriptors
# --------------------------------------------------------------------- #


@dataclass(frozen=True)
class FamilyDescriptor:
    """Validated, immutable description of a random-sequence model."""

    kind: str
    params: Mapping[str, Any] = field(default_factory=dict)
    label: str = ""

    def __post_init__(self):
        _validate_descriptor(self)
        if not self.label:
            object.__setattr__(self, "label", _auto_label(self))

    @property
    def transform_depth(self) -> int:
        depth = 0
        d = self
        while d.kind == "transformed":
            depth += 1
            d = d.params["base"]
        return depth

    @property
    def base(self) -> "FamilyDescriptor":
        """Innermost untransformed descriptor."""
        d = self
        while d.kind == "transformed":
            d = d.params["base"]
        return d


def _validate_descriptor(d: FamilyDescriptor) -> None:
    if d.kind == "cosine" or d.kind == "gated_gaussian" or d.kind == "step":
        if d.params:
            raise InvalidParamsError(f"{d.kind} takes no parameters, got {dict(d.params)}")
        return
    if d.kind == "iid":
        base = d.params.get("base")
        if base == "exponential":
            rate = d.params.get("rate")
            if not (isinstance(rate, (int, float)) and rate > 0):
                raise InvalidParamsError(f"exponential rate must be positive, got {rate!r}")
        elif base == "uniform":
            a, b = d.params.get("a"), d.params.get("b")
            if not (isinstance(a, (int, float)) and isinstance(b, (int, float)) and a < b):
                raise InvalidParamsError(f"uniform needs a < b, got a={a!r}, b={b!r}")
        elif base == "bernoulli_scaled":
            p, scale = d.params.get("p"), d.params.get("scale")
            if not (isinstance(p, (int, float)) and 0.0 <= p <= 1.0):
                raise InvalidParamsError(f"bernoulli p must lie in [0, 1], got {p!r}")
            if not isinstance(scale, (int, float)) or not math.isfinite(scale):
                raise InvalidParamsError(f"bernoulli scale must be finite, got {scale!r}")
        else:
            raise UnknownKindError(f"unknown iid base {base!r}")
        return
    if d.kind == "transformed":
        base = d.params.get("base")
        if not isinstance(base, FamilyDescriptor):
            raise InvalidParamsError("transformed descriptor needs a 'base' FamilyDescriptor")
        t = d.params.get("transform")
        if t not in TRANSFORMS:
            raise UnknownKindError(f"unknown transform {t!r}")
        if t == "affine":
            a, b = d.params.get("a"), d.params.get("b")
            ok = all(isinstance(v, (int, float)) and math.isfinite(v) for v in (a, b))
            if not ok:
                raise InvalidParamsError(f"affine needs finite a, b; got a={a!r}, b={b!r}")
        if d.transform_depth > MAX_TRANSFORM_DEPTH:
            raise InvalidParamsError(f"transform chain deeper than {MAX_TRANSFORM_DEPTH}")
        return
    raise UnknownKindError(f"unknown family kind {d.kind!r}")


def _auto_label(d: FamilyDescriptor) -> str:
    if d.kind == "iid":
        base = d.params["base"]
        if base == "exponential":
            return f"iid-exponential({d.params['rate']:g})"
        if base == "uniform":
            return f"iid-uniform({d.params['a']:g},{d.params['b']:g})"
        return f"iid-bernoulli({d.params['p']:g},{d.params['scale']:g})"
    if d.kind == "transformed":
        t = d.params["transform"]
        inner = d.params["base"].label
        if t == "affine":
            return f"affine({d.params['a']:g},{d.params['b']:g})({inner})"
        return f"{t}({inner})"
    return d.kind


def cosine() -> FamilyDescriptor:
    return FamilyDescriptor("cosine")


def gated_gaussian() -> FamilyDescriptor:
    return FamilyDescriptor("gated_gaussian")


def step() -> FamilyDescriptor:
    return FamilyDescriptor("step")


def iid_exponential(rate: float = 1.0) -> FamilyDescriptor:
    return FamilyDescriptor("iid", {"base": "exponential", "rate": float(rate)})


def iid_uniform(a: float, b: float) -> FamilyDescriptor:
    return FamilyDescriptor("iid", {"base": "uniform", "a": float(a), "b": float(b)})


def iid_bernoulli_scaled(p: float, scale: float) -> FamilyDescriptor:
    return FamilyDescriptor("iid", {"base": "bernoulli_scaled", "p": float(p), "scale": float(scale)})


def constant(value: float) -> FamilyDescriptor:
    """Degenerate family X_n = value for every n."""
    return FamilyDescriptor(
        "iid", {"base": "bernoulli_scaled", "p": 1.0, "scale": float(value)}, label=f"constant({value:g})"
    )


def transformed(
    base: FamilyDescriptor, transform: str, a: float | None = None, b: float | None = None
) -> FamilyDescriptor:
    params: dict[str, Any] = {"base": base, "transform": transform}
    if transform == "affine":
        params["a"] = float(a if a is not None else 1.0)
        params["b"] = float(b if b is not None else 0.0)
    elif a is not None or b is not None:
        raise InvalidParamsError(f"transform {transform!r} takes no a/b parameters")
    return FamilyDescriptor("transformed", params)


def shifted_cosine() -> FamilyDescriptor:
    """1 + cos(2*pi*n*U): the non-negative shift of the cosine family."""
    return transformed(cosine(), "essinf_shift")


_AFFINE_TAG = re.compile(r"^affine\((?P<a>[^,]+),(?P<b>[^)]+)\)$")


def descriptor_to_json(d: FamilyDescriptor) -> dict[str, Any]:
    """Flatten a descriptor to ``{kind, params, transforms}``.

    ``transforms`` lists the applied maps innermost-first; affine maps
    are encoded as ``"affine(a,b)"``.
    """
    transforms: list[str] = []
    cur = d
    while cur.kind == "transformed":
        t = cur.params["transform"]
        if t == "affine":
            transforms.append(f"affine({cur.params['a']!r},{cur.params['b']!r})")
        else:
            transforms.append(t)
        cur = cur.params["base"]
    transforms.reverse()
    return {"kind": cur.kind, "params": dict(cur.params), "transforms": transforms}


def descriptor_from_json(obj: Mapping[str, Any]) -> FamilyDescriptor:
    kind = obj.get("kind")
    if not isinstance(kind, str):
        raise InvalidParamsError(f"descriptor JSON needs a string 'kind', got {kind!r}")
    d = FamilyDescriptor(kind, dict(obj.get("params") or {}))
    for tag in obj.get("transforms") or []:
        m = _AFFINE_TAG.match(tag) if isinstance(tag, str) else None
        if m:
            d = transformed(d, "affine", float(m["a"]), float(m["b"]))
        else:
            d = transformed(d, tag)
    return d


# --------------------------------------------------------------------- #
# Moment profiles
# --------------------------------------------------------------------- #


@dataclass(frozen=True)
class MomentProfile:
    """Analytic per-index moments of a family.

    All callables accept a scalar index or an index array.  ``tail_fn``
    maps (n, t) to P(X_n > t); ``pair_cov_fn`` maps (i, j) to
    Cov(X_i, X_j) with the variance on the diagonal.  ``var_sum_fn``
    gives Var(S_n) in closed form and ``esssup_fn`` the essential
    supremum; both exist to keep downstream checkers analytic where
    possible.
    """

    mean_fn: Callable[[Any], Any]
    var_fn: Callable[[Any], Any]
    mean_sum_fn: Callable[[Any], Any]
    essinf_fn: Callable[[Any], Any]
    tail_fn: Optional[Callable[[Any, Any], Any]] = None
    pair_cov_fn: Optional[Callable[[int, int], float]] = None
    var_sum_fn: Optional[Callable[[Any], Any]] = None
    esssup_fn: Optional[Callable[[Any], Any]] = None


@dataclass(frozen=True)
class MomentValues:
    mean: float
    var: float
    mean_sum: float
    essinf: float


def _wrap(g):
    """Vectorised moment function returning a float for scalar input."""

    def f(n):
        arr = np.asarray(n, dtype=float)
        out = np.asarray(g(arr), dtype=float)
        out = np.broadcast_to(out, arr.shape)
        return out if arr.ndim else float(out)

    return f


def _const(c: float):
    return _wrap(lambda n: np.full_like(n, float(c)))


def _normal_tail(t):
    return 0.5 * erfc(np.asarray(t, dtype=float) / math.sqrt(2.0))


def _cosine_profile() -> MomentProfile:
    def tail(n, t):
        t = np.asarray(t, dtype=float)
        inner = np.arccos(np.clip(t, -1.0, 1.0)) / math.pi
        return np.where(t >= 1.0, 0.0, np.where(t < -1.0, 1.0, inner))

    return MomentProfile(
        mean_fn=_const(0.0),
        var_fn=_const(0.5),
        mean_sum_fn=_const(0.0),
        essinf_fn=_const(-1.0),
        tail_fn=tail,
        pair_cov_fn=lambda i, j: 0.5 if i == j else 0.0,
        var_sum_fn=_wrap(lambda n: 0.5 * n),
        esssup_fn=_const(1.0),
    )


def _gated_profile() -> MomentProfile:
    def tail(n, t):
        t = np.asarray(t, dtype=float)
        zt = _normal_tail(t)
        return np.where(t >= 0.0, 0.5 * zt, 0.5 + 0.5 * zt)

    return MomentProfile(
        mean_fn=_const(0.0),
        var_fn=_const(0.5),
        mean_sum_fn=_const(0.0),
        essinf_fn=_const(-math.inf),
        tail_fn=tail,
        pair_cov_fn=lambda i, j: 0.5 if i == j else 0.0,
        var_sum_fn=_wrap(lambda n: 0.5 * n),
        esssup_fn=_const(math.inf),
    )


def _step_profile() -> MomentProfile:
    def tail(n, t):
        n = np.asarray(n, dtype=float)
        t = np.asarray(t, dtype=float)
        return np.where(t < 0.0, 1.0, np.where(t < n, 0.5, 0.0))

    return MomentProfile(
        mean_fn=_wrap(lambda n: 0.5 * n),
        var_fn=_wrap(lambda n: 0.25 * n * n),
        mean_sum_fn=_wrap(lambda n: 0.25 * n * (n + 1.0)),
        essinf_fn=_const(0.0),
        tail_fn=tail,
        pair_cov_fn=lambda i, j: 0.25 * i * i if i == j else 0.0,
        var_sum_fn=_wrap(lambda n: n * (n + 1.0) * (2.0 * n + 1.0) / 24.0),
        esssup_fn=_wrap(lambda n: n),
    )


def _iid_profile(params: Mapping[str, Any]) -> MomentProfile:
    base = params["base"]
    if base == "exponential":
        rate = float(params["rate"])
        mean, var = 1.0 / rate, 1.0 / rate**2
        lo, hi = 0.0, math.inf

        def tail(n, t):
            t = np.asarray(t, dtype=float)
            return np.where(t < 0.0, 1.0, np.exp(-rate * np.maximum(t, 0.0)))

    elif base == "uniform":
        a, b = float(params["a"]), float(params["b"])
        mean, var = 0.5 * (a + b), (b - a) ** 2 / 12.0
        lo, hi = a, b

        def tail(n, t):
            t = np.asarray(t, dtype=float)
            return np.clip((b - t) / (b - a), 0.0, 1.0)

    else:
        p, scale = float(params["p"]), float(params["scale"])
        mean, var = p * scale, scale * scale * p * (1.0 - p)
        support = {0.0} if p == 0.0 else ({scale} if p == 1.0 else {0.0, scale})
        lo, hi = min(support), max(support)

        def tail(n, t):
            t = np.asarray(t, dtype=float)
            out = np.zeros_like(t)
            if p < 1.0:
                out = out + (1.0 - p) * (t < 0.0)
            if p > 0.0:
                out = out + p * (t < scale)
            return out

    return MomentProfile(
        mean_fn=_const(mean),
        var_fn=_const(var),
        mean_sum_fn=_wrap(lambda n: mean * n),
        essinf_fn=_const(lo),
        tail_fn=tail,
        pair_cov_fn=lambda i, j, v=var: v if i == j else 0.0,
        var_sum_fn=_wrap(lambda n: var * n),
        esssup_fn=_const(hi),
    )


def _gated_pospart_profile() -> MomentProfile:
    # Positive part of the gated normal: mean 1/(2 sqrt(2 pi)),
    # second moment 1/4, cross-covariance 1/(8 pi) through the shared gate.
    m = _POSPART_MEAN
    v = 0.25 - m * m
    cov = _INV_8PI

    def tail(n, t):
        t = np.asarray(t, dtype=float)
        return np.where(t < 0.0, 1.0, 0.5 * _normal_tail(np.maximum(t, 0.0)))

    return MomentProfile(
        mean_fn=_const(m),
        var_fn=_const(v),
        mean_sum_fn=_wrap(lambda n: m * n),
        essinf_fn=_const(0.0),
        tail_fn=tail,
        pair_cov_fn=lambda i, j: v if i == j else cov,
        var_sum_fn=_wrap(lambda n: n * v + n * (n - 1.0) * cov),
        esssup_fn=_const(math.inf),
    )


def _is_constant_fn(f, probes=(1, 2, 17, 1024)) -> bool:
    vals = [f(p) for p in probes]
    return all(v == vals[0] for v in vals[1:])


def _truncation_is_identity(base_desc: FamilyDescriptor, profile: MomentProfile) -> bool:
    # Truncation at the index changes nothing when X_n <= n surely: the
    # step family has esssup exactly n, everything else qualifies only
    # with a constant essential supremum at most 1.
    if base_desc.kind == "step":
        return True
    if profile.esssup_fn is None:
        return False
    return _is_constant_fn(profile.esssup_fn) and profile.esssup_fn(1) <= 1.0


def _transform_profile(
    base_desc: FamilyDescriptor, base: Optional[MomentProfile], transform: str, a: float, b: float
) -> Optional[MomentProfile]:
    if transform in ("center", "essinf_shift") and base is None:
        raise MomentsUnavailableError(f"{transform} requires an analytic moment profile")

    if transform == "truncate":
        if base is not None and _truncation_is_identity(base_desc, base):
            return base
        return None

    if transform in ("positive_part", "negative_part"):
        if base_desc.kind == "gated_gaussian":
            return _gated_pospart_profile()  # negative part matches by symmetry
        return None

    if transform == "center":
        mean, mean_sum = base.mean_fn, base.mean_sum_fn
        tail = base.tail_fn
        return MomentProfile(
            mean_fn=_const(0.0),
            var_fn=base.var_fn,
            mean_sum_fn=_const(0.0),
            essinf_fn=_wrap(lambda n: base.essinf_fn(n) - mean(n)),
            tail_fn=(lambda n, t: tail(n, np.asarray(t, float) + mean(n))) if tail else None,
            pair_cov_fn=base.pair_cov_fn,
            var_sum_fn=base.var_sum_fn,
            esssup_fn=_wrap(lambda n: base.esssup_fn(n) - mean(n)) if base.esssup_fn else None,
        )

    if transform == "essinf_shift":
        essinf = base.essinf_fn
        if not math.isfinite(essinf(1)):
            raise InvalidParamsError("essinf_shift needs a finite essential infimum")
        tail = base.tail_fn
        if _is_constant_fn(essinf):
            c = float(essinf(1))
            mean_sum_fn = _wrap(lambda n: base.mean_sum_fn(n) - c * n)
        else:
            mean_sum_fn = _wrap(
                lambda n: base.mean_sum_fn(n)
                - np.vectorize(lambda m: float(np.sum(essinf(np.arange(1, int(m) + 1)))))(n)
            )
        return MomentProfile(
            mean_fn=_wrap(lambda n: base.mean_fn(n) - essinf(n)),
            var_fn=base.var_fn,
            mean_sum_fn=mean_sum_fn,
            essinf_fn=_const(0.0),
            tail_fn=(lambda n, t: tail(n, np.asarray(t, float) + essinf(n))) if tail else None,
            pair_cov_fn=base.pair_cov_fn,
            var_sum_fn=base.var_sum_fn,
            esssup_fn=_wrap(lambda n: base.esssup_fn(n) - essinf(n)) if base.esssup_fn else None,
        )

    if transform == "affine":
        if base is None:
            return None
        if a == 0.0:
            return _iid_profile({"base": "bernoulli_scaled", "p": 1.0, "scale": b})
        tail = base.tail_fn
        if a > 0:
            new_tail = (lambda n, t: tail(n, (np.asarray(t, float) - b) / a)) if tail else None
            essinf_src, esssup_src = base.essinf_fn, base.esssup_fn
        else:
            new_tail = None  # atoms make P(aX+b > t) unrecoverable from P(X > u)
            essinf_src, esssup_src = base.esssup_fn, base.essinf_fn
        pair_cov = base.pair_cov_fn
        return MomentProfile(
            mean_fn=_wrap(lambda n: a * base.mean_fn(n) + b),
            var_fn=_wrap(lambda n: a * a * base.var_fn(n)),
            mean_sum_fn=_wrap(lambda n: a * base.mean_sum_fn(n) + b * n),
            essinf_fn=_wrap(lambda n: a * essinf_src(n) + b) if essinf_src else _const(-math.inf),
            tail_fn=new_tail,
            pair_cov_fn=(lambda i, j: a * a * pair_cov(i, j)) if pair_cov else None,
            var_sum_fn=_wrap(lambda n: a * a * base.var_sum_fn(n)) if base.var_sum_fn else None,
            esssup_fn=_wrap(lambda n: a * esssup_src(n) + b) if esssup_src else None,
        )

    raise UnknownKindError(f"unknown transform {transform!r}")


# --------------------------------------------------------------------- #
# Sampling
# --------------------------------------------------------------------- #


@dataclass(frozen=True)
class Trajectory:
    """One sampled path X_1..X_N with running sums S_1..S_N."""

    descriptor: FamilyDescriptor
    seed: int
    values: np.ndarray
    prefix_sums: np.ndarray
    latents: Optional[Mapping[str, Any]] = None

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class SequenceFamily:
    """A descriptor bundled with its sampler and optional moments."""

    descriptor: FamilyDescriptor
    sampler: Callable[..., Trajectory]
    moments: Optional[MomentProfile] = None

    @property
    def label(self) -> str:
        return self.descriptor.label


def _base_values(
    d: FamilyDescriptor, horizon: int, rng_lat, rng_val, forced: Mapping[str, Any] | None
) -> tuple[np.ndarray, Optional[dict[str, Any]]]:
    idx = np.arange(1, horizon + 1, dtype=float)
    forced = forced or {}
    if d.kind == "cosine":
        x = float(forced["X"]) if "X" in forced else float(rng_lat.uniform(-1.0, 1.0))
        return np.cos(2.0 * math.pi * x * idx), {"X": x}
    if d.kind == "gated_gaussian":
        w = int(forced["W"]) if "W" in forced else int(rng_lat.integers(0, 2))
        z = rng_val.standard_normal(horizon)
        return float(w) * z, {"W": w}
    if d.kind == "step":
        u = rng_val.random(horizon)
        return np.where(u < 0.5, idx, 0.0), None
    if d.kind == "iid":
        base = d.params["base"]
        if base == "exponential":
            return rng_val.standard_exponential(horizon) / float(d.params["rate"]), None
        if base == "uniform":
            a, b = float(d.params["a"]), float(d.params["b"])
            return a + (b - a) * rng_val.random(horizon), None
        p, scale = float(d.params["p"]), float(d.params["scale"])
        return np.where(rng_val.random(horizon) < p, scale, 0.0), None
    raise UnknownKindError(d.kind)


def _base_matrix(
    d: FamilyDescriptor, count: int, horizon: int, rng
) -> tuple[np.ndarray, Optional[dict[str, np.ndarray]]]:
    idx = np.arange(1, horizon + 1, dtype=float)
    if d.kind == "cosine":
        x = rng.uniform(-1.0, 1.0, size=count)
        # Same association as the trajectory sampler so latent
        # recomputation reproduces values bit for bit.
        return np.cos((2.0 * math.pi * x)[:, None] * idx[None, :]), {"X": x}
    if d.kind == "gated_gaussian":
        w = rng.integers(0, 2, size=count)
        z = rng.standard_normal((count, horizon))
        return w[:, None].astype(float) * z, {"W": w}
    if d.kind == "step":
        u = rng.random((count, horizon))
        return np.where(u < 0.5, idx[None, :], 0.0), None
    if d.kind == "iid":
        base = d.params["base"]
        if base == "exponential":
            return rng.standard_exponential((count, horizon)) / float(d.params["rate"]), None
        if base == "uniform":
            a, b = float(d.params["a"]), float(d.params["b"])
            return a + (b - a) * rng.random((count, horizon)), None
        p, scale = float(d.params["p"]), float(d.params["scale"])
        return np.where(rng.random((count, horizon)) < p, scale, 0.0), None
    raise UnknownKindError(d.kind)


def _apply_transform(
    values: np.ndarray, transform: str, a: float, b: float, base_profile: Optional[MomentProfile]
) -> np.ndarray:
    idx = np.arange(1, values.shape[-1] + 1, dtype=float)
    if transform == "truncate":
        return values * (values <= idx)
    if transform == "positive_part":
        return np.maximum(values, 0.0)
    if transform == "negative_part":
        return np.maximum(-values, 0.0)
    if transform == "center":
        return values - base_profile.mean_fn(idx)
    if transform == "essinf_shift":
        return values - base_profile.essinf_fn(idx)
    if transform == "affine":
        return a * values + b
    raise UnknownKindError(transform)


def _transform_stack(d: FamilyDescriptor) -> tuple[FamilyDescriptor, list[tuple[str, float, float, Optional[MomentProfile]]]]:
    """Innermost base plus the transform layers applied outwards."""
    layers: list[tuple[str, float, float, Optional[MomentProfile]]] = []
    cur = d
    while cur.kind == "transformed":
        base = cur.params["base"]
        layers.append(
            (
                cur.params["transform"],
                float(cur.params.get("a", 1.0)),
                float(cur.params.get("b", 0.0)),
                _profile_for(base),
            )
        )
        cur = base
    layers.reverse()
    return cur, layers


def _profile_for(d: FamilyDescriptor) -> Optional[MomentProfile]:
    if d.kind == "cosine":
        return _cosine_profile()
    if d.kind == "gated_gaussian":
        return _gated_profile()
    if d.kind == "step":
        return _step_profile()
    if d.kind == "iid":
        return _iid_profile(d.params)
    base_profile = _profile_for(d.params["base"])
    return _transform_profile(
        d.params["base"],
        base_profile,
        d.params["transform"],
        float(d.params.get("a", 1.0)),
        float(d.params.get("b", 0.0)),
    )


def make_family(descriptor: FamilyDescriptor) -> SequenceFamily:
    """Bundle a descriptor with its sampler and analytic moments."""
    base_desc, layers = _transform_stack(descriptor)
    moments = _profile_for(descriptor)

    def sampler(seed: int, horizon: int, forced_latents: Mapping[str, Any] | None = None) -> Trajectory:
        if horizon < 1:
            raise InvalidParamsError(f"horizon must be >= 1, got {horizon}")
        if horizon > MAX_HORIZON:
            raise HorizonOverflowError(f"horizon {horizon} exceeds maximum {MAX_HORIZON}")
        rng_lat, rng_val = trajectory_streams(seed)
        values, latents = _base_values(base_desc, int(horizon), rng_lat, rng_val, forced_latents)
        for name, a, b, base_profile in layers:
            values = _apply_transform(values, name, a, b, base_profile)
        return Trajectory(
            descriptor=descriptor,
            seed=int(seed),
            values=values,
            prefix_sums=np.cumsum(values),
            latents=latents,
        )

    return SequenceFamily(descriptor=descriptor, sampler=sampler, moments=moments)


def sample_trajectory(
    family: SequenceFamily,
    horizon: int,
    seed: int,
    forced_latents: Mapping[str, Any] | None = None,
) -> Trajectory:
    """Draw one path; pure in (descriptor, seed, horizon).

    ``forced_latents`` is a test hook pinning the shared latent draw
    ({"X": x} for the cosine family, {"W": w} for the gated one).
    """
    if forced_latents and family.descriptor.base.kind not in ("cosine", "gated_gaussian"):
        raise InvalidParamsError(f"{family.label} has no latent draws to force")
    return family.sampler(seed, horizon, forced_latents)


def sample_matrix(
    family: SequenceFamily, count: int, horizon: int, rng: np.random.Generator
) -> tuple[np.ndarray, Optional[dict[str, np.ndarray]]]:
    """Vectorised block of ``count`` independent paths from one generator.

    Returns the (count, horizon) value matrix and, for latent-variable
    families, the per-row latent draws.
    """
    if horizon < 1 or count < 1:
        raise InvalidParamsError("count and horizon must be >= 1")
    if horizon > MAX_HORIZON:
        raise HorizonOverflowError(f"horizon {horizon} exceeds maximum {MAX_HORIZON}")
    base_desc, layers = _transform_stack(family.descriptor)
    values, latents = _base_matrix(base_desc, int(count), int(horizon), rng)
    for name, a, b, base_profile in layers:
        values = _apply_transform(values, name, a, b, base_profile)
    return values, latents


def analytic_moment(family: SequenceFamily, n: int) -> MomentValues:
    """Evaluate the analytic moment profile at index ``n``."""
    if family.moments is None:
        raise MomentsUnavailableError(f"{family.label} has no analytic moment profile")
    if n < 1:
        raise InvalidParamsError(f"index must be >= 1, got {n}")
    p = family.moments
    return MomentValues(
        mean=float(p.mean_fn(n)),
        var=float(p.var_fn(n)),
        mean_sum=float(p.mean_sum_fn(n)),
        essinf=float(p.essinf_fn(n)),
    )


def transform_family(
    family: SequenceFamily, transform: str, a: float | None = None, b: float | None = None
) -> SequenceFamily:
    """Derived family applying ``transform`` pointwise at each index."""
    return make_family(transformed(family.descriptor, transform, a, b))
