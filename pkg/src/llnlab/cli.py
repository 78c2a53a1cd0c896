"""Batch front end: config files in, reproducible CSV/JSON reports out.

A config is a JSON file carrying a seed plus one task or a list of
tasks; each task names a module operation, its parameters, and optional
assertions evaluated against the task's JSON summary.  Every run writes,
per task, the data tables as CSV and the summary as JSON, plus one
``manifest.json``.  Wall-clock timestamps and runtimes live only in the
manifest, so rerunning a config reproduces the CSV/JSON bodies byte for
byte regardless of ``--threads``.

Config shape::

    {
      "seed": 12345,
      "family": {"kind": "cosine", "params": {}, "transforms": []},
      "normalizer": {"kind": "linear"},
      "tasks": [
        {"task": "check", "params": {"condition": "kolmogorov", "horizon": 10000},
         "assertions": [{"field": "verdict", "op": "eq", "value": "converges_evidence"}]}
      ]
    }

``family``, ``normalizer`` and ``seed`` can sit at the top level (shared
by all tasks) or per task.  A single-task config may inline ``task`` /
``params`` / ``assertions`` at the top level.  Seed precedence:
``--seed`` flag, then per-task seed, then config seed, then the
``LLNLAB_SEED`` environment variable.  Threads: ``--threads`` then
``LLNLAB_THREADS`` then 1.

Exit codes: 0 pass, 1 assertion failure, 2 usage/config error,
3 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from . import conditions, families, montecarlo, proofkit, quadrature
from .conditions import NormalizerSpec
from .errors import ConfigError, LLNLabError
from .seeding import chunk_generator, derived_seed

TOOL_VERSION = "0.1.0"

TASK_KINDS = ("simulate", "check", "proof", "integrate", "oracle", "report")


# --------------------------------------------------------------------- #
# Config parsing
# --------------------------------------------------------------------- #


@dataclass(frozen=True)
class ExperimentConfig:
    """One fully resolved task: what to run, with what inputs."""

    task: str
    name: str
    task_params: dict[str, Any]
    seed: int
    family: Optional[families.FamilyDescriptor]
    normalizer: NormalizerSpec
    output_path: str
    assertions: list[dict[str, Any]] = field(default_factory=list)


@dataclass
class TaskRunResult:
    config: ExperimentConfig
    summary: dict[str, Any]
    tables: dict[str, tuple[tuple[str, ...], list[list]]]
    assertion_results: list[dict[str, Any]]
    outputs: list[str] = field(default_factory=list)
    runtime_ms: float = 0.0

    @property
    def passed(self) -> bool:
        return all(a["passed"] for a in self.assertion_results)


def _require(obj: dict, key: str, where: str):
    if key not in obj:
        raise ConfigError(f"{where}.{key}: required")
    return obj[key]


def _parse_normalizer(obj: Any, where: str) -> NormalizerSpec:
    if obj is None:
        return NormalizerSpec.linear()
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: normalizer must be an object")
    kind = obj.get("kind", "linear")
    try:
        if kind == "linear":
            return NormalizerSpec.linear()
        if kind == "power":
            return NormalizerSpec.power(float(_require(obj, "p", where)))
        if kind == "explicit":
            return NormalizerSpec.explicit(_require(obj, "values", where))
    except LLNLabError as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    raise ConfigError(f"{where}.kind: unknown normalizer kind {kind!r}")


def _parse_family(obj: Any, where: str) -> Optional[families.FamilyDescriptor]:
    if obj is None:
        return None
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: family must be an object")
    try:
        return families.descriptor_from_json(obj)
    except LLNLabError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def parse_config(
    raw: dict[str, Any],
    seed_override: Optional[int] = None,
    env_seed: Optional[int] = None,
) -> list[ExperimentConfig]:
    """Expand a config file into one ExperimentConfig per task."""
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    shared_family = _parse_family(raw.get("family"), "family")
    shared_normalizer = _parse_normalizer(raw.get("normalizer"), "normalizer")
    output_path = raw.get("output_path", "")

    entries = raw.get("tasks")
    if entries is None:
        if "task" not in raw:
            raise ConfigError("config needs either 'task' or a 'tasks' list")
        entries = [raw]
    if not isinstance(entries, list) or not entries:
        raise ConfigError("tasks: must be a non-empty list")

    configs = []
    for i, entry in enumerate(entries):
        where = f"tasks[{i}]"
        if not isinstance(entry, dict):
            raise ConfigError(f"{where}: must be an object")
        task = entry.get("task")
        if task not in TASK_KINDS:
            raise ConfigError(f"{where}.task: expected one of {TASK_KINDS}, got {task!r}")
        params = entry.get("params") or entry.get("task_params") or {}
        if not isinstance(params, dict):
            raise ConfigError(f"{where}.params: must be an object")
        seed = seed_override
        if seed is None:
            seed = entry.get("seed", raw.get("seed", env_seed))
        if seed is None:
            raise ConfigError(f"{where}.seed: no seed given (config, --seed, or LLNLAB_SEED)")
        fam = _parse_family(entry.get("family"), f"{where}.family") or shared_family
        norm = (
            _parse_normalizer(entry.get("normalizer"), f"{where}.normalizer")
            if "normalizer" in entry
            else shared_normalizer
        )
        assertions = entry.get("assertions", [])
        if not isinstance(assertions, list):
            raise ConfigError(f"{where}.assertions: must be a list")
        name = entry.get("name") or params.get("condition") or params.get("operation") or params.get("op") or task
        configs.append(
            ExperimentConfig(
                task=task,
                name=str(name),
                task_params=dict(params),
                seed=int(seed),
                family=fam,
                normalizer=norm,
                output_path=str(output_path),
                assertions=assertions,
            )
        )
    return configs


# --------------------------------------------------------------------- #
# Assertions
# --------------------------------------------------------------------- #


def _lookup(summary: Any, dotted: str):
    cur = summary
    for part in dotted.split("."):
        if isinstance(cur, dict):
            if part not in cur:
                raise ConfigError(f"assertion field {dotted!r}: key {part!r} missing")
            cur = cur[part]
        elif isinstance(cur, (list, tuple)):
            try:
                cur = cur[int(part)]
            except (ValueError, IndexError) as exc:
                raise ConfigError(f"assertion field {dotted!r}: bad index {part!r}") from exc
        else:
            raise ConfigError(f"assertion field {dotted!r}: cannot descend into {type(cur).__name__}")
    return cur


def evaluate_assertion(spec: dict[str, Any], summary: dict[str, Any]) -> dict[str, Any]:
    fld = _require(spec, "field", "assertion")
    op = _require(spec, "op", "assertion")
    observed = _lookup(summary, fld)
    if op == "within":
        target, tol = float(spec["value"]), float(spec["tol"])
        passed = abs(float(observed) - target) <= tol
    elif op == "in_range":
        passed = float(spec["lo"]) <= float(observed) <= float(spec["hi"])
    elif op == "le":
        passed = float(observed) <= float(spec["value"])
    elif op == "ge":
        passed = float(observed) >= float(spec["value"])
    elif op == "eq":
        passed = observed == spec["value"]
    elif op == "is_true":
        passed = bool(observed) is True
    elif op == "is_false":
        passed = bool(observed) is False
    else:
        raise ConfigError(f"assertion op {op!r} unknown")
    out = dict(spec)
    out["observed"] = observed
    out["passed"] = bool(passed)
    return out


# --------------------------------------------------------------------- #
# Task handlers
# --------------------------------------------------------------------- #

TableDict = "dict[str, tuple[tuple[str, ...], list[list]]]"


def _need_family(cfg: ExperimentConfig) -> families.SequenceFamily:
    if cfg.family is None:
        raise ConfigError(f"task {cfg.name!r} needs a family descriptor")
    return families.make_family(cfg.family)


def _param(cfg: ExperimentConfig, key: str, default=None, required: bool = False):
    if required and key not in cfg.task_params:
        raise ConfigError(f"task {cfg.name!r}: params.{key} required")
    return cfg.task_params.get(key, default)


def _run_simulate(cfg: ExperimentConfig, threads: int):
    fam = _need_family(cfg)
    result = montecarlo.run_lln_experiment(
        fam,
        cfg.normalizer,
        _param(cfg, "checkpoints", required=True),
        int(_param(cfg, "replications", required=True)),
        float(_param(cfg, "tolerance", required=True)),
        cfg.seed,
        threads=threads,
    )
    # Runtime goes to the manifest, never the summary body (replay
    # determinism).
    summary = result.to_json_summary(include_runtime=False)
    summary["min_frac_within_tol"] = min(s["frac_within_tol"] for s in summary["stats"])
    tables = {"experiment": (result.csv_header, result.to_csv_rows())}
    return summary, tables


def _run_check(cfg: ExperimentConfig, threads: int):
    condition = _param(cfg, "condition", required=True)
    if condition == "kolmogorov":
        fam = _need_family(cfg)
        if fam.moments is None:
            raise ConfigError("kolmogorov check needs an analytic variance profile")
        rep = conditions.kolmogorov_series(
            fam.moments.var_fn,
            cfg.normalizer,
            int(_param(cfg, "horizon", required=True)),
            float(_param(cfg, "divergence_floor", 1e-6)),
        )
        return rep.to_json_summary(), {"series": (rep.csv_header, rep.to_csv_rows())}
    if condition == "quasi_ratio":
        fam = _need_family(cfg)
        rep = conditions.quasi_uncorrelation_ratio(
            fam,
            _param(cfg, "n_grid", required=True),
            int(_param(cfg, "replications", required=True)),
            cfg.seed,
            batches=int(_param(cfg, "batches", 10)),
        )
        return rep.to_json_summary(), {"ratios": (rep.csv_header, rep.to_csv_rows())}
    if condition == "scaled_mean_sup":
        fam = _need_family(cfg)
        rep = conditions.scaled_mean_sup(
            fam,
            cfg.normalizer,
            int(_param(cfg, "horizon", required=True)),
            mc_replications=int(_param(cfg, "mc_replications", 0)),
            seed=cfg.seed,
        )
        return rep.to_json_summary(), {"scaled_means": (rep.csv_header, rep.to_csv_rows())}
    if condition == "cg_tail":
        fam = _need_family(cfg)
        sup_tail = conditions.sup_tail_over_horizon(fam, int(_param(cfg, "sup_horizon", 10000)))
        rep = conditions.cg_tail_integral(
            sup_tail,
            float(_param(cfg, "t_max", required=True)),
            float(_param(cfg, "tolerance", 1e-8)),
        )
        summary = rep.to_json_summary()
        summary["sup_horizon"] = int(_param(cfg, "sup_horizon", 10000))
        return summary, {}
    if condition == "mad_rate":
        fam = _need_family(cfg)
        rep = conditions.mean_abs_deviation_rate(
            fam,
            int(_param(cfg, "horizon", required=True)),
            int(_param(cfg, "replications", required=True)),
            cfg.seed,
        )
        return rep.to_json_summary(), {"series": (rep.csv_header, rep.to_csv_rows())}
    if condition == "truncation_gap":
        fam = _need_family(cfg)
        rep = conditions.truncation_gap_report(
            fam,
            int(_param(cfg, "horizon", required=True)),
            replications=int(_param(cfg, "replications", 0)),
            seed=cfg.seed,
        )
        return rep.to_json_summary(), {"gaps": (rep.csv_header, rep.to_csv_rows())}
    if condition == "basel":
        k_max = int(_param(cfg, "k_max", required=True))
        suite = conditions.basel_tail_suite(k_max)
        rows = [[r.k, r.tail_value, r.bound, int(r.holds)] for r in suite]
        summary = {
            "k_max": k_max,
            "all_hold": all(r.holds for r in suite),
            "k1_equality_gap": abs(suite[0].tail_value - suite[0].bound),
        }
        return summary, {"bounds": (("k", "tail_value", "bound", "holds"), rows)}
    if condition == "dependence":
        fam = _need_family(cfg)
        rep = montecarlo.dependence_probe(
            fam,
            int(_param(cfg, "i", required=True)),
            int(_param(cfg, "j", required=True)),
            str(_param(cfg, "probe", "sign")),
            int(_param(cfg, "samples", required=True)),
            cfg.seed,
            epsilon=float(_param(cfg, "epsilon", 0.05)),
            threshold=float(_param(cfg, "threshold", 0.0)),
        )
        return rep.to_json_summary(), {}
    if condition == "event":
        fam = _need_family(cfg)
        try:
            spec = montecarlo.EventSpec(**_param(cfg, "event", required=True))
        except TypeError as exc:
            raise ConfigError(f"bad event spec: {exc}") from exc
        rep = montecarlo.estimate_event_probability(
            fam,
            spec,
            int(_param(cfg, "n", required=True)),
            int(_param(cfg, "samples", required=True)),
            cfg.seed,
        )
        return rep.to_json_summary(), {}
    if condition == "chebyshev_point":
        fam = _need_family(cfg)
        rep = montecarlo.chebyshev_empirical(
            fam,
            int(_param(cfg, "n", required=True)),
            float(_param(cfg, "delta", required=True)),
            int(_param(cfg, "samples", required=True)),
            cfg.seed,
        )
        return rep.to_json_summary(), {}
    raise ConfigError(f"unknown check condition {condition!r}")


def _index_for(cfg: ExperimentConfig, alpha: float, epsilon: float, horizon: int) -> proofkit.SubsequenceIndex:
    fam = _need_family(cfg)
    if fam.moments is None or fam.moments.mean_sum_fn is None:
        raise ConfigError("proof tasks need a family with an analytic E S_n profile")
    return proofkit.build_index(fam.moments.mean_sum_fn, alpha, epsilon, horizon, cfg.normalizer)


def _run_proof(cfg: ExperimentConfig, threads: int):
    op = _param(cfg, "operation", required=True)
    if op == "index":
        alphas = [float(a) for a in _param(cfg, "alphas", required=True)]
        epsilons = [float(e) for e in _param(cfg, "epsilons", required=True)]
        horizons = [int(h) for h in _param(cfg, "horizons", required=True)]
        if not (alphas and epsilons and horizons):
            raise ConfigError("index grids must be non-empty")
        inv_keys = ("band", "bracket", "cell_floor", "membership", "scaled_mean_gap")
        rows = []
        total = 0
        for alpha in alphas:
            for eps in epsilons:
                for hor in horizons:
                    idx = _index_for(cfg, alpha, eps, hor)
                    inv = idx.check_invariants()
                    total += sum(inv.values())
                    rows.append([alpha, eps, hor, idx.L, idx.max_level] + [inv[k] for k in inv_keys])
        header = ("alpha", "epsilon", "horizon", "L", "max_level") + inv_keys
        return {"total_violations": total, "combos": len(rows)}, {"invariants": (header, rows)}
    if op == "kappa":
        alphas = [float(a) for a in _param(cfg, "alphas", required=True)]
        epsilon = float(_param(cfg, "epsilon", 0.5))
        horizon = int(_param(cfg, "horizon", 10000))
        j_max = int(_param(cfg, "j_max", required=True))
        band = _param(cfg, "s", None)
        rows = []
        all_hold = True
        min_margin = math.inf
        for alpha in alphas:
            idx = _index_for(cfg, alpha, epsilon, horizon)
            s_val = int(band) if band is not None else int(idx.s[idx.horizon])
            for rec in proofkit.kappa_report(idx, s_val, j_max):
                all_hold &= rec.holds
                min_margin = min(min_margin, rec.bound - rec.kappa_j)
                rows.append([alpha, rec.j, rec.kappa_j, rec.bound, int(rec.holds)])
        summary = {"all_hold": bool(all_hold), "min_margin": min_margin, "j_max": j_max}
        return summary, {"kappa": (("alpha", "j", "kappa_j", "bound", "holds"), rows)}
    if op == "subseq_series":
        idx = _index_for(
            cfg,
            float(_param(cfg, "alpha", required=True)),
            float(_param(cfg, "epsilon", required=True)),
            int(_param(cfg, "horizon", required=True)),
        )
        fam = _need_family(cfg)
        if fam.moments is None or fam.moments.var_fn is None:
            raise ConfigError("subseq_series needs an analytic variance profile")
        band = _param(cfg, "s", None)
        s_val = int(band) if band is not None else int(idx.s[idx.horizon])
        rep = proofkit.subsequence_variance_series(
            idx,
            fam.moments.var_fn,
            str(_param(cfg, "sign", "plus")),
            s_val,
            c=float(_param(cfg, "c", 1.0)),
        )
        return rep.to_json_summary(), {"series": (rep.csv_header, rep.to_csv_rows())}
    if op == "chebyshev":
        idx = _index_for(
            cfg,
            float(_param(cfg, "alpha", required=True)),
            float(_param(cfg, "epsilon", required=True)),
            int(_param(cfg, "horizon", required=True)),
        )
        fam = _need_family(cfg)
        band = _param(cfg, "s", None)
        s_val = int(band) if band is not None else int(idx.s[idx.horizon])
        rep = proofkit.chebyshev_report(
            fam,
            idx,
            s_val,
            float(_param(cfg, "delta", required=True)),
            int(_param(cfg, "replications", required=True)),
            cfg.seed,
        )
        return rep.to_json_summary(), {"levels": (rep.csv_header, rep.to_csv_rows())}
    if op == "sandwich":
        fam = _need_family(cfg)
        alphas = [float(a) for a in _param(cfg, "alphas", required=True)]
        epsilons = [float(e) for e in _param(cfg, "epsilons", required=True)]
        horizon = int(_param(cfg, "horizon", required=True))
        n_seeds = int(_param(cfg, "n_seeds", 1))
        rows = []
        total = 0
        worst = -math.inf
        for alpha in alphas:
            for eps in epsilons:
                idx = _index_for(cfg, alpha, eps, horizon)
                for r in range(n_seeds):
                    traj = families.sample_trajectory(fam, horizon, derived_seed(cfg.seed, r))
                    rep = proofkit.sandwich_check(traj, idx)
                    total += len(rep.violations)
                    worst = max(worst, rep.max_breach)
                    rows.append(
                        [alpha, eps, r, len(rep.violations), rep.max_breach,
                         rep.outer_slack_lower, rep.outer_slack_upper]
                    )
        header = ("alpha", "epsilon", "seed_index", "violations", "max_residual",
                  "outer_slack_lower", "outer_slack_upper")
        summary = {"total_violations": total, "max_residual": worst, "runs": len(rows)}
        return summary, {"sandwich": (header, rows)}
    if op == "slack":
        fam = _need_family(cfg)
        horizon = int(_param(cfg, "horizon", 1000))
        sup = conditions.scaled_mean_sup(fam, cfg.normalizer, horizon)
        m_values = [int(v) for v in _param(cfg, "m_values", required=True)]
        k_values = [int(v) for v in _param(cfg, "k_values", required=True)]
        rows = []
        for m in m_values:
            for k in k_values:
                alpha, eps = 1.0 + 1.0 / m, 1.0 / k
                rows.append(
                    [m, k, alpha, eps,
                     eps + (1.0 - 1.0 / alpha) * sup.a_hat,
                     (alpha - 1.0) * sup.a_hat + eps]
                )
        diag = [r for r in rows if r[0] == r[1]]
        diag_upper = [r[5] for r in sorted(diag)]
        diag_lower = [r[4] for r in sorted(diag)]
        summary = {
            "a_hat": sup.a_hat,
            "diagonal_upper_slacks": diag_upper,
            "diagonal_lower_slacks": diag_lower,
            "monotone_decreasing": bool(
                all(x > y for x, y in zip(diag_upper, diag_upper[1:]))
                and all(x > y for x, y in zip(diag_lower, diag_lower[1:]))
            ),
        }
        header = ("m", "k", "alpha", "epsilon", "outer_slack_lower", "outer_slack_upper")
        return summary, {"slack": (header, rows)}
    raise ConfigError(f"unknown proof operation {op!r}")


_NAMED_INTEGRANDS = {
    "exp_decay": lambda t: math.exp(-t),
    "gauss_pdf": lambda x: math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi),
    "zero": lambda t: 0.0,
}


def _run_integrate(cfg: ExperimentConfig, threads: int):
    op = _param(cfg, "op", required=True)
    if op == "cosine_moment":
        if "i" in cfg.task_params and "j" in cfg.task_params:
            pairs = [(int(cfg.task_params["i"]), int(cfg.task_params["j"]))]
        else:
            i_max = int(_param(cfg, "i_max", required=True))
            pairs = [(i, j) for i in range(1, i_max + 1) for j in range(i, i_max + 1)]
        rows = []
        worst_offdiag = 0.0
        worst_diag = 0.0
        worst_gap = 0.0
        for i, j in pairs:
            res = quadrature.cosine_moment(i, j)
            rows.append([i, j, res.value, res.analytic])
            worst_gap = max(worst_gap, abs(res.value - res.analytic))
            if i == j:
                worst_diag = max(worst_diag, abs(res.value - 0.5))
            else:
                worst_offdiag = max(worst_offdiag, abs(res.value))
        summary = {
            "pairs": len(pairs),
            "max_offdiag_abs": worst_offdiag,
            "max_diag_error": worst_diag,
            "max_analytic_gap": worst_gap,
        }
        return summary, {"moments": (("i", "j", "value", "analytic"), rows)}
    if op == "gaussian_pospart":
        rec = quadrature.gaussian_pospart_moments(float(_param(cfg, "tolerance", 1e-9)))
        summary = {
            "mean_pos": rec.mean_pos,
            "triple_integral": rec.triple_integral,
            "product_pos": rec.product_pos,
            "cov_pos": rec.cov_pos,
            "var_pos": rec.var_pos,
        }
        mc_pairs = int(_param(cfg, "mc_pairs", 0))
        if mc_pairs > 0:
            est, stderr = _pospart_product_mc(mc_pairs, cfg.seed)
            summary["mc_estimate"] = est
            summary["mc_stderr"] = stderr
            summary["mc_agrees_within_4se"] = bool(abs(est - rec.triple_integral) <= 4.0 * stderr)
        return summary, {}
    if op == "integral":
        name = str(_param(cfg, "integrand", required=True))
        if name not in _NAMED_INTEGRANDS:
            raise ConfigError(f"unknown integrand {name!r}; choose from {sorted(_NAMED_INTEGRANDS)}")
        res = quadrature.integrate_1d(
            _NAMED_INTEGRANDS[name],
            float(_param(cfg, "a", 0.0)),
            float(_param(cfg, "b", math.inf)),
            float(_param(cfg, "tolerance", 1e-8)),
        )
        summary = {
            "integrand": name,
            "value": res.value,
            "abs_error_estimate": res.abs_error_estimate,
            "evaluations": res.evaluations,
        }
        return summary, {}
    raise ConfigError(f"unknown integrate op {op!r}")


def _pospart_product_mc(pairs: int, seed: int) -> tuple[float, float]:
    """Plain Monte Carlo for E[Z1+ Z2+] with independent standard normals."""
    total = 0.0
    total_sq = 0.0
    done = 0
    chunk_index = 0
    while done < pairs:
        take = min(1 << 20, pairs - done)
        rng = chunk_generator(seed, chunk_index)
        z = rng.standard_normal((take, 2))
        prod = np.maximum(z[:, 0], 0.0) * np.maximum(z[:, 1], 0.0)
        total += float(prod.sum())
        total_sq += float((prod * prod).sum())
        done += take
        chunk_index += 1
    mean = total / pairs
    var = max(0.0, total_sq / pairs - mean * mean)
    return mean, math.sqrt(var / pairs)


def _run_oracle(cfg: ExperimentConfig, threads: int):
    if "n_values" in cfg.task_params:
        n_values = [int(v) for v in cfg.task_params["n_values"]]
    else:
        n_values = [int(_param(cfg, "n", required=True))]
    rows = [[n, montecarlo.exact_step_deviation(n)] for n in n_values]
    summary: dict[str, Any] = {
        "n_values": n_values,
        "probabilities": [r[1] for r in rows],
        "min_probability": min(r[1] for r in rows),
    }
    mc_check = _param(cfg, "mc_check", None)
    if mc_check:
        n = int(mc_check["n"])
        samples = int(mc_check["samples"])
        fam = families.make_family(families.step())
        est = montecarlo.estimate_event_probability(
            fam, montecarlo.EventSpec(kind="centered_sum_geq", threshold=0.5), n, samples, cfg.seed
        )
        exact = montecarlo.exact_step_deviation(n)
        summary["mc_n"] = n
        summary["mc_p_hat"] = est.p_hat
        summary["mc_stderr"] = est.stderr
        summary["mc_exact"] = exact
        summary["mc_within_3se"] = bool(abs(est.p_hat - exact) <= 3.0 * est.stderr)
    return summary, {"oracle": (("n", "probability"), rows)}


def _run_report(cfg: ExperimentConfig, threads: int):
    manifest_path = Path(_param(cfg, "input_manifest", required=True))
    manifest = json.loads(manifest_path.read_text())
    rows = [
        [t["index"], t["task"], t["name"], int(t["passed"]), len(t["outputs"])]
        for t in manifest.get("tasks", [])
    ]
    summary = {
        "source": str(manifest_path),
        "tasks": len(rows),
        "overall_pass": manifest.get("overall_pass"),
    }
    return summary, {"tasks": (("index", "task", "name", "passed", "outputs"), rows)}


_HANDLERS = {
    "simulate": _run_simulate,
    "check": _run_check,
    "proof": _run_proof,
    "integrate": _run_integrate,
    "oracle": _run_oracle,
    "report": _run_report,
}


# --------------------------------------------------------------------- #
# Emission
# --------------------------------------------------------------------- #


def _fmt_cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        f = float(v)
        if math.isnan(f):
            return "nan"
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        return f"{f:.12g}"
    return str(v)


def _round_floats(obj):
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return float(f"{f:.12g}") if math.isfinite(f) else f
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_round_floats(v) for v in obj.tolist()]
    return obj


def emit_report(results: list[TaskRunResult], out_dir: Path, formats=("csv", "json")) -> list[str]:
    """Write each task's tables (CSV) and summary (JSON) under out_dir.

    Column order is fixed by the report types, floats carry 12
    significant digits, CSV uses LF endings, and nothing time-dependent
    enters these bodies, so reruns are byte-identical.
    """
    if not results:
        raise ConfigError("emit_report needs at least one task result")
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[str] = []
    for i, res in enumerate(results):
        stem = f"{i:02d}_{res.config.task}_{res.config.name}".replace("/", "-")
        if "csv" in formats:
            for table_name, (header, rows) in res.tables.items():
                suffix = f"_{table_name}" if len(res.tables) > 1 else ""
                path = out_dir / f"{stem}{suffix}.csv"
                with path.open("w", newline="", encoding="utf-8") as fh:
                    writer = csv.writer(fh, lineterminator="\n")
                    writer.writerow(header)
                    for row in rows:
                        writer.writerow([_fmt_cell(v) for v in row])
                res.outputs.append(str(path))
                written.append(str(path))
        if "json" in formats:
            body = {
                "task": res.config.task,
                "name": res.config.name,
                "seed": res.config.seed,
                "family": (
                    families.descriptor_to_json(res.config.family) if res.config.family else None
                ),
                "summary": _round_floats(res.summary),
                "assertions": _round_floats(res.assertion_results),
            }
            path = out_dir / f"{stem}_summary.json"
            path.write_text(json.dumps(body, indent=2, sort_keys=True) + "\n", encoding="utf-8")
            res.outputs.append(str(path))
            written.append(str(path))
    return written


# --------------------------------------------------------------------- #
# Orchestration
# --------------------------------------------------------------------- #


def run_config(config: ExperimentConfig, threads: int = 1) -> TaskRunResult:
    """Execute exactly one task and evaluate its assertions."""
    start = time.perf_counter()
    handler = _HANDLERS[config.task]
    summary, tables = handler(config, threads)
    assertion_results = [evaluate_assertion(a, summary) for a in config.assertions]
    return TaskRunResult(
        config=config,
        summary=summary,
        tables=tables,
        assertion_results=assertion_results,
        runtime_ms=(time.perf_counter() - start) * 1e3,
    )


def run_config_file(
    path: str | Path,
    out_dir: str | Path | None = None,
    seed_override: Optional[int] = None,
    threads: int = 1,
) -> tuple[dict[str, Any], int]:
    """Run every task in a config file; returns (manifest, exit_code)."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    env_seed = os.environ.get("LLNLAB_SEED")
    configs = parse_config(raw, seed_override, int(env_seed) if env_seed else None)

    resolved_out = Path(out_dir) if out_dir else Path(configs[0].output_path or f"{path.stem}_out")
    started = _utc_now()
    results = [run_config(cfg, threads) for cfg in configs]
    emit_report(results, resolved_out)

    overall = all(r.passed for r in results)
    manifest = {
        "tool": "llnlab",
        "version": TOOL_VERSION,
        "config": str(path),
        "config_echo": raw,
        "seed_override": seed_override,
        "threads": threads,
        "started_utc": started,
        "finished_utc": _utc_now(),
        "tasks": [
            {
                "index": i,
                "task": r.config.task,
                "name": r.config.name,
                "seed": r.config.seed,
                "outputs": r.outputs,
                "passed": r.passed,
                "assertions": _round_floats(r.assertion_results),
                "runtime_ms": round(r.runtime_ms, 3),
            }
            for i, r in enumerate(results)
        ],
        "overall_pass": overall,
    }
    for r in results:
        missing = [p for p in r.outputs if not Path(p).exists()]
        if missing:
            raise LLNLabError(f"outputs missing after write: {missing}")
    (resolved_out / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return manifest, (0 if overall else 1)


def _utc_now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).replace(microsecond=0).isoformat()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="llnlab",
        description="Law-of-large-numbers diagnostics: run config-driven experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, doc in (
        ("simulate", "replicated trajectory experiments"),
        ("check", "condition checkers (series, ratios, tails, gaps)"),
        ("proof", "subsequence index, bounds, and squeeze checks"),
        ("integrate", "deterministic quadrature tasks"),
        ("oracle", "exact step-family deviation probabilities"),
        ("report", "collate a previous run's manifest"),
    ):
        p = sub.add_parser(name, help=doc)
        p.add_argument("--config", required=True, help="path to the JSON config file")
        p.add_argument("--seed", type=int, default=None, help="override every task seed")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--threads", type=int, default=None, help="worker cap (results unchanged)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    threads = args.threads
    if threads is None:
        env_threads = os.environ.get("LLNLAB_THREADS")
        threads = int(env_threads) if env_threads else 1
    try:
        manifest, code = run_config_file(
            args.config, out_dir=args.out, seed_override=args.seed, threads=threads
        )
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except LLNLabError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # anything unforeseen is still a runtime failure
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    for task in manifest["tasks"]:
        status = "PASS" if task["passed"] else "FAIL"
        print(f"[{status}] task {task['index']}: {task['task']}/{task['name']}")
    print(f"outputs in {Path(manifest['tasks'][0]['outputs'][0]).parent}" if manifest["tasks"] else "")
    return code


if __name__ == "__main__":
    raise SystemExit(main())
