"""Experiment configs and runners behind the command line.

A config is a JSON object with a ``name``, a ``kind`` and per-kind
``params``; shared blocks (``grid``, ``flow``, ``initial``, ``weight``,
``times``) are optional and fall back to the defaults below.  Preparing an
experiment validates everything and returns a zero-argument callable, so range
errors surface before any computation starts.
"""
from __future__ import annotations

import csv
import json
import math
import os
import re
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import acceptance as acc
from . import carleman as cm
from .analytic import GaussianState, evolve_gaussian, hardy_extremal_pair, sample_evolution
from .appell import AppellParams, appell_equation_residual, appell_transform
from .convexity import build_trace, closed_form_gaussian_trace, log_convexity_check
from .counterexample import divergence_demonstration, scaled_weight, solve_weight_ode
from .errors import BranchOrDecayLoss, ConfigError, HardyLabError, ParameterOutOfRange
from .grid import Grid, SpaceTimeField, l2_norm
from .hardy import heat_boundary_closed_form, heat_boundary_scan, hardy_product
from .propagator import FlowSpec, builtin_potential, evolve, free_flow
from .weight import StaticGaussian, WeightProfile, profile_from_dict, weighted_l2_norm

KINDS = ("evolve", "convexity", "carleman", "counterexample", "hardy", "appell", "acceptance-suite")
_NAME = re.compile(r"^[A-Za-z0-9][A-Za-z0-9_.-]*$")


class OutputError(HardyLabError):
    """A result file could not be written; the message carries the path."""


def _number(block: dict, key: str, prefix: str, default=None, positive=False, nonneg=False, integer=False):
    value = block.get(key, default)
    path = f"{prefix}.{key}"
    if value is None:
        raise ConfigError(f"{path}: missing")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    if integer and int(value) != value:
        raise ParameterOutOfRange(path, "must be an integer")
    if not math.isfinite(value):
        raise ParameterOutOfRange(path, "must be finite")
    if positive and not value > 0:
        raise ParameterOutOfRange(path, f"must be positive, got {value}")
    if nonneg and value < 0:
        raise ParameterOutOfRange(path, f"must be nonnegative, got {value}")
    return int(value) if integer else float(value)


def _number_list(block: dict, key: str, prefix: str, default, positive=False):
    values = block.get(key, default)
    if not isinstance(values, list) or not values:
        raise ConfigError(f"{prefix}.{key}: expected a nonempty list")
    return [_number({key: v}, key, prefix, positive=positive) for v in values]


def _complex(value, path: str) -> complex:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    if isinstance(value, list) and len(value) == 2 and all(isinstance(v, (int, float)) for v in value):
        return complex(value[0], value[1])
    raise ConfigError(f"{path}: expected a number or [re, im]")


def _gaussian(value, path: str) -> GaussianState:
    try:
        return GaussianState(_complex(value, path))
    except BranchOrDecayLoss:
        raise ParameterOutOfRange(path, "Re c must be positive") from None


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    kind: str
    seed: int = 0
    threads: int = 1
    strict_tails: bool = False
    output: str = "results"
    grid: Grid = field(default_factory=lambda: Grid(20.0, 1024))
    flow: FlowSpec = field(default_factory=lambda: FlowSpec(0.0, 1.0))
    initial: GaussianState = field(default_factory=lambda: GaussianState(1.0))
    weight: WeightProfile | None = None
    times: np.ndarray = field(default_factory=lambda: np.linspace(0.0, 1.0, 11))
    params: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config: top level must be a JSON object")
        name = data.get("name")
        if not isinstance(name, str) or not _NAME.match(name):
            raise ConfigError("name: must be a nonempty identifier-like string")
        kind = data.get("kind")
        if kind not in KINDS:
            raise ParameterOutOfRange("kind", f"must be one of {', '.join(KINDS)}")
        seed = _number(data, "seed", "config", 0, nonneg=True, integer=True)
        threads = _number(data, "threads", "config", 1, positive=True, integer=True)
        output = data.get("output", "results")
        if not isinstance(output, str) or not output:
            raise ConfigError("output: must be a directory path")

        g = data.get("grid", {})
        grid = Grid(_number(g, "half_width", "grid", 20.0, positive=True),
                    _number(g, "points", "grid", 1024, positive=True, integer=True))
        if grid.points > 4096:
            raise ParameterOutOfRange("grid.points", "at most 4096")

        f = data.get("flow", {})
        potential = None
        if f.get("potential") is not None:
            pot = dict(f["potential"])
            pname = pot.pop("name", None)
            if not isinstance(pname, str):
                raise ConfigError("flow.potential.name: missing")
            potential = builtin_potential(pname, **pot)
        flow = FlowSpec(_number(f, "A", "flow", 0.0, nonneg=True), _number(f, "B", "flow", 1.0), potential)

        initial = _gaussian(data.get("initial", {}).get("c", 1.0), "initial.c")
        weight = profile_from_dict(data["weight"]) if data.get("weight") is not None else None

        t = data.get("times", {})
        start = _number(t, "start", "times", 0.0, nonneg=True)
        stop = _number(t, "stop", "times", 1.0)
        count = _number(t, "count", "times", 11, integer=True)
        if stop <= start:
            raise ParameterOutOfRange("times.stop", "must exceed times.start")
        if count < 2:
            raise ParameterOutOfRange("times.count", "need at least 2 samples")
        params = data.get("params", {})
        if not isinstance(params, dict):
            raise ConfigError("params: must be an object")
        return cls(name, kind, seed, threads, bool(data.get("strict_tails", False)), output, grid, flow,
                   initial, weight, np.linspace(start, stop, count), params)


@dataclass
class Table:
    header: list
    rows: list


@dataclass
class Outcome:
    checks: list
    tables: dict = field(default_factory=dict)
    plotdata: dict = field(default_factory=dict)
    results: dict = field(default_factory=dict)
    runtimes: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def _check(name, value, bound, sense):
    return acc.Check(name, float(value), float(bound), sense)


# --- runners: each returns a thunk after validating its params -------------

def prepare_evolve(cfg: ExperimentConfig) -> Callable[[], Outcome]:
    p = cfg.params
    dt = _number(p, "dt", "params", 1e-3, positive=True)
    tol = _number(p, "tolerance", "params", 1e-8, positive=True)

    def run():
        u0 = cfg.initial.sample(cfg.grid)
        u = evolve(u0, cfg.flow, cfg.times, dt)
        norms = [l2_norm(s) for s in u.slices()]
        header, rows = ["t", "l2_norm"], []
        weighted = []
        if cfg.weight is not None:
            header += ["weighted_norm", "tail_ratio"]
            for s, t in zip(u.slices(), u.times):
                weighted.append(weighted_l2_norm(s, cfg.weight, t, strict=cfg.strict_tails))
        for i, t in enumerate(u.times):
            row = [t, norms[i]]
            if weighted:
                row += [weighted[i].value, weighted[i].tail_ratio]
            rows.append(row)
        checks = []
        A, B = cfg.flow.A, cfg.flow.B
        if cfg.flow.potential is None:
            err = max(l2_norm(s - evolve_gaussian(cfg.initial, A, B, t - u.times[0]).sample(cfg.grid))
                      for s, t in zip(u.slices(), u.times))
            checks.append(_check("closed-form agreement (L2 error)", err, tol, "max"))
        if A == 0 and (cfg.flow.potential is None or cfg.flow.potential.is_real):
            drift = max(abs(n - norms[0]) for n in norms) / norms[0]
            checks.append(_check("unitarity (relative norm drift)", drift, 1e-10, "max"))
        if A > 0 and cfg.flow.potential is None:
            rise = max(b - a for a, b in zip(norms, norms[1:]))
            checks.append(_check("dissipation (largest norm increase)", rise, 1e-14 * norms[0], "max"))
        table = Table(header, rows)
        return Outcome(checks, {"evolution": table}, {"evolution_plot": Table(["t", "l2_norm"], [r[:2] for r in rows])})

    return run


def prepare_convexity(cfg: ExperimentConfig) -> Callable[[], Outcome]:
    p = cfg.params
    source = p.get("source", "analytic")
    if source not in ("analytic", "spectral"):
        raise ParameterOutOfRange("params.source", "must be 'analytic' or 'spectral'")
    if not isinstance(cfg.weight, StaticGaussian):
        raise ConfigError("weight: convexity experiments need a StaticGaussian weight")
    slack = _number(p, "slack", "params", 0.0, nonneg=True)
    curvature_tol = _number(p, "curvature_tol", "params", 1e-7, positive=True)
    interpolation_tol = _number(p, "interpolation_tol", "params", 1e-6, positive=True)
    oracle_tol = _number(p, "oracle_tol", "params", 1e-6, positive=True)
    if source == "analytic" and cfg.flow.potential is not None:
        raise ConfigError("params.source: analytic data needs a flow without potential")
    gamma = cfg.weight.gamma
    A, B = cfg.flow.A, cfg.flow.B

    def run():
        if source == "analytic":
            u = sample_evolution(cfg.initial, A, B, cfg.grid, cfg.times)
        else:
            u = evolve(cfg.initial.sample(cfg.grid), cfg.flow, cfg.times)
        trace = build_trace(u, cfg.weight, strict=cfg.strict_tails, operator_coefficients=(A, B))
        verdict = log_convexity_check(trace, slack)
        checks = [
            _check("min d2 logH / dt^2 (scaled by dt^2)", verdict.curvature_margin * trace.dt**2, -curvature_tol, "min"),
            _check("interpolation margin (log)", verdict.interpolation_margin, -math.log1p(interpolation_tol), "min"),
        ]
        if cfg.flow.potential is None:
            oracle = closed_form_gaussian_trace(cfg.initial, A, B, gamma, cfg.times - cfg.times[0])
            checks.append(_check("relative gap to closed-form H", np.max(np.abs(trace.H / oracle.H - 1)), oracle_tol, "max"))
        second = np.concatenate([[np.nan], trace.second_diff_logH / trace.dt**2, [np.nan]])
        rows = [[t, h, lh, d, n, s] for t, h, lh, d, n, s in zip(trace.times, trace.H, trace.logH, trace.D, trace.N, second)]
        return Outcome(
            checks,
            {"trace": Table(["t", "H", "logH", "D", "N", "d2logH"], rows)},
            {"trace_logH": Table(["t", "logH"], [[r[0], r[2]] for r in rows])},
            {"H0": float(trace.H[0])},
        )

    return run


def prepare_carleman(cfg: ExperimentConfig) -> Callable[[], Outcome]:
    p = cfg.params
    ops = p.get("operators", list(cm.OPERATORS))
    if not isinstance(ops, list) or not ops or any(o not in cm.OPERATORS for o in ops):
        raise ParameterOutOfRange("params.operators", f"entries must be among {cm.OPERATORS}")
    n_bumps = _number(p, "n_bumps", "params", 50, positive=True, integer=True)
    mus = _number_list(p, "mus", "params", [0.5, 1.0, 2.0], positive=True)
    epss = _number_list(p, "epss", "params", [0.1, 0.5, 1.0], positive=True)
    Rs = _number_list(p, "Rs", "params", [1.0, 5.0, 10.0], positive=True)
    points = _number(p, "points", "params", 48, positive=True, integer=True)

    def run():
        rows, checks = [], []
        for op in ops:
            part = cm.carleman_sweep(op, n_bumps, mus, epss, Rs, cfg.seed, cfg.threads, points)
            rows += part
            checks.append(_check(f"{op}: min margin / rhs", min(r.margin / r.rhs for r in part), -1e-8, "min"))
        sweep = Table(["bump", "mu", "eps", "R", "operator", "lhs", "rhs", "margin", "pass"],
                      [[r.bump, r.mu, r.eps, r.R, r.operator, r.lhs, r.rhs, r.margin, r.passed] for r in rows])
        heat = {}
        for r in rows:
            key = (r.operator, r.R, r.mu, r.eps)
            heat[key] = min(heat.get(key, math.inf), r.margin / r.rhs)
        order = [(op, R, m, e) for op in ops for R in Rs for m in mus for e in epss]
        plot = Table(["operator", "R", "mu", "eps", "min_margin_over_rhs"], [[*k, heat[k]] for k in order])
        return Outcome(checks, {"sweep": sweep}, {"margin_heat": plot}, {"checks_per_operator": len(rows) // len(ops)})

    return run


def prepare_counterexample(cfg: ExperimentConfig) -> Callable[[], Outcome]:
    p = cfg.params
    t_max = _number(p, "t_max", "params", 50.0, positive=True)
    R = _number(p, "R", "params", 1.0, positive=True)
    halfwidths = _number_list(p, "halfwidths", "params", [5.0, 10.0, 20.0, 40.0], positive=True)
    R_values = _number_list(p, "R_values", "params", [1.0, 5.0, 10.0, 20.0, 50.0], positive=True)
    if max(R_values + [R]) > t_max:
        raise ParameterOutOfRange("params.t_max", "must cover every R used")
    if len(halfwidths) < 2:
        raise ParameterOutOfRange("params.halfwidths", "need at least two half widths")

    def run():
        traj = solve_weight_ode(t_max)
        ra = [float(scaled_weight(traj, r, 1.0)) for r in R_values]
        table = divergence_demonstration(R, halfwidths, traj)
        rows = [[r.R, r.L, r.log_H0, r.H_minus1, r.H_plus1, r.H0_converged, r.H1_converged] for r in table.rows]
        header = ["R", "L", "log_H0_truncated", "H_minus1", "H_plus1", "H0_converged", "H1_converged"]
        checks = [
            _check("first-integral residual", np.max(np.abs(traj.energy_residual())), 1e-6, "max"),
            _check("largest increment of R a(R)", max(b - a for a, b in zip(ra, ra[1:])) if len(ra) > 1 else -1.0, 0.0, "max"),
            _check("H(+-1) converged at the largest L", float(table.rows[-1].H1_converged), 1.0, "min"),
        ]
        if table.regime == "divergent":
            logs = [r.log_H0 for r in table.rows]
            checks.append(_check("smallest growth of log H(0)", min(b - a for a, b in zip(logs, logs[1:])), 1.0, "min"))
        tables = {"divergence": Table(header, rows), "scaled_rates": Table(["R", "R_a_of_R"], [[a, b] for a, b in zip(R_values, ra)])}
        return Outcome(checks, tables, {"divergence_plot": Table(header, rows)}, {"regime": table.regime})

    return run


def prepare_hardy(cfg: ExperimentConfig) -> Callable[[], Outcome]:
    p = cfg.params
    T_values = _number_list(p, "T_values", "params", [0.5, 1.0, 2.0], positive=True)
    states = [_gaussian(c, "params.c_values") for c in p.get("c_values", [1.0, 0.25, 4.0, [1.0, 0.5]])]
    extremal = p.get("extremal", [[2.0, 1.0]])
    heat_cs = _number_list(p, "heat_c_values", "params", [0.25, 1.0, 4.0], positive=True)
    for pair in extremal:
        if not (isinstance(pair, list) and len(pair) == 2 and all(isinstance(v, (int, float)) and v > 0 for v in pair)):
            raise ParameterOutOfRange("params.extremal", "entries must be [beta, T] with positive values")

    def run():
        rows = []
        for state in states:
            for T in T_values:
                u0 = state.sample(cfg.grid)
                hp = hardy_product(u0, free_flow(u0, 0.0, 1.0, T), T)
                rows.append(["gaussian", state.c.real, state.c.imag, T, hp.alpha, hp.beta, hp.normalized])
        gaps = []
        for beta, T in extremal:
            pair = hardy_extremal_pair(beta, T)
            u0 = pair.initial.sample(cfg.grid)
            hp = hardy_product(u0, free_flow(u0, 0.0, 1.0, T), T)
            rows.append(["extremal", pair.initial.c.real, pair.initial.c.imag, T, hp.alpha, hp.beta, hp.normalized])
            gaps.append(abs(hp.normalized - 1.0))
        heat_rows = [[c, heat_boundary_scan(GaussianState(c)), heat_boundary_closed_form(c)] for c in heat_cs]
        checks = [_check("lowest normalized product", min(r[-1] for r in rows), 1.0 - 1e-3, "min")]
        if gaps:
            checks.append(_check("extremal |product - 1|", max(gaps), 1e-3, "max"))
        checks.append(_check("heat scan vs closed form", max(abs(a - b) for _, a, b in heat_rows), 1e-6, "max"))
        checks.append(_check("smallest heat boundary", min(r[1] for r in heat_rows), 2.0, "min"))
        header = ["family", "c_re", "c_im", "T", "alpha", "beta", "normalized_product"]
        return Outcome(checks, {"products": Table(header, rows),
                                "heat_boundary": Table(["c", "delta_scan", "delta_closed_form"], heat_rows)})

    return run


def prepare_appell(cfg: ExperimentConfig) -> Callable[[], Outcome]:
    p = cfg.params
    params = AppellParams(_number(p, "alpha", "params", 1.0, positive=True),
                          _number(p, "beta", "params", 2.0, positive=True), cfg.flow.A, cfg.flow.B)
    gamma = _number(p, "gamma", "params", 0.0, nonneg=True)
    tol = _number(p, "tolerance", "params", 1e-5, positive=True)
    residual_tol = _number(p, "residual_tol", "params", 1e-3, positive=True)
    if abs(cfg.times[0]) > 1e-12 or abs(cfg.times[-1] - 1.0) > 1e-12:
        raise ParameterOutOfRange("times", "the transform needs samples on exactly [0, 1]")

    def run():
        if cfg.flow.potential is None:
            u = sample_evolution(cfg.initial, cfg.flow.A, cfg.flow.B, cfg.grid, cfg.times)
        else:
            u = evolve(cfg.initial.sample(cfg.grid), cfg.flow, cfg.times)
        res = appell_transform(u, params, gamma=gamma, strict=True)
        checks = [_check("norm identity residual", res.norm_identity_residual, tol, "max")]
        if cfg.flow.A == 0:
            back = appell_transform(res.transformed, params.inverse())
            gap = np.max(np.linalg.norm(back.transformed.values - u.values, axis=1)) / np.linalg.norm(u.values[0])
            checks.append(_check("round trip", gap, tol, "max"))
        checks.append(_check("PDE residual of the transformed field", appell_equation_residual(u, params, cfg.flow, res),
                             residual_tol, "max"))
        rows = [[t, s, a, b] for t, s, a, b in zip(res.transformed.times, res.s_of_t, res.lhs, res.rhs)]
        table = Table(["t", "s", "weighted_norm_transformed", "weighted_norm_original"], rows)
        return Outcome(checks, {"norms": table}, {"norms_plot": table})

    return run


def _criterion_numbers(entries) -> list:
    by_slug = {acc.CRITERIA[n][0].replace(" ", "-").lower(): n for n in acc.CRITERIA}
    out = []
    for e in entries:
        ref = e.get("criterion", e.get("name")) if isinstance(e, dict) else e
        if isinstance(ref, int) and ref in acc.CRITERIA:
            out.append(ref)
        elif isinstance(ref, str) and ref in by_slug:
            out.append(by_slug[ref])
        else:
            raise ParameterOutOfRange("params.criteria", f"unknown criterion {ref!r}")
    return out


def prepare_acceptance(cfg: ExperimentConfig) -> Callable[[], Outcome]:
    numbers = _criterion_numbers(cfg.params.get("criteria", sorted(acc.CRITERIA)))

    def run():
        results = acc.run_suite(numbers, cfg.seed, cfg.threads)
        checks = [acc.Check(f"criterion {r.number} ({r.title}): {c.name}", c.value, c.bound, c.sense)
                  for r in results for c in r.checks]
        rows = [[r.number, r.title, r.passed, r.margin] for r in results]
        return Outcome(checks, {"acceptance": Table(["criterion", "title", "passed", "margin"], rows)},
                       results={"criteria": [r.to_dict() for r in results]},
                       runtimes={f"criterion_{r.number}": r.runtime for r in results})

    return run


PREPARERS = {
    "evolve": prepare_evolve,
    "convexity": prepare_convexity,
    "carleman": prepare_carleman,
    "counterexample": prepare_counterexample,
    "hardy": prepare_hardy,
    "appell": prepare_appell,
    "acceptance-suite": prepare_acceptance,
}


def prepare(cfg: ExperimentConfig) -> Callable[[], Outcome]:
    return PREPARERS[cfg.kind](cfg)


# --- output ---------------------------------------------------------------

def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_table(table: Table, path: str) -> str:
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(table.header)
            for row in table.rows:
                w.writerow([_cell(v) for v in row])
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror}") from None
    return path


def ensure_writable(directory: str) -> None:
    try:
        os.makedirs(directory, exist_ok=True)
        probe = os.path.join(directory, ".hardylab-write-probe")
        with open(probe, "w"):
            pass
        os.remove(probe)
    except OSError as exc:
        raise ConfigError(f"output: directory {directory} is not writable ({exc.strerror})") from None


def emit_plotdata(outcome: Outcome, directory: str, prefix: str) -> list:
    """Plot-ready CSVs, one per entry of ``outcome.plotdata``."""
    return [write_table(t, os.path.join(directory, f"{prefix}_{key}.csv")) for key, t in outcome.plotdata.items()]


def summary(cfg: ExperimentConfig, outcome: Outcome) -> dict:
    return {
        "name": cfg.name,
        "kind": cfg.kind,
        "seed": cfg.seed,
        "passed": outcome.passed,
        "checks": [c.to_dict() for c in outcome.checks],
        "results": outcome.results,
        "runtimes": outcome.runtimes,
    }


def without_runtimes(doc: dict) -> dict:
    return {k: v for k, v in doc.items() if k != "runtimes"}


def write_outputs(cfg: ExperimentConfig, outcome: Outcome, directory: str) -> list:
    paths = [write_table(t, os.path.join(directory, f"{cfg.name}_{key}.csv")) for key, t in outcome.tables.items()]
    paths += emit_plotdata(outcome, directory, f"{cfg.name}_plot")
    path = os.path.join(directory, f"{cfg.name}_summary.json")
    text = json.dumps(summary(cfg, outcome), indent=2, sort_keys=True) + "\n"
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror}") from None
    return paths + [path]


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path} ({exc.strerror})") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: {path} is not valid JSON ({exc.msg} at line {exc.lineno})") from None


def run_experiment(cfg: ExperimentConfig, directory: str | None = None):
    """Validate, execute, write.  Returns the outcome and the written paths."""
    directory = directory or cfg.output
    thunk = prepare(cfg)
    ensure_writable(directory)
    start = time.perf_counter()
    outcome = thunk()
    outcome.runtimes.setdefault("total", time.perf_counter() - start)
    return outcome, write_outputs(cfg, outcome, directory)
