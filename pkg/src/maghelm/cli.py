"""Batch front door: JSON run configs in, CSV/JSON/SVG artifacts out.

One config document describes one run: a command, the problem and
potential, the source, sweep grids and the hard assertions the run must
satisfy.  ``run`` writes ``summary.json`` plus per-command CSV tables
and SVG plots into the output directory and returns a process exit
status: 0 when every assertion passed, 1 on the first assertion
failure (named on stderr), 2 when the config itself is unusable.
Sweeps may be threaded; reductions are ordered, so artifacts are
byte-identical across worker counts.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .estimates import ESTIMATE_KINDS, estimate_sweep, hardy_constant
from .evolution import smoothing_check
from .farfield import (CoverageWarning, cross_section,
                       default_radius_window, spectral_reconstruction)
from .identities import (alpha1_residual, cubic_multiplier,
                         morawetz_residual, piecewise_multiplier,
                         quadratic_multiplier)
from .model import (ProblemSpec, SpecError, build_mesh, geometric_mesh,
                    spec_hash, validate_spec)
from .norms import WeightSpec, radial_weight, weighted_l2
from .potentials import HypothesisError, build_example
from .radial import decompose_rhs, h1_local_distance, resolve
from .report import (canonical_rows, render_csv, render_json, report_row,
                     summary_document, svg_line_plot)
from .sources import as_rhs, source_cuts, source_from_config

__all__ = ["ConfigError", "RunConfig", "parse_config", "run", "main"]

COMMANDS = ("solve", "identity", "estimates", "hardy", "farfield",
            "spectral", "evolve", "report")

_COMMON_KEYS = {"command", "problem", "potential", "f", "nodes", "solver",
                "out", "seed", "assert"}
_COMMAND_KEYS = {
    "solve": set(),
    "identity": {"identity"},
    "estimates": {"estimate", "sweep", "weight"},
    "hardy": {"hardy"},
    "farfield": {"farfield"},
    "spectral": {"spectral"},
    "evolve": {"evolve", "weight", "forcing"},
    "report": {"report"},
}


class ConfigError(Exception):
    """The run configuration cannot be used (exit status 2)."""


class AssertionFailure(Exception):
    """A hard assertion of the run failed (exit status 1)."""


@dataclass(frozen=True)
class RunConfig:
    """One validated run: raw config document plus execution knobs."""

    command: str
    raw: dict
    out: Path
    seed: int = 0
    threads: int = 1


def _require_keys(section: dict, allowed: set, where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(
            f"unknown key(s) in {where}: {', '.join(sorted(unknown))}")


def parse_config(source, command: str | None = None, out=None,
                 seed: int | None = None, threads: int = 1) -> RunConfig:
    """Validate a config document (dict or JSON file path)."""
    if isinstance(source, (str, Path)):
        try:
            raw = json.loads(Path(source).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
    else:
        raw = dict(source)
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    cfg_cmd = raw.get("command")
    if command is not None and cfg_cmd is not None and command != cfg_cmd:
        raise ConfigError(
            f"config says command {cfg_cmd!r}, invoked as {command!r}")
    cmd = command or cfg_cmd
    if cmd not in COMMANDS:
        raise ConfigError(f"unknown command {cmd!r}")
    _require_keys(raw, _COMMON_KEYS | _COMMAND_KEYS[cmd], "config")
    out_path = Path(out) if out is not None else Path(
        raw.get("out", "maghelm_out"))
    if seed is None:
        seed = int(raw.get("seed", 0))
    return RunConfig(cmd, raw, out_path, seed, max(1, int(threads)))


def _parse_problem(section) -> ProblemSpec:
    section = dict(section or {})
    _require_keys(section, {"d", "lam", "eps", "sign", "r_min", "r_max",
                            "mode_cutoff"}, "problem")
    spec = ProblemSpec(
        d=int(section.get("d", 3)),
        lam=float(section.get("lam", 1.0)),
        eps=float(section.get("eps", 0.1)),
        sign=str(section.get("sign", "plus")),
        r_min=float(section.get("r_min", 1e-3)),
        r_max=float(section.get("r_max", 64.0)),
        mode_cutoff=int(section.get("mode_cutoff", 8)))
    validate_spec(spec)
    return spec


def _parse_potential(section, d: int):
    section = dict(section or {"kind": "free"})
    kind = section.pop("kind", "free")
    section.setdefault("d", d)
    dd = int(section.pop("d"))
    return build_example(kind, d=dd, **section)


def _parse_sources(section):
    items = section if section is not None else [
        {"kind": "smooth_annulus", "r_inner": 1.0, "r_outer": 2.0}]
    if not isinstance(items, list) or not items:
        raise ConfigError("f must be a nonempty list of source descriptors")
    return [source_from_config(item) for item in items]


def _parse_weight(section, d: int) -> WeightSpec:
    if section is None:
        raise ConfigError("this command needs a weight section")
    section = dict(section)
    _require_keys(section, {"kind", "exponent"}, "weight")
    kind = section.get("kind")
    if kind == "inverse_square":
        return radial_weight(lambda r: 1.0 / r ** 2, d=d,
                             label="inv_square")
    if kind == "power":
        gamma = float(section["exponent"])
        return radial_weight(lambda r: r ** (-gamma), d=d,
                             label=f"power({gamma:g})")
    raise ConfigError(f"unknown weight kind {kind!r}")


def _log_grid(section: dict, lo_key="lo", hi_key="hi",
              count_key="count") -> np.ndarray:
    lo, hi = float(section[lo_key]), float(section[hi_key])
    count = int(section[count_key])
    if count < 1 or hi <= lo:
        raise ConfigError("empty grid")
    return np.logspace(math.log10(lo), math.log10(hi), count)


def _check(name: str, ok: bool, detail: str, failures: list) -> None:
    if not ok:
        failures.append(f"{name}: {detail}")


# ---------------------------------------------------------------- handlers

def _cmd_solve(cfg: RunConfig, mapper):
    raw = cfg.raw
    problem = _parse_problem(raw.get("problem"))
    pot = _parse_potential(raw.get("potential"), problem.d)
    specs = _parse_sources(raw.get("f"))
    f = as_rhs(specs)
    nodes = int(raw.get("nodes", 2048))
    solver = str(raw.get("solver", "fd"))
    mesh = build_mesh(problem, nodes)
    bundle = resolve(f, pot, problem, mesh, solver=solver)

    rows, tables, plots = [], [], []
    base = {"lam": problem.lam, "eps": problem.eps, "sign": problem.sign,
            "potential": pot.label or pot.kind, "nodes": nodes,
            "solver": solver, "spec": spec_hash(problem)}
    series = []
    profile = {"r": mesh.r}
    for sol in bundle:
        wn = math.sqrt(float(np.real(mesh.integrate(np.abs(sol.w) ** 2))))
        gn = math.sqrt(float(np.real(mesh.integrate(np.abs(sol.g) ** 2))))
        rows.append({"kind": "solve_mode", "lhs": wn, "rhs": max(gn, 1e-300),
                     "ratio": wn / max(gn, 1e-300),
                     "mode": sol.op.mode.index, **base})
        series.append((f"mode {sol.op.mode.index}", mesh.r, np.abs(sol.w)))
        profile[f"mode{sol.op.mode.index}_re"] = np.real(sol.w)
        profile[f"mode{sol.op.mode.index}_im"] = np.imag(sol.w)

    failures = []
    checks = dict(raw.get("assert") or {})
    _require_keys(checks, {"max_solver_distance"}, "assert")
    if "max_solver_distance" in checks or pot.kind in (
            "free", "inverse_square_V", "aharonov_bohm"):
        other = resolve(f, pot, problem, mesh, solver="green")
        r_loc = min(8.0, 0.5 * problem.r_max)
        dist = h1_local_distance(bundle, other, r_loc)
        rows.append({"kind": "solver_distance", "lhs": dist, "rhs": 1.0,
                     "ratio": dist, **base})
        if "max_solver_distance" in checks:
            tol = float(checks["max_solver_distance"])
            _check("solver_distance", dist <= tol,
                   f"fd/green distance {dist:.3e} > {tol:g}", failures)

    prof_rows = [{k: v[i] for k, v in profile.items()}
                 for i in range(0, mesh.n, max(1, mesh.n // 512))]
    tables.append(("solve_profile.csv", render_csv(prof_rows)))
    plots.append(("solve.svg", svg_line_plot(
        series, xlabel="r", ylabel="|w|", title="reduced mode profiles")))
    return rows, {}, failures, tables, plots


def _cmd_identity(cfg: RunConfig, mapper):
    raw = cfg.raw
    problem = _parse_problem(raw.get("problem"))
    pot = _parse_potential(raw.get("potential"), problem.d)
    specs = _parse_sources(raw.get("f"))
    f = as_rhs(specs)
    section = dict(raw.get("identity") or {})
    _require_keys(section, {"kind", "multiplier", "r_kink", "nodes"},
                  "identity")
    ident = section.get("kind", "morawetz")
    mult_kind = section.get("multiplier", "quadratic")
    node_list = [int(n) for n in section.get("nodes", [1024, 2048, 4096])]
    if not node_list:
        raise ConfigError("empty grid")
    if mult_kind == "quadratic":
        mult = quadratic_multiplier()
    elif mult_kind == "cubic":
        mult = cubic_multiplier()
    elif mult_kind == "piecewise_R":
        mult = piecewise_multiplier(float(section.get("r_kink", 1.0)))
    else:
        raise ConfigError(f"unknown multiplier {mult_kind!r}")

    def one(nodes: int) -> dict:
        mesh = build_mesh(problem, nodes)
        bundle = resolve(f, pot, problem, mesh, solver="fd")
        cuts = source_cuts(specs)
        if ident == "morawetz":
            res = morawetz_residual(bundle, mult, pot, problem,
                                    source_cuts=cuts)
        elif ident == "alpha1":
            res = alpha1_residual(bundle, problem, source_cuts=cuts)
        else:
            raise ConfigError(f"unknown identity {ident!r}")
        row = report_row(res)
        row.update({"nodes": nodes, "lam": problem.lam, "eps": problem.eps,
                    "potential": pot.label or pot.kind, "solver": "fd",
                    "spec": spec_hash(problem)})
        return row

    rows = list(mapper(one, node_list))
    rels = [row["relative"] for row in rows]
    extras = {"nodes": node_list, "relative": rels}
    if len(node_list) >= 2:
        slope = np.polyfit(np.log(node_list), np.log(rels), 1)[0]
        extras["order"] = -float(slope)
        extras["refinement_factors"] = [rels[i] / rels[i + 1]
                                        for i in range(len(rels) - 1)]

    failures = []
    checks = dict(raw.get("assert") or {})
    _require_keys(checks, {"max_relative", "min_refinement_factor"},
                  "assert")
    if "max_relative" in checks:
        tol = float(checks["max_relative"])
        _check(f"identity_{ident}", rels[-1] <= tol,
               f"finest relative residual {rels[-1]:.3e} > {tol:g}",
               failures)
    if "min_refinement_factor" in checks and len(rels) >= 2:
        need = float(checks["min_refinement_factor"])
        worst = min(extras["refinement_factors"])
        _check(f"identity_{ident}_order", worst >= need,
               f"residual improved only {worst:.2f}x per doubling "
               f"(need {need:g}x)", failures)

    plots = [("identity.svg", svg_line_plot(
        [(ident, node_list, rels)], xlabel="nodes", ylabel="relative",
        title="identity residual vs resolution", logx=True, logy=True))]
    return rows, extras, failures, [], plots


def _cmd_estimates(cfg: RunConfig, mapper):
    raw = cfg.raw
    problem = _parse_problem(raw.get("problem"))
    pot = _parse_potential(raw.get("potential"), problem.d)
    f = as_rhs(_parse_sources(raw.get("f")))
    section = dict(raw.get("estimate") or {})
    _require_keys(section, {"kind", "h3_c_max", "r_support", "r_shell",
                            "inner_ball", "n_theta"}, "estimate")
    kind = section.pop("kind", "bp")
    if kind not in ESTIMATE_KINDS:
        raise ConfigError(f"unknown estimate kind {kind!r}")
    extras_in = {k: v for k, v in section.items()}
    if kind == "weighted_w1":
        extras_in["weight"] = _parse_weight(raw.get("weight"), problem.d)

    sweep = dict(raw.get("sweep") or {})
    _require_keys(sweep, {"lam", "eps"}, "sweep")
    lams = [float(x) for x in sweep.get("lam", [problem.lam])]
    epss = [float(x) for x in sweep.get("eps", [problem.eps])]
    if not lams or not epss:
        raise ConfigError("empty grid")
    problems = [problem.with_(lam=lam, eps=eps)
                for lam in lams for eps in epss]
    nodes = raw.get("nodes")
    mesh = build_mesh(problem, int(nodes)) if nodes else None
    solver = str(raw.get("solver", "fd"))

    swp = estimate_sweep(kind, pot, f, problems, extras=extras_in or None,
                         mesh=mesh, solver=solver, mapper=mapper)
    rows = [rep.as_row() for rep in swp.reports]
    extras = {"max_ratio": swp.max_ratio, "dispersion": swp.dispersion,
              "trend_exponent": swp.trend_exponent, "notes": swp.notes}

    failures = []
    checks = dict(raw.get("assert") or {})
    _require_keys(checks, {"max_dispersion", "trend", "max_ratio"}, "assert")
    if "max_dispersion" in checks:
        cap = float(checks["max_dispersion"])
        _check(f"{kind}_dispersion", swp.dispersion <= cap,
               f"ratio dispersion {swp.dispersion:.3f} > {cap:g}", failures)
    if "trend" in checks:
        lo, hi = (float(x) for x in checks["trend"])
        _check(f"{kind}_trend", lo <= swp.trend_exponent <= hi,
               f"trend exponent {swp.trend_exponent:.4f} outside "
               f"[{lo:g}, {hi:g}]", failures)
    if "max_ratio" in checks:
        cap = float(checks["max_ratio"])
        _check(f"{kind}_ratio", swp.max_ratio <= cap,
               f"max ratio {swp.max_ratio:.4f} > {cap:g}", failures)

    series = []
    for eps in epss:
        pts = [(rep.params["lam"], rep.ratio) for rep in swp.reports
               if rep.params["eps"] == eps]
        series.append((f"eps={eps:g}", [p[0] for p in pts],
                       [p[1] for p in pts]))
    plots = [("estimates.svg", svg_line_plot(
        series, xlabel="lam", ylabel="ratio", title=f"{kind} ratio sweep",
        logx=len(lams) > 1, logy=False))]
    return rows, extras, failures, [], plots


def _cmd_hardy(cfg: RunConfig, mapper):
    raw = cfg.raw
    section = dict(raw.get("hardy") or {})
    _require_keys(section, {"d", "mode_cutoff", "r_min", "r_max", "nodes"},
                  "hardy")
    d = int(section.get("d", 3))
    pot = _parse_potential(raw.get("potential"), d)
    cutoff = int(section.get("mode_cutoff", 6))
    mesh = None
    if {"r_min", "r_max", "nodes"} & set(section):
        mesh = geometric_mesh(float(section.get("r_min", 1e-16)),
                              float(section.get("r_max", 1e16)),
                              int(section.get("nodes", 4096)))
    const = hardy_constant(pot, d, mesh=mesh, mode_cutoff=cutoff)
    rows = [{"kind": "hardy_constant", "lhs": const, "rhs": 1.0,
             "ratio": const, "d": d, "potential": pot.label or pot.kind,
             "nodes": mesh.n if mesh else 4096, "solver": "rayleigh",
             "mode_cutoff": cutoff}]
    failures = []
    checks = dict(raw.get("assert") or {})
    _require_keys(checks, {"min", "max", "unbounded"}, "assert")
    if checks.get("unbounded"):
        _check("hardy_unbounded", math.isinf(const),
               f"expected an unbounded constant, got {const:g}", failures)
    if "min" in checks:
        _check("hardy_min", const >= float(checks["min"]),
               f"constant {const:g} < {float(checks['min']):g}", failures)
    if "max" in checks:
        _check("hardy_max", const <= float(checks["max"]),
               f"constant {const:g} > {float(checks['max']):g}", failures)
    return rows, {"hardy_constant": const}, failures, [], []


def _cmd_farfield(cfg: RunConfig, mapper):
    raw = cfg.raw
    problem = _parse_problem(raw.get("problem"))
    pot = _parse_potential(raw.get("potential"), problem.d)
    specs = _parse_sources(raw.get("f"))
    f = as_rhs(specs)
    nodes = int(raw.get("nodes", 2048))
    solver = str(raw.get("solver", "fd"))
    section = dict(raw.get("farfield") or {})
    _require_keys(section, {"radii", "radii_count"}, "farfield")
    mesh = build_mesh(problem, nodes)
    bundle = resolve(f, pot, problem, mesh, solver=solver)
    if "radii" in section:
        wanted = np.asarray([float(x) for x in section["radii"]])
        idx = np.unique(np.searchsorted(mesh.r, wanted).clip(0, mesh.n - 1))
        radii = mesh.r[idx]
    else:
        radii = default_radius_window(mesh,
                                      int(section.get("radii_count", 8)))
    result = cross_section(bundle, f, radii=radii)

    base = {"lam": problem.lam, "eps": problem.eps,
            "potential": pot.label or pot.kind, "nodes": nodes,
            "solver": solver, "spec": spec_hash(problem)}
    rows = []
    for j, mode in enumerate(result.modes):
        rows.append({"kind": "farfield_mode", "mode": mode,
                     "lhs": abs(result.limits[j]) ** 2, "rhs": 1.0,
                     "limit_re": float(np.real(result.limits[j])),
                     "limit_im": float(np.imag(result.limits[j])),
                     "convergence_rate": result.convergence_rate, **base})
    mismatch = abs(result.sphere_mass - result.mass) / max(
        abs(result.mass), 1e-300)
    rows.append({"kind": "mass_identity", "lhs": result.sphere_mass,
                 "rhs": result.mass, "ratio": result.sphere_mass /
                 max(result.mass, 1e-300), "mismatch": mismatch, **base})

    failures = []
    checks = dict(raw.get("assert") or {})
    _require_keys(checks, {"max_mass_mismatch"}, "assert")
    if "max_mass_mismatch" in checks:
        tol = float(checks["max_mass_mismatch"])
        _check("mass_identity", mismatch <= tol,
               f"sphere mass vs resolvent mass differ by {mismatch:.3e} "
               f"> {tol:g}", failures)

    profile = [{"r": float(result.radii[i]),
                **{f"mode{m}_abs": float(abs(result.coefficients[i, j]))
                   for j, m in enumerate(result.modes)}}
               for i in range(result.radii.size)]
    tables = [("farfield_profile.csv", render_csv(profile))]
    series = [(f"mode {m}", result.radii,
               np.abs(result.coefficients[:, j]))
              for j, m in enumerate(result.modes)]
    plots = [("farfield.svg", svg_line_plot(
        series, xlabel="r", ylabel="|F|", title="far-field coefficients",
        logx=True))]
    extras = {"mass": result.mass, "sphere_mass": result.sphere_mass,
              "mismatch": mismatch,
              "convergence_rate": result.convergence_rate}
    return rows, extras, failures, tables, plots


def _cmd_spectral(cfg: RunConfig, mapper):
    raw = cfg.raw
    problem = _parse_problem(raw.get("problem"))
    pot = _parse_potential(raw.get("potential"), problem.d)
    f = as_rhs(_parse_sources(raw.get("f")))
    section = dict(raw.get("spectral") or {})
    _require_keys(section, {"lo", "hi", "count", "quadrature",
                            "coverage_threshold"}, "spectral")
    if not {"lo", "hi", "count"} <= set(section):
        raise ConfigError("spectral needs lo/hi/count")
    lams = _log_grid(section)
    if lams.size < 4:
        raise ConfigError("empty grid")
    quad = str(section.get("quadrature", "spline"))
    threshold = float(section.get("coverage_threshold", 0.98))
    solver = str(raw.get("solver", "fd"))

    mesh = build_mesh(problem, 2048)
    target = weighted_l2(decompose_rhs(f, pot, problem, mesh), 0.0, mesh)
    caught: list[str] = []
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        total = spectral_reconstruction(
            pot, f, lams, quadrature=quad, problem_template=problem,
            coverage_threshold=threshold, solver=solver, mapper=mapper)
        caught = [str(w.message) for w in rec
                  if issubclass(w.category, CoverageWarning)]
    ratio = total / target if target > 0 else 0.0
    rows = [{"kind": "spectral_reconstruction", "lhs": total, "rhs": target,
             "ratio": ratio, "grid_lo": float(lams[0]),
             "grid_hi": float(lams[-1]), "grid_count": int(lams.size),
             "quadrature": quad, "potential": pot.label or pot.kind,
             "nodes": 2048, "solver": solver, "spec": spec_hash(problem),
             "notes": "; ".join(caught)}]
    extras = {"coverage_warnings": caught, "ratio": ratio}

    failures = []
    checks = dict(raw.get("assert") or {})
    _require_keys(checks, {"ratio", "expect_coverage_warning"}, "assert")
    if "ratio" in checks:
        lo, hi = (float(x) for x in checks["ratio"])
        _check("spectral_ratio", lo <= ratio <= hi,
               f"reconstructed/actual {ratio:.6f} outside [{lo:g}, {hi:g}]",
               failures)
    if "expect_coverage_warning" in checks:
        want = bool(checks["expect_coverage_warning"])
        _check("spectral_coverage", bool(caught) == want,
               "coverage warning state != expected", failures)

    plots = [("spectral.svg", svg_line_plot(
        [("reconstruction ratio", [float(lams[0]), float(lams[-1])],
          [ratio, ratio])], xlabel="lam window", ylabel="ratio",
        title="spectral reconstruction", logx=True))]
    return rows, extras, failures, [], plots


def _cmd_evolve(cfg: RunConfig, mapper):
    raw = cfg.raw
    problem = _parse_problem(raw.get("problem"))
    pot = _parse_potential(raw.get("potential"), problem.d)
    weight = _parse_weight(raw.get("weight"), problem.d)
    f = as_rhs(_parse_sources(raw.get("f"))) if raw.get("f") or \
        "forcing" not in raw else None
    forcing = as_rhs(_parse_sources(raw["forcing"])) \
        if "forcing" in raw else None
    section = dict(raw.get("evolve") or {})
    _require_keys(section, {"T", "quadrature"}, "evolve")
    horizon = float(section.get("T", 3.0))
    quad = str(section.get("quadrature", "trapezoid"))
    nodes = int(raw.get("nodes", 1024))
    mesh = build_mesh(problem, nodes)
    rep = smoothing_check(pot, weight, f, horizon, quadrature=quad,
                          problem_template=problem, mesh=mesh,
                          forcing=forcing)
    rows = [rep.as_row()]
    p = rep.params
    failures = []
    checks = dict(raw.get("assert") or {})
    _require_keys(checks, {"max_saturation", "require_wall_free",
                           "max_ratio"}, "assert")
    if "max_saturation" in checks:
        cap = float(checks["max_saturation"])
        _check("smoothing_saturation", p["saturation"] <= cap,
               f"I(2T)-I(T) = {p['saturation']:.4f} I(T) > {cap:g} I(T)",
               failures)
    if checks.get("require_wall_free"):
        _check("smoothing_window", not p["wall_reflection"],
               f"2T beyond the ballistic crossing time "
               f"{p.get('t_ballistic', 0.0):.2f}", failures)
    if "max_ratio" in checks:
        cap = float(checks["max_ratio"])
        _check("smoothing_ratio", rep.ratio <= cap,
               f"I(T)/rhs = {rep.ratio:.4f} > {cap:g}", failures)
    horizons = [0.25 * horizon, 0.5 * horizon, horizon, 2.0 * horizon]
    curve = [p.get("i_quarter", 0.0), p.get("i_half", 0.0),
             p.get("i_one", 0.0), p.get("i_two", 0.0)]
    plots = [("evolve.svg", svg_line_plot(
        [("I(t)", horizons, curve)], xlabel="t", ylabel="I",
        title="space-time weighted density"))]
    return rows, {"saturation": p["saturation"]}, failures, [], plots


def _cmd_report(cfg: RunConfig, mapper):
    section = dict(cfg.raw.get("report") or {})
    _require_keys(section, {"input", "formats"}, "report")
    if "input" not in section:
        raise ConfigError("report needs an input summary.json path")
    try:
        doc = json.loads(Path(section["input"]).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read input summary: {exc}") from exc
    rows = doc.get("reports", [])
    formats = section.get("formats", ["csv"])
    tables, plots = [], []
    for fmt in formats:
        if fmt == "csv":
            tables.append(("report.csv", render_csv(rows)))
        elif fmt == "svg":
            xs = list(range(len(rows)))
            ys = [row.get("ratio", row.get("relative", 0.0)) for row in rows]
            ys = [y if isinstance(y, (int, float)) else 0.0 for y in ys]
            plots.append(("report.svg", svg_line_plot(
                [("ratio", xs, ys)], xlabel="row", ylabel="ratio",
                title="report rows")))
        else:
            raise ConfigError(f"unknown report format {fmt!r}")
    return rows, {"source": str(section["input"])}, [], tables, plots


_HANDLERS = {
    "solve": _cmd_solve,
    "identity": _cmd_identity,
    "estimates": _cmd_estimates,
    "hardy": _cmd_hardy,
    "farfield": _cmd_farfield,
    "spectral": _cmd_spectral,
    "evolve": _cmd_evolve,
    "report": _cmd_report,
}


def run(config: RunConfig) -> int:
    """Execute one config; write artifacts; return the exit status."""
    pool = None
    try:
        if config.threads > 1:
            pool = ThreadPoolExecutor(max_workers=config.threads)
            mapper = pool.map
        else:
            mapper = map
        try:
            rows, extras, failures, tables, plots = _HANDLERS[
                config.command](config, mapper)
        except (ConfigError, SpecError) as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 2
        except HypothesisError as exc:
            print(f"FAIL hypothesis_gate: {exc}", file=sys.stderr)
            return 1
    finally:
        if pool is not None:
            pool.shutdown()

    config.out.mkdir(parents=True, exist_ok=True)
    rows = canonical_rows(rows)
    doc = summary_document(config.command, config.raw, rows, failures,
                           config.seed, extras)
    (config.out / "summary.json").write_bytes(render_json(doc))
    (config.out / f"{config.command}.csv").write_bytes(render_csv(rows))
    for name, data in tables:
        (config.out / name).write_bytes(data)
    for name, text in plots:
        (config.out / name).write_text(text)

    if failures:
        print(f"FAIL {failures[0]}", file=sys.stderr)
        for extra in failures[1:]:
            print(f"     {extra}", file=sys.stderr)
        return 1
    print(f"{config.command}: {len(rows)} report row(s), all assertions "
          f"passed -> {config.out}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="maghelm",
        description="singular electromagnetic Helmholtz laboratory")
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd in COMMANDS:
        p = sub.add_parser(cmd)
        p.add_argument("--config", required=True)
        p.add_argument("--out", default=None)
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--seed", type=int, default=None)
    args = parser.parse_args(argv)
    threads = args.threads
    if threads is None:
        threads = int(os.environ.get("MAGHELM_THREADS", "1"))
    try:
        config = parse_config(args.config, command=args.command,
                              out=args.out, seed=args.seed, threads=threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
