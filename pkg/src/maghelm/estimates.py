"""Weighted resolvent inequalities: ratio verification and sharp constants.

The theorems under test give inequalities LHS <= C RHS with constants
that are never written down (only the Hardy constant is explicit), so
verification is property-based: ratios must be finite, stable under
truncation, and free of trends across the spectral parameter.  Each
verify_* call solves the resolvent problem, evaluates both functionals
and returns an EstimateReport; sweep drivers aggregate ratio statistics
over (lam, eps) grids.

Sharp constants (Hardy quotients, Sobolev-weight constants, operator
norms of the weighted resolvent) come from power iteration on the
associated generalized eigenproblems; discrete values are lower bounds
that improve as the mesh widens and refines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import (EstimateReport, ModeIndex, ProblemSpec, RadialMesh,
                    SpecError, build_mesh, geometric_mesh, spec_hash)
from .norms import (WeightSpec, ah_dual, phase_shifted_density, sphere_l2,
                    weighted_l2)
from .potentials import (HypothesisError, PotentialSpec,
                         analytic_hypothesis_gate,
                         electric_profile_derivative, tangential_profile)
from .radial import ModeSolution, decompose_rhs, resolve
from .varforms import max_rayleigh, mode_form_banded, weighted_mass_banded

__all__ = [
    "ESTIMATE_KINDS",
    "SweepResult",
    "verify_estimate",
    "estimate_sweep",
    "hardy_constant",
    "operator_norm_sweep",
    "verify_w1",
    "sobolev_weight_constant",
]

ESTIMATE_KINDS = (
    "thm1_alpha0",
    "thm1_large_eps",
    "bp",
    "src",
    "morrey",
    "surface",
    "weighted_w1",
    "grad_abs2",
)


@dataclass
class SweepResult:
    """Per-point reports over a (lam, eps) grid plus ratio statistics."""

    grid: list
    reports: list
    max_ratio: float
    dispersion: float          # max ratio / min ratio
    trend_exponent: float      # slope of log ratio against log lam
    notes: str = ""

    def __post_init__(self):
        if len(self.grid) != len(self.reports):
            raise SpecError("sweep grid and reports disagree in length")


def _gate_h1_h2(pot: PotentialSpec) -> None:
    ok, why = analytic_hypothesis_gate(pot)
    if not ok:
        raise HypothesisError(f"smallness hypothesis fails: {why}")


def _gate_h3(pot: PotentialSpec, mesh: RadialMesh, c_max: float) -> None:
    """Cubic-decay gate: r^3 (|B_tau| + |d_r V|) must stay below c_max."""
    dv = electric_profile_derivative(pot)
    bt = tangential_profile(pot)
    if dv is None and bt is None:
        return
    r = mesh.r[mesh.r >= 1.0]
    prof = np.zeros_like(r)
    if dv is not None:
        prof += np.abs(dv(r))
    if bt is not None:
        prof += np.abs(bt(r))
    c_vals = r ** 3 * prof
    bad = c_vals > c_max
    if np.any(bad):
        raise HypothesisError(
            f"(H3) violated at r = {r[np.argmax(bad)]:.4g}: "
            f"r^3 (|B_tau| + |dV/dr|) = {c_vals[np.argmax(bad)]:.4g} "
            f"exceeds {c_max:g}")


def _mode_density(sol: ModeSolution, kind: str, lam: float) -> np.ndarray:
    r = sol.mesh.r
    if kind == "u2":
        return np.abs(sol.w) ** 2
    if kind == "grad":
        return (np.abs(sol.covariant_dw) ** 2
                + sol.op.lam_mag * np.abs(sol.w / r) ** 2)
    if kind == "phase":
        return phase_shifted_density(sol, lam, sol.problem.sign)
    raise SpecError(f"unknown density {kind!r}")


def _sup_weighted_tail(bundle: Sequence[ModeSolution], kind: str,
                       lam: float) -> float:
    """max over mesh radii R >= 1 of R * int_{|x| >= R} density."""
    mesh = bundle[0].mesh
    dens = np.zeros(mesh.n)
    for sol in bundle:
        dens += _mode_density(sol, kind, lam)
    cum = mesh.cumulative(dens)
    tail = np.real(cum[-1] - cum)
    mask = mesh.r >= 1.0
    return float(np.max(mesh.r[mask] * tail[mask]))


def _sup_local_average(bundle: Sequence[ModeSolution], kind: str,
                       lam: float, r0: float = 1.0) -> float:
    """|||density|||_{r0}^2 : sup_{R > r0} R^{-1} int_{<=R} density."""
    mesh = bundle[0].mesh
    dens = np.zeros(mesh.n)
    for sol in bundle:
        dens += _mode_density(sol, kind, lam)
    cum = np.real(mesh.cumulative(dens))
    mask = mesh.r > r0
    return float(np.max(cum[mask] / mesh.r[mask]))


def verify_estimate(kind: str, pot: PotentialSpec, f, problem: ProblemSpec,
                    extras: dict | None = None,
                    mesh: RadialMesh | None = None,
                    solver: str = "fd") -> EstimateReport:
    """Solve, evaluate the LHS/RHS pair of one inequality, report the ratio.

    extras per kind: src takes h3_c_max (decay smallness threshold,
    default 1.0); grad_abs2 takes r_support (source support radius R0)
    and r_shell (annulus inner radius R >= 1, default 1) and optional
    inner_ball=True for the small-ball variant; weighted_w1 takes
    weight (a WeightSpec) and defers to verify_w1.
    """
    if kind not in ESTIMATE_KINDS:
        raise SpecError(f"unknown estimate kind {kind!r}; "
                        f"choose from {ESTIMATE_KINDS}")
    extras = dict(extras or {})
    if kind == "weighted_w1":
        if "weight" not in extras:
            raise SpecError("weighted_w1 needs extras['weight'] (a WeightSpec)")
        return verify_w1(pot, extras.pop("weight"), f, problem, mesh=mesh,
                         solver=solver)

    if mesh is None:
        mesh = build_mesh(problem)
    lam, eps = problem.lam, problem.eps
    _gate_h1_h2(pot)
    if kind == "thm1_alpha0":
        if not 0.0 < eps < lam:
            raise SpecError(f"the phase-shifted gradient bound needs "
                            f"0 < eps < lam, got lam={lam}, eps={eps}")
    if kind == "thm1_large_eps":
        if not 0.0 < lam <= eps:
            raise SpecError(f"the large-absorption bound needs "
                            f"0 < lam <= eps, got lam={lam}, eps={eps}")
    if kind == "src":
        if lam <= 0.0:
            raise SpecError("the radiation estimate needs lam > 0")
        _gate_h3(pot, mesh, float(extras.get("h3_c_max", 1.0)))
    if kind in ("morrey", "surface") and lam <= 0.0:
        raise SpecError("this estimate needs lam > 0")

    bundle = resolve(f, pot, problem, mesh, solver=solver)
    fields = decompose_rhs(f, pot, problem, mesh)
    params = {"lam": lam, "eps": eps, "sign": problem.sign,
              "potential": pot.label or pot.kind, "nodes": mesh.n,
              "solver": solver, "spec": spec_hash(problem)}

    if kind == "thm1_alpha0":
        lhs = _total(bundle, "phase", lam)
        rhs = weighted_l2(fields, 2.0, mesh)
    elif kind == "thm1_large_eps":
        lhs = _total(bundle, "grad", lam)
        rhs = weighted_l2(fields, 2.0, mesh)
    elif kind == "bp":
        lhs = weighted_l2(bundle, -2.0)
        rhs = weighted_l2(fields, 2.0, mesh)
    elif kind == "src":
        lhs = _sup_weighted_tail(bundle, "phase", lam)
        n1 = ah_dual(fields, 1.0, mesh)
        rhs = weighted_l2(fields, 3.0, mesh) + n1 ** 2
        params["n1"] = n1
    elif kind == "morrey":
        tang = sum(float(np.real(s.mesh.integrate(
            s.op.lam_mag * np.abs(s.w) ** 2 / s.mesh.r ** 3)))
            for s in bundle)
        lhs = (lam * _sup_local_average(bundle, "u2", lam)
               + _sup_local_average(bundle, "grad", lam) + tang)
        rhs = (1.0 + eps) * ah_dual(fields, 1.0, mesh) ** 2
    elif kind == "surface":
        radii = mesh.r[mesh.r >= 1.0]
        vals = [(1.0 + eps * rr / math.sqrt(lam)) * sphere_l2(bundle, rr)
                for rr in radii]
        lhs = float(np.max(vals))
        n1 = ah_dual(fields, 1.0, mesh)
        wf = sum(float(np.real(mesh.integrate(
            (1.0 + eps * mesh.r) * mesh.r ** 3
            * np.abs(fl.values / mesh.r ** problem.beta) ** 2
            * mesh.r ** (problem.d - 1)))) for fl in fields)
        rhs = wf + (1.0 + eps) * n1 ** 2
        params["n1"] = n1
    elif kind == "grad_abs2":
        lhs, rhs = _grad_abs2_pair(bundle, fields, problem, mesh, extras)
        params.update({k: extras[k] for k in ("r_support", "r_shell")
                       if k in extras})
    else:  # pragma: no cover
        raise SpecError(kind)
    return EstimateReport(kind, float(lhs), float(rhs), params)


def _total(bundle: Sequence[ModeSolution], kind: str, lam: float) -> float:
    total = 0.0
    for sol in bundle:
        total += float(np.real(sol.mesh.integrate(
            _mode_density(sol, kind, lam))))
    return total


def _grad_abs2_pair(bundle, fields, problem: ProblemSpec, mesh: RadialMesh,
                    extras: dict) -> tuple[float, float]:
    """int_{R<=|x|<=2R} |grad |u|^2| against the support-scaled source norm.

    The angular dependence is reconstructed on a Gauss-Legendre grid in
    cos(theta) from the zonal mode coefficients (d = 3 only); the
    derivative of the Legendre polynomials uses the standard recurrence.
    """
    if problem.d != 3:
        raise SpecError("the |grad|u|^2| functional is assembled for d = 3")
    if "r_support" not in extras:
        raise SpecError("grad_abs2 needs extras['r_support'] (source "
                        "support radius)")
    r0 = float(extras["r_support"])
    rs = float(extras.get("r_shell", 1.0))
    if rs < 1.0:
        raise SpecError("shell radius must satisfy R >= 1")
    for fl in fields:
        supp = np.abs(fl.values) > 0.0
        if np.any(supp) and mesh.r[supp].max() > r0 * (1.0 + 1e-12):
            raise SpecError(f"source support exceeds the declared radius "
                            f"{r0:g}")

    n_theta = int(extras.get("n_theta", 128))
    x, gl_w = np.polynomial.legendre.leggauss(n_theta)
    modes = [s.op.mode.index for s in bundle]
    lmax = max(modes)
    # normalized zonal harmonics: Y_l = sqrt((2l+1)/4pi) P_l(cos theta)
    P = np.zeros((lmax + 2, n_theta))
    P[0] = 1.0
    if lmax >= 0:
        P[1] = x
    for ell in range(1, lmax + 1):
        P[ell + 1] = ((2 * ell + 1) * x * P[ell] - ell * P[ell - 1]) / (ell + 1)
    dP = np.zeros((lmax + 1, n_theta))    # dP_l/dx
    for ell in range(1, lmax + 1):
        dP[ell] = ell * (x * P[ell] - P[ell - 1]) / (x ** 2 - 1.0)

    sub = (mesh.r >= rs) & (mesh.r <= 2.0 * rs)
    if np.count_nonzero(sub) < 8:
        raise SpecError("annulus contains too few mesh nodes")
    rr = mesh.r[sub]
    wts = mesh.weights[sub]
    u = np.zeros((rr.size, n_theta), dtype=complex)
    du = np.zeros_like(u)
    ut = np.zeros_like(u)
    for sol in bundle:
        ell = sol.op.mode.index
        cl = math.sqrt((2 * ell + 1) / (4.0 * math.pi))
        u += np.outer(sol.u[sub], cl * P[ell])
        du += np.outer(sol.du[sub], cl * P[ell])
        # d/dtheta Y_l = -sin(theta) Y_l'(x)
        ut += np.outer(sol.u[sub], -np.sqrt(1.0 - x ** 2) * cl * dP[ell])
    dr_u2 = 2.0 * np.real(np.conj(u) * du)
    dt_u2 = 2.0 * np.real(np.conj(u) * ut)
    grad = np.sqrt(dr_u2 ** 2 + (dt_u2 / rr[:, None]) ** 2)
    lhs = 2.0 * math.pi * float(
        np.sum(wts[:, None] * gl_w[None, :] * grad * rr[:, None] ** 2))

    f_l2 = weighted_l2(fields, 0.0, mesh)
    m = min(r0, 1.0)
    lam = problem.lam
    if extras.get("inner_ball"):
        rhs = m / math.sqrt(lam) * f_l2
    else:
        rhs = math.sqrt((r0 ** 3 + m) * m / lam) * f_l2
    return lhs, rhs


def estimate_sweep(kind: str, pot: PotentialSpec, f,
                   problems: Sequence[ProblemSpec],
                   extras: dict | None = None,
                   mesh: RadialMesh | None = None,
                   solver: str = "fd",
                   mapper=None) -> SweepResult:
    """verify_estimate over a grid; collects ratio statistics.

    ``mapper`` may be an order-preserving parallel map (grid points are
    independent); the reduction below is sequential either way, so the
    result does not depend on the mapper.
    """
    problems = list(problems)
    if not problems:
        raise SpecError("empty sweep grid")
    if mapper is None:
        mapper = map
    reports = list(mapper(
        lambda p: verify_estimate(kind, pot, f, p, extras=dict(extras)
                                  if extras else None, mesh=mesh,
                                  solver=solver),
        problems))
    return _summarize([(p.lam, p.eps) for p in problems], reports)


def _summarize(grid, reports, notes: str = "") -> SweepResult:
    ratios = np.array([r.ratio for r in reports])
    lams = np.array([g[0] for g in grid], dtype=float)
    if np.all(ratios > 0.0) and np.unique(lams).size > 1:
        slope = float(np.polyfit(np.log(lams), np.log(ratios), 1)[0])
    else:
        slope = 0.0
    disp = float(np.max(ratios) / max(np.min(ratios), 1e-300))
    return SweepResult(list(grid), list(reports), float(np.max(ratios)),
                       disp, slope, notes)


# ---------------------------------------------------------------------------
# sharp constants


def _hardy_mode_mus(pot: PotentialSpec, d: int,
                    mode_cutoff: int) -> list[float]:
    if d == 2:
        flux = pot.flux if pot.kind == "aharonov_bohm" else 0.0
        return sorted({(m + flux) ** 2 - 0.25
                       for m in range(-mode_cutoff, mode_cutoff + 1)})
    return sorted({(ell + 0.5) ** 2 - 0.25
                   for ell in range(0, mode_cutoff + 1)})


def hardy_constant(pot: PotentialSpec, d: int,
                   mesh: RadialMesh | None = None,
                   mode_cutoff: int = 6) -> float:
    """Best discrete constant in int |u|^2/|x|^2 <= C int |grad_A u|^2.

    Per mode the quotient is a generalized eigenvalue of the weighted
    mass against the mode Dirichlet form; the constant is the max over
    modes, attained at the smallest effective index.  Modes with index
    nu = 0 make the quotient unbounded (no inequality); this is reported
    as math.inf, which covers the free plane and integer flux lines.
    """
    if d not in (2, 3):
        raise SpecError(f"d must be 2 or 3, got {d}")
    if d == 2 and pot.kind not in ("free", "aharonov_bohm"):
        raise SpecError("the planar constant is computed for flux lines")
    if mesh is None:
        mesh = geometric_mesh(1e-16, 1e16, 4096)
    mus = _hardy_mode_mus(pot, d, mode_cutoff)
    if min(mus) < -0.25 + 1e-12:
        return math.inf
    mass = weighted_mass_banded(mesh, lambda r: 1.0 / r ** 2)
    best = 0.0
    x0 = None
    for mu in mus:
        ab = mode_form_banded(mesh, mu)
        res = max_rayleigh(ab, mass, tol=1e-8, x0=x0)
        x0 = res.vector
        best = max(best, res.value)
    return best


def sobolev_weight_constant(weight: WeightSpec, d: int,
                            mesh: RadialMesh | None = None) -> float:
    """Best constant of int |g|^2 w <= c(w) int |grad g|^2 (radial w).

    Computed on the lowest angular mode, where the quotient is largest
    for radial weights.  The refinement step also extends the mesh
    toward the origin (the discrete problems approach the continuum
    one), so weights that beat the Hardy singularity, for which the
    quotient is unbounded, keep growing and are rejected.
    """
    if weight.radial is None:
        raise SpecError("the Sobolev gate needs a radial weight profile")
    if mesh is None:
        mesh = geometric_mesh(1e-6, 1e6, 2048)
    beta = (d - 1) / 2.0
    mu = beta * (beta - 1.0)

    def profile(r: np.ndarray) -> np.ndarray:
        wv = np.abs(np.asarray(weight.radial(r), dtype=float))
        if not np.all(np.isfinite(wv)):
            raise SpecError("weight must be finite on r > 0")
        return wv

    vals = []
    for m in (mesh, geometric_mesh(mesh.r_min * 1e-4, mesh.r_max,
                                   mesh.n + mesh.n // 4)):
        if np.max(profile(m.r)) <= 0.0:
            raise SpecError("degenerate weight")
        ab = mode_form_banded(m, mu)
        res = max_rayleigh(ab, weighted_mass_banded(m, profile), tol=1e-8)
        vals.append(res.value)
    base, fine = vals
    if not math.isfinite(fine) or fine > 1.25 * base + 1e-30:
        raise HypothesisError(
            f"weight {weight.label or 'w'} is not a Sobolev weight: the "
            f"discrete quotient grows from {base:.4g} to {fine:.4g} "
            f"under refinement")
    return max(base, fine)


# ---------------------------------------------------------------------------
# weighted resolvent operator norms


def _weighted_resolvent_norm(pot: PotentialSpec, problem: ProblemSpec,
                             mesh: RadialMesh, mode: ModeIndex,
                             max_iter: int, tol: float,
                             x0: np.ndarray | None):
    """Power iteration for || |x|^{-1} R(z) |x|^{-1} || on one mode.

    Adjoint applications solve on the conjugate branch, so the iteration
    runs on the normal operator T*T; the returned vector seeds warm
    starts across a sweep grid.
    """
    if max_iter < 1:
        raise SpecError("no iterations allowed for the norm estimate")
    from .radial import effective_index, solve_mode_fd
    from .model import RadialField

    op = effective_index(pot, mode, problem)
    flipped = problem.with_(sign="minus" if problem.sign == "plus"
                            else "plus")
    r = mesh.r
    qw = mesh.weights

    def apply(vec: np.ndarray, prob: ProblemSpec) -> np.ndarray:
        g = RadialField(mode, vec / r, reduced=True)
        sol = solve_mode_fd(op, g, prob, mesh)
        return sol.w / r

    x = np.ones(mesh.n, dtype=complex) if x0 is None else x0.astype(complex)
    x /= math.sqrt(float(np.sum(qw * np.abs(x) ** 2)))
    norm = 0.0
    converged = False
    for it in range(1, max_iter + 1):
        y = apply(x, problem)
        # x is normalized, so <x, T*T x> = ||T x||^2
        new_norm = math.sqrt(float(np.sum(qw * np.abs(y) ** 2)))
        z = apply(y, flipped)
        nz = math.sqrt(float(np.sum(qw * np.abs(z) ** 2)))
        if nz == 0.0:
            return 0.0, x, True, it
        z /= nz
        if it > 1 and abs(new_norm - norm) <= tol * max(new_norm, 1e-300):
            norm, x, converged = new_norm, z, True
            break
        norm, x = new_norm, z
    return norm, x, converged, it


def operator_norm_sweep(pot: PotentialSpec,
                        problems: Sequence[ProblemSpec],
                        mesh: RadialMesh | None = None,
                        modes: Sequence[int] = (0,),
                        max_iter: int = 30,
                        tol: float = 1e-4) -> SweepResult:
    """Norm of g -> |x|^{-1} R(lam +/- i eps)(|x|^{-1} g) over a grid."""
    problems = list(problems)
    if not problems:
        raise SpecError("empty sweep grid")
    _gate_h1_h2(pot)
    if mesh is None:
        mesh = build_mesh(problems[0], 2048)
    reports = []
    fails = []
    warm = {}
    for prob in problems:
        best = 0.0
        for m in modes:
            mode = ModeIndex(prob.d, m)
            norm, vec, ok, its = _weighted_resolvent_norm(
                pot, prob, mesh, mode, max_iter, tol, warm.get(m))
            warm[m] = vec
            best = max(best, norm)
            if not ok:
                fails.append((prob.lam, prob.eps, m, its))
        reports.append(EstimateReport(
            "operator_norm", best, 1.0,
            {"lam": prob.lam, "eps": prob.eps, "sign": prob.sign,
             "potential": pot.label or pot.kind, "nodes": mesh.n,
             "solver": "fd", "spec": spec_hash(prob)}))
    notes = ""
    if fails:
        notes = f"power iteration hit the cap at {len(fails)} grid points"
    return _summarize([(p.lam, p.eps) for p in problems], reports, notes)


# ---------------------------------------------------------------------------
# Sobolev-weighted a-priori estimate


def verify_w1(pot: PotentialSpec, weight: WeightSpec, f,
              problem: ProblemSpec, mesh: RadialMesh | None = None,
              solver: str = "fd") -> EstimateReport:
    """int |u|^2 w^{1/2}/|x| <= C int |f|^2 |x|/w^{1/2} for Sobolev w."""
    _gate_h1_h2(pot)
    c_w = sobolev_weight_constant(weight, problem.d)
    if mesh is None:
        mesh = build_mesh(problem)
    wv = np.abs(np.asarray(weight.radial(mesh.r), dtype=float))
    if np.max(wv) <= 0.0:
        raise SpecError("degenerate weight")
    bundle = resolve(f, pot, problem, mesh, solver=solver)
    fields = decompose_rhs(f, pot, problem, mesh)
    root = np.sqrt(wv)
    lhs = sum(float(np.real(s.mesh.integrate(
        np.abs(s.w) ** 2 * root / mesh.r))) for s in bundle)
    rhs = sum(float(np.real(mesh.integrate(
        np.abs(fl.values) ** 2 * mesh.r / root))) for fl in fields)
    return EstimateReport(
        "weighted_w1", lhs, rhs,
        {"lam": problem.lam, "eps": problem.eps, "sign": problem.sign,
         "potential": pot.label or pot.kind, "weight": weight.label or "w",
         "sobolev_constant": c_w, "nodes": mesh.n, "solver": solver,
         "spec": spec_hash(problem)})
