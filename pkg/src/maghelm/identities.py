"""Exact multiplier identities assembled on computed solutions.

Each angular mode of the resolvent problem satisfies, in half-line
coordinates w = r^beta u,

    w'' - (mu/r^2) w + V(r) w + z w = g,        z = lam +/- i eps,

with mu the magnetic angular constant of the mode and V the full
electric profile (inverse-square parts unfolded from the effective
index, which cross-checks the solver's folding).  Multiplying by
conjugates of psi' w', psi'' w, or a test function phi and integrating
by parts yields identities that hold exactly for the continuum solution
once the truncation boundary terms are kept.  Their discrete residuals
therefore measure nothing but discretization error, which makes them
the sharpest correctness probes in the package.

Quadrature is a Hermite-corrected trapezoid rule (fourth order on
smooth integrands); integrands with a node-aligned kink (piecewise
multipliers, compactly supported sources) are integrated piecewise so
the order is kept.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .model import ProblemSpec, RadialMesh, SpecError
from .potentials import (PotentialSpec, electric_profile,
                         electric_profile_derivative, tangential_profile)
from .radial import ModeSolution

__all__ = [
    "MultiplierSpec",
    "MultiplierData",
    "IdentityResidual",
    "quadratic_multiplier",
    "cubic_multiplier",
    "piecewise_multiplier",
    "custom_multiplier",
    "multiplier_eval",
    "morawetz_residual",
    "alpha1_residual",
    "symmetric_antisymmetric_residuals",
]

MULTIPLIER_KINDS = ("quadratic", "cubic", "piecewise_R", "custom")


@dataclass(frozen=True)
class MultiplierSpec:
    """Radial multiplier psi through its derivative ladder.

    quadratic: psi = r^2/2; cubic: psi = r^3/3; piecewise_R: psi' = r^2
    below the kink radius and R1 r beyond it (continuous, distributional
    psi''); custom: psi' given as a callable or samples, psi'' optional
    (finite differences otherwise, which costs two orders of residual).
    """

    kind: str
    r_kink: float = 0.0
    psi_p: Callable | np.ndarray | None = None
    psi_pp: Callable | np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in MULTIPLIER_KINDS:
            raise SpecError(f"unknown multiplier kind {self.kind!r}")
        if self.kind == "piecewise_R" and not self.r_kink > 0.0:
            raise SpecError("piecewise multiplier needs a positive kink radius")
        if self.kind == "custom" and self.psi_p is None:
            raise SpecError("custom multiplier needs psi' samples")


def quadratic_multiplier() -> MultiplierSpec:
    return MultiplierSpec("quadratic")


def cubic_multiplier() -> MultiplierSpec:
    return MultiplierSpec("cubic")


def piecewise_multiplier(r_kink: float) -> MultiplierSpec:
    return MultiplierSpec("piecewise_R", r_kink=float(r_kink))


def custom_multiplier(psi_p, psi_pp=None) -> MultiplierSpec:
    return MultiplierSpec("custom", psi_p=psi_p, psi_pp=psi_pp)


@dataclass
class MultiplierData:
    """Sampled derivative ladder of a multiplier on one mesh."""

    psi_p: np.ndarray
    psi_pp: np.ndarray
    psi_p_over_r: np.ndarray
    d_psi_p_over_r: np.ndarray
    kink_index: int | None = None
    r_kink: float | None = None

    @property
    def cuts(self) -> tuple[int, ...]:
        return () if self.kink_index is None else (self.kink_index,)


def multiplier_eval(m: MultiplierSpec, mesh: RadialMesh) -> MultiplierData:
    """Sample psi', psi'', psi'/r and (psi'/r)' on the mesh.

    The piecewise kink is snapped to the nearest node so the identity
    can be integrated piecewise; at the kink node the distributional
    value is the two-sided average.  The growth bound |psi'(r)| <= r on
    r <= 1 is enforced for every kind.
    """
    r = mesh.r
    if m.kind == "quadratic":
        data = MultiplierData(r.copy(), np.ones_like(r), np.ones_like(r),
                              np.zeros_like(r))
    elif m.kind == "cubic":
        data = MultiplierData(r ** 2, 2.0 * r, r.copy(), np.ones_like(r))
    elif m.kind == "piecewise_R":
        if not (mesh.r_min < m.r_kink < mesh.r_max):
            raise SpecError("piecewise kink must lie inside the mesh")
        idx = mesh.nearest_node(m.r_kink)
        s = float(r[idx])
        psi_p = np.where(r <= s, r ** 2, s * r)
        psi_pp = np.where(r <= s, 2.0 * r, s)
        psi_pp[idx] = 1.5 * s
        over = np.where(r <= s, r, s)
        dover = np.where(r <= s, 1.0, 0.0)
        dover[idx] = 0.5
        data = MultiplierData(psi_p, psi_pp, over, dover, idx, s)
    else:
        psi_p = m.psi_p(r) if callable(m.psi_p) else np.asarray(m.psi_p,
                                                                dtype=float)
        if psi_p.shape != r.shape:
            raise SpecError("custom psi' samples must match the mesh")
        _check_continuity(psi_p, r)
        if m.psi_pp is not None:
            psi_pp = m.psi_pp(r) if callable(m.psi_pp) else np.asarray(
                m.psi_pp, dtype=float)
        else:
            psi_pp = np.gradient(psi_p, r, edge_order=2)
        over = psi_p / r
        data = MultiplierData(psi_p, psi_pp, over,
                              np.gradient(over, r, edge_order=2))

    low = r <= 1.0
    if np.any(np.abs(data.psi_p[low]) > r[low] * (1.0 + 1e-9)):
        raise SpecError("multiplier must satisfy |psi'(r)| <= r below r = 1")
    return data


def _check_continuity(psi_p: np.ndarray, r: np.ndarray) -> None:
    # a genuine step makes the divided difference blow up relative to the
    # neighbouring cells; smooth curvature variation does not (the mesh
    # cell size spans decades, so absolute diffs are no yardstick)
    h = np.diff(r)
    diffs = np.abs(np.diff(psi_p))
    slopes = diffs / h
    scale = float(np.max(np.abs(psi_p))) + 1e-300
    left = np.empty_like(slopes)
    right = np.empty_like(slopes)
    left[0], left[1:] = slopes[1], slopes[:-1]
    right[-1], right[:-1] = slopes[-2], slopes[1:]
    local = np.maximum(left, right)
    bad = (slopes > 100.0 * local + 1e-12) & (diffs > 1e-6 * scale)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise SpecError(f"custom psi' jumps at r = {r[i]:.6g}; the identity "
                        "requires a continuous multiplier derivative")


# ---------------------------------------------------------------------------
# residual containers and quadrature


@dataclass
class IdentityResidual:
    """Both sides of one assembled identity and their mismatch."""

    identity_id: str
    lhs: float
    rhs: float
    scale: float
    boundary_correction: float
    terms: dict = field(default_factory=dict)
    residual: float = field(init=False)
    relative: float = field(init=False)

    def __post_init__(self):
        self.residual = abs(self.lhs - self.rhs)
        self.relative = self.residual / max(self.scale, 1e-300)


def _quad4(r: np.ndarray, y: np.ndarray) -> complex:
    """Corrected trapezoid, exact for cubics on smooth integrands."""
    if r.size < 2:
        return 0.0 + 0.0j
    if r.size < 4:
        h = np.diff(r)
        return complex(np.sum(0.5 * (y[1:] + y[:-1]) * h))
    dy = np.gradient(y, r, edge_order=2)
    h = np.diff(r)
    seg = 0.5 * (y[1:] + y[:-1]) * h - h ** 2 / 12.0 * np.diff(dy)
    return complex(np.sum(seg))


def _make_quad(r: np.ndarray, cuts: Sequence[int]):
    """Integration rule split at node-aligned kinks to keep the order."""
    idx = sorted({0, *[int(c) for c in cuts], r.size - 1})

    def quad(y: np.ndarray) -> complex:
        total = 0.0 + 0.0j
        for a, b in zip(idx[:-1], idx[1:]):
            total += _quad4(r[a:b + 1], y[a:b + 1])
        return total

    return quad


def _merge_cuts(mesh: RadialMesh, *cut_groups) -> list[int]:
    out = set()
    for group in cut_groups:
        for c in group or ():
            if isinstance(c, (int, np.integer)):
                out.add(int(c))
            else:
                out.add(mesh.nearest_node(float(c)))
    return sorted(i for i in out if 0 < i < mesh.n - 1)


def _scale_of(parts: dict) -> float:
    return max(abs(v) for v in parts.values()) if parts else 0.0


def _branch_sign(problem: ProblemSpec) -> float:
    return 1.0 if problem.sign == "plus" else -1.0


def _check_bundle(bundle: Sequence[ModeSolution],
                  problem: ProblemSpec) -> None:
    if not bundle:
        raise SpecError("empty solution bundle")
    for sol in bundle:
        if sol.problem.z != problem.z or sol.problem.d != problem.d:
            raise SpecError("bundle was solved for a different problem")


# ---------------------------------------------------------------------------
# the key Morawetz-type identity


def morawetz_residual(bundle: Sequence[ModeSolution], m: MultiplierSpec,
                      pot: PotentialSpec, problem: ProblemSpec,
                      source_cuts: Sequence[float] = ()) -> IdentityResidual:
    """Assemble both sides of the multiplier identity for psi.

    Left side terms (per mode, s the branch sign, k = sqrt(lam)):
      T1 = 1/2 <psi'' |Dw - i s k w|^2>
      T2 = <(psi'/r - psi''/2) Lambda |w|^2 / r^2>
      T3 = beta <(psi'/r)' Re(Dw conj(w))>
      T4 = eps/(2k) <psi' (|Dw - i s k w|^2 + Lambda |w|^2/r^2)>
      T5 = tangential-field term, identically 0 for mode-preserving pairs
      T6 = 1/2 <(psi'' V + psi' V') |w|^2>
      T7 = eps/(2k) <psi'' Re(Dw conj(w))>
      T8 = -eps/(2k) <psi' V |w|^2>
    Right side: R1 = -eps/(2k) Re<psi' g conj(w)>, R2 = -Re<psi' g
    (conj(Dw) + i s k conj(w))>, R3 = -beta Re<(psi'/r) g conj(w)>,
    plus the truncation boundary bracket.  source_cuts may list radii
    where g has a kink so quadrature is split there too.
    """
    _check_bundle(bundle, problem)
    if problem.lam <= 0.0:
        raise SpecError("the multiplier identity is assembled for lam > 0")
    if m.kind == "cubic" and pot.kind != "free":
        raise SpecError("the unbounded cubic multiplier is only admitted in "
                        "the constant-coefficient identity")
    if tangential_profile(pot) is not None:
        raise SpecError("tangential magnetic amplitudes couple the modes; "
                        "no per-mode identity is available")

    k = math.sqrt(problem.lam)
    eps = problem.eps
    s = _branch_sign(problem)
    vprof = electric_profile(pot)
    dvprof = electric_profile_derivative(pot)

    keys = ["T1", "T2", "T3", "T4", "T5", "T6", "T7", "T8",
            "R1", "R2", "R3"]
    parts = dict.fromkeys(keys, 0.0)
    boundary = 0.0
    for sol in bundle:
        mesh = sol.mesh
        r = mesh.r
        data = multiplier_eval(m, mesh)
        quad = _make_quad(r, _merge_cuts(mesh, data.cuts, source_cuts))
        w, dw, g = sol.w, sol.dw, sol.g
        Dw = sol.covariant_dw
        lam_ang = sol.op.lam_mag
        mu = sol.op.mu_mag
        beta = sol.problem.beta
        V = np.real(vprof(r)) if vprof is not None else np.zeros_like(r)
        dV = np.real(dvprof(r)) if dvprof is not None else np.zeros_like(r)

        sq = np.abs(Dw - 1j * s * k * w) ** 2
        ang = lam_ang * np.abs(w / r) ** 2
        cross = np.real(Dw * np.conj(w))
        w2 = np.abs(w) ** 2

        parts["T1"] += 0.5 * quad(data.psi_pp * sq).real
        parts["T2"] += quad((data.psi_p_over_r - 0.5 * data.psi_pp) * ang).real
        parts["T3"] += beta * quad(data.d_psi_p_over_r * cross).real
        if eps > 0.0:
            parts["T4"] += eps / (2.0 * k) * quad(data.psi_p * (sq + ang)).real
            parts["T7"] += eps / (2.0 * k) * quad(data.psi_pp * cross).real
            parts["T8"] += -eps / (2.0 * k) * quad(data.psi_p * V * w2).real
            parts["R1"] += -eps / (2.0 * k) * quad(
                data.psi_p * g * np.conj(w)).real
        parts["T6"] += 0.5 * quad((data.psi_pp * V + data.psi_p * dV) * w2).real
        parts["R2"] += -quad(data.psi_p * g
                             * (np.conj(Dw) + 1j * s * k * np.conj(w))).real
        parts["R3"] += -beta * quad(data.psi_p_over_r * g * np.conj(w)).real

        q = np.imag(np.conj(w) * dw)
        x_bnd = (0.5 * data.psi_p * np.abs(dw) ** 2
                 - 0.5 * mu * data.psi_p * w2 / r ** 2
                 + 0.5 * V * data.psi_p * w2
                 + 0.5 * problem.lam * data.psi_p * w2
                 - s * k * data.psi_p * q
                 - 0.5 * beta * data.psi_p * w2 / r ** 2)
        if eps > 0.0:
            x_bnd = x_bnd + (eps / (2.0 * k) * data.psi_p
                             * np.real(np.conj(w) * dw)
                             - eps * beta / (2.0 * k) * data.psi_p * w2 / r)
        boundary += float(x_bnd[-1] - x_bnd[0])

    lhs = sum(parts[t] for t in keys[:8])
    rhs = sum(parts[t] for t in keys[8:]) + boundary
    scale = max(_scale_of(parts), abs(boundary), abs(lhs), abs(rhs))
    return IdentityResidual("morawetz", lhs, rhs, scale, boundary, parts)


# ---------------------------------------------------------------------------
# the cubic-multiplier identity in the constant-coefficient case


def alpha1_residual(bundle: Sequence[ModeSolution],
                    problem: ProblemSpec,
                    source_cuts: Sequence[float] = ()) -> IdentityResidual:
    """Assemble the weight-|x| radiation identity (cubic multiplier).

    Only the constant-coefficient case is admitted: per mode the left
    side combines 1/2 <r |w' - i s k w|^2> (the full radial operator
    d_r + beta/r shifted by i s k collapses onto w') with the eps-weighted
    phase-shifted gradient; the right side carries the d eps/(4k) mass
    term, the two source terms and the truncation bracket.
    """
    _check_bundle(bundle, problem)
    if problem.lam <= 0.0:
        raise SpecError("the radiation identity needs lam > 0")
    d = problem.d
    for sol in bundle:
        free_nu2 = (d - 2) ** 2 / 4.0 + sol.op.mode.angular_eigenvalue(0.0)
        if sol.op.v_extra is not None or \
                abs(sol.op.nu_eff ** 2 - free_nu2) > 1e-12:
            raise SpecError("the radiation identity is assembled only for "
                            "the constant-coefficient operator")

    k = math.sqrt(problem.lam)
    eps = problem.eps
    s = _branch_sign(problem)
    parts = dict.fromkeys(["L1", "L2", "R1", "R2", "R3"], 0.0)
    boundary = 0.0
    for sol in bundle:
        mesh = sol.mesh
        r = mesh.r
        quad = _make_quad(r, _merge_cuts(mesh, source_cuts))
        w, dw, g = sol.w, sol.dw, sol.g
        Dw = sol.covariant_dw
        lam_ang = sol.op.lam_mag
        mu = sol.op.mu_eff
        beta = sol.problem.beta
        w2 = np.abs(w) ** 2

        parts["L1"] += 0.5 * quad(r * np.abs(dw - 1j * s * k * w) ** 2).real
        sq = np.abs(Dw - 1j * s * k * w) ** 2 + lam_ang * np.abs(w / r) ** 2
        parts["L2"] += eps / (4.0 * k) * quad(r ** 2 * sq).real
        parts["R1"] += d * eps / (4.0 * k) * quad(w2).real
        parts["R2"] += -0.5 * quad(
            r ** 2 * g * (np.conj(dw) + 1j * s * k * np.conj(w))).real
        parts["R3"] += -eps / (4.0 * k) * quad(r ** 2 * g * np.conj(w)).real

        q = np.imag(np.conj(w) * dw)
        x_bnd = 0.5 * (0.5 * r ** 2 * np.abs(dw) ** 2
                       - 0.5 * mu * w2
                       + 0.5 * problem.lam * r ** 2 * w2
                       - s * k * r ** 2 * q
                       + eps / (2.0 * k) * r ** 2 * np.real(np.conj(w) * dw)
                       - eps * (beta + 1.0) / (2.0 * k) * r * w2)
        boundary += float(x_bnd[-1] - x_bnd[0])

    lhs = parts["L1"] + parts["L2"]
    rhs = parts["R1"] + parts["R2"] + parts["R3"] + boundary
    scale = max(_scale_of(parts), abs(boundary), abs(lhs), abs(rhs))
    return IdentityResidual("alpha1", lhs, rhs, scale, boundary, parts)


# ---------------------------------------------------------------------------
# first-order test-function identities


def _phi_ladder(phi, mesh: RadialMesh) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(phi, tuple):
        f, df = phi
        fv = f(mesh.r) if callable(f) else np.asarray(f, dtype=float)
        dv = df(mesh.r) if callable(df) else np.asarray(df, dtype=float)
    else:
        fv = phi(mesh.r) if callable(phi) else np.asarray(phi, dtype=float)
        dv = np.gradient(fv, mesh.r, edge_order=2)
    if fv.shape != mesh.r.shape or dv.shape != mesh.r.shape:
        raise SpecError("test function must be sampled on the mesh")
    return fv, dv


def symmetric_antisymmetric_residuals(
        bundle: Sequence[ModeSolution], phi, pot: PotentialSpec,
        problem: ProblemSpec,
        source_cuts: Sequence[float] = ()) -> tuple[IdentityResidual,
                                                    IdentityResidual]:
    """Energy (real-part) and flux (imaginary-part) identities with phi.

    phi may be a callable, a sample array, or a (phi, phi') pair; an
    analytic derivative keeps the closure at quadrature order.  Per mode:

      sym : lam<phi|w|^2> - <phi|w'|^2> - mu<phi|w|^2/r^2> + <phi V|w|^2>
            - <phi' Re(conj(w) w')>  =  Re<phi g conj(w)> - [phi Re(conj(w) w')]
      anti: s eps <phi|w|^2> - <phi' Im(conj(w) w')>
            =  Im<phi g conj(w)> - [phi Im(conj(w) w')]
    """
    _check_bundle(bundle, problem)
    if tangential_profile(pot) is not None:
        raise SpecError("tangential magnetic amplitudes couple the modes; "
                        "no per-mode identity is available")
    vprof = electric_profile(pot)
    s = _branch_sign(problem)
    eps = problem.eps
    lam = problem.lam

    sym_parts = dict.fromkeys(["mass", "kinetic", "angular", "potential",
                               "transport", "source"], 0.0)
    anti_parts = dict.fromkeys(["absorption", "transport", "source"], 0.0)
    sym_bnd = anti_bnd = 0.0
    for sol in bundle:
        mesh = sol.mesh
        r = mesh.r
        phiv, dphiv = _phi_ladder(phi, mesh)
        quad = _make_quad(r, _merge_cuts(mesh, source_cuts))
        w, dw, g = sol.w, sol.dw, sol.g
        mu = sol.op.mu_mag
        V = np.real(vprof(r)) if vprof is not None else np.zeros_like(r)
        w2 = np.abs(w) ** 2
        cross = np.conj(w) * dw

        sym_parts["mass"] += lam * quad(phiv * w2).real
        sym_parts["kinetic"] += -quad(phiv * np.abs(dw) ** 2).real
        sym_parts["angular"] += -mu * quad(phiv * w2 / r ** 2).real
        sym_parts["potential"] += quad(phiv * V * w2).real
        sym_parts["transport"] += -quad(dphiv * np.real(cross)).real
        sym_parts["source"] += quad(phiv * g * np.conj(w)).real
        flux = phiv * np.real(cross)
        sym_bnd += float(flux[-1] - flux[0])

        anti_parts["absorption"] += s * eps * quad(phiv * w2).real
        anti_parts["transport"] += -quad(dphiv * np.imag(cross)).real
        anti_parts["source"] += quad(phiv * g * np.conj(w)).imag
        qflux = phiv * np.imag(cross)
        anti_bnd += float(qflux[-1] - qflux[0])

    sym_lhs = sum(v for k, v in sym_parts.items() if k != "source")
    sym_rhs = sym_parts["source"] - sym_bnd
    sym = IdentityResidual(
        "symmetric", sym_lhs, sym_rhs,
        max(_scale_of(sym_parts), abs(sym_bnd), abs(sym_lhs), abs(sym_rhs)),
        -sym_bnd, sym_parts)

    anti_lhs = anti_parts["absorption"] + anti_parts["transport"]
    anti_rhs = anti_parts["source"] - anti_bnd
    anti = IdentityResidual(
        "antisymmetric", anti_lhs, anti_rhs,
        max(_scale_of(anti_parts), abs(anti_bnd), abs(anti_lhs),
            abs(anti_rhs)),
        -anti_bnd, anti_parts)
    return sym, anti
