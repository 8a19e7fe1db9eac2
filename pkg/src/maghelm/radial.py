"""Half-line reduction and the two independent resolvent solvers.

A field u on R^d with the separable structure u = sum_m u_m(r) Y_m is
encoded through w_m = r^beta u_m, beta = (d-1)/2.  Each mode solves

    w'' - (mu/r^2) w + V_extra(r) w + z w = g,      g = r^beta f_m,

with mu = nu^2 - 1/4.  The effective index nu collects the angular
eigenvalue, the dimension shift and any inverse-square electric part;
tails that are not exactly homogeneous of degree -2 stay in V_extra.

Two routes to the same solution:

* solve_mode_fd: banded finite differences (second-order three-point
  rows on graded sections, fourth-order Numerov rows where the mesh is
  locally uniform), with a regular-solution ratio row at r_min and an
  outgoing/incoming Hankel ratio row at r_max.
* solve_mode_green: quadrature of the exact Green function
  (pi/2i) sqrt(rs) J_nu(k r_<) H_nu(k r_>), available whenever
  V_extra = 0.  Serves as the independent oracle for the first route.

The radial derivative dw is the derivative of the not-a-knot cubic
spline through the nodes (fourth order on smooth solutions), with the
outer endpoint replaced by the analytic log-derivative of the radiating
Hankel branch that the boundary row enforces; the derivative of u is
derived from it through d_r u = (w' - beta w / r) / r^beta.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import solve_banded
from scipy.special import hankel1, hankel2, jv

from .model import ModeIndex, ProblemSpec, RadialField, RadialMesh, SpecError
from .potentials import PotentialSpec, electric_profile

__all__ = [
    "EffectiveRadialOp",
    "ModeSolution",
    "LimitingAbsorptionResult",
    "branch_wavenumber",
    "effective_index",
    "decompose_rhs",
    "solve_mode_fd",
    "solve_mode_green",
    "resolve",
    "limiting_absorption",
    "h1_local_distance",
]


def branch_wavenumber(problem: ProblemSpec) -> complex:
    """sqrt(lam + i eps) on the branch matching the chosen resolvent side.

    Principal square root for the upper side (Im k >= 0, outgoing
    e^{+i k r}); complex conjugate for the lower side (incoming)."""
    k = complex(np.sqrt(complex(problem.lam, problem.eps)))
    if problem.sign == "minus":
        k = k.conjugate()
    return k


@dataclass(frozen=True)
class EffectiveRadialOp:
    """Coefficients of one reduced angular mode.

    nu_eff/mu_eff drive the solver (mu_eff = nu_eff^2 - 1/4); lam_mag and
    mu_mag keep the purely magnetic angular eigenvalue for assemblies
    that must see the electric potential explicitly.
    """

    mode: ModeIndex
    nu_eff: float
    lam_mag: float
    v_extra: Callable[[np.ndarray], np.ndarray] | None = None

    @property
    def mu_eff(self) -> float:
        return self.nu_eff ** 2 - 0.25

    @property
    def mu_mag(self) -> float:
        beta = (self.mode.d - 1) / 2.0
        return beta * (beta - 1.0) + self.lam_mag


def effective_index(pot: PotentialSpec, mode: ModeIndex,
                    problem: ProblemSpec) -> EffectiveRadialOp:
    """Effective index of one angular mode for a mode-preserving pair."""
    if mode.d != problem.d or pot.d != problem.d:
        raise SpecError("potential, mode and problem dimensions must agree")
    if pot.kind == "monopole_A":
        raise SpecError("monopole_A couples the angular modes; "
                        "no single-mode reduction exists")
    if pot.kind == "custom_radial" and pot.a_radial is not None:
        raise SpecError("custom tangential amplitudes are not mode-preserving")
    if pot.kind == "aharonov_bohm" and problem.d != 2:
        raise SpecError("the flux-line reduction is two-dimensional")

    flux = pot.flux if pot.kind == "aharonov_bohm" else 0.0
    lam_mag = mode.angular_eigenvalue(flux)
    nu2 = (problem.d - 2) ** 2 / 4.0 + lam_mag

    if pot.kind == "inverse_square_V":
        nu2 -= pot.coupling
        if nu2 < 0.0:
            raise SpecError(
                f"effective index below threshold for mode {mode.index}: "
                f"nu^2 = {nu2:g} < 0")
        return EffectiveRadialOp(mode, float(np.sqrt(nu2)), lam_mag)

    v_extra = None
    if pot.kind in ("coulomb_type", "custom_radial"):
        v_extra = electric_profile(pot)
    if nu2 < 0.0:
        raise SpecError(f"negative nu^2 = {nu2:g}")
    return EffectiveRadialOp(mode, float(np.sqrt(nu2)), lam_mag,
                             v_extra=v_extra)


def decompose_rhs(f, pot: PotentialSpec, problem: ProblemSpec,
                  mesh: RadialMesh) -> list[RadialField]:
    """Reduced right-hand sides g_m = r^beta f_m on the mesh.

    Accepts a radial callable (lowest mode), a dict with keys
    mode/radial/coeff, or a list of such dicts.  Radial parts may be
    callables of r or sampled arrays on the mesh.
    """
    if callable(f):
        f = [{"mode": 0, "radial": f}]
    elif isinstance(f, dict):
        f = [f]
    beta = problem.beta
    fields = []
    seen = set()
    for item in f:
        m = int(item["mode"])
        if problem.d == 3 and m < 0:
            raise SpecError("three-dimensional zonal modes are indexed by l >= 0")
        if abs(m) > problem.mode_cutoff:
            raise SpecError(
                f"mode {m} exceeds the configured cutoff {problem.mode_cutoff}")
        if m in seen:
            raise SpecError(f"mode {m} specified twice")
        seen.add(m)
        radial = item["radial"]
        vals = radial(mesh.r) if callable(radial) else np.asarray(radial)
        vals = np.asarray(vals, dtype=complex)
        if vals.shape != mesh.r.shape:
            raise SpecError("sampled radial part must match the mesh")
        coeff = complex(item.get("coeff", 1.0))
        mode = ModeIndex(problem.d, m)
        fields.append(RadialField(mode, coeff * vals * mesh.r ** beta,
                                  reduced=True))
    if not fields:
        raise SpecError("empty right-hand side")
    return fields


@dataclass
class ModeSolution:
    """One solved mode: reduced profile, derivative and its source."""

    op: EffectiveRadialOp
    problem: ProblemSpec
    mesh: RadialMesh
    w: np.ndarray
    dw: np.ndarray
    g: np.ndarray
    solver: str

    @property
    def u(self) -> np.ndarray:
        beta = self.problem.beta
        return self.w / self.mesh.r ** beta

    @property
    def du(self) -> np.ndarray:
        beta = self.problem.beta
        radial = self.dw - beta * self.w / self.mesh.r
        return radial / self.mesh.r ** beta

    @property
    def covariant_dw(self) -> np.ndarray:
        """r^beta d_r u = w' - beta w / r, the reduced radial derivative."""
        beta = self.problem.beta
        return self.dw - beta * self.w / self.mesh.r


def _derivative(w: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Nodal derivative through a not-a-knot cubic spline."""
    return CubicSpline(r, w).derivative()(r)


def _outer_log_derivative(op: EffectiveRadialOp, problem: ProblemSpec,
                          rb: float) -> complex:
    """d/dr log(sqrt(r) H_nu(k r)) at the outer truncation radius."""
    k = branch_wavenumber(problem)
    h = hankel1 if problem.sign == "plus" else hankel2
    x = k * rb
    nu = op.nu_eff
    return complex(0.5 / rb + k * (h(nu - 1.0, x) / h(nu, x) - nu / x))


def _solution_derivative(op: EffectiveRadialOp, problem: ProblemSpec,
                         mesh: RadialMesh, w: np.ndarray) -> np.ndarray:
    dw = _derivative(w, mesh.r)
    # the boundary row pins the last two nodes to the radiating branch,
    # so its log-derivative is the consistent endpoint slope
    dw[-1] = w[-1] * _outer_log_derivative(op, problem, mesh.r[-1])
    return dw


def _hankel_ratio(op: EffectiveRadialOp, problem: ProblemSpec,
                  r_out: float, r_in: float) -> complex:
    """W(r_out)/W(r_in) for W = sqrt(r) H_nu(k r) on the chosen branch."""
    k = branch_wavenumber(problem)
    h = hankel1 if problem.sign == "plus" else hankel2
    num = np.sqrt(r_out) * h(op.nu_eff, k * r_out)
    den = np.sqrt(r_in) * h(op.nu_eff, k * r_in)
    if den == 0.0 or not np.isfinite(num) or not np.isfinite(den):
        raise SpecError("radiating boundary row is numerically degenerate; "
                        "reduce r_max or the spectral parameter")
    return complex(num / den)


def solve_mode_fd(op: EffectiveRadialOp, g_field: RadialField,
                  problem: ProblemSpec, mesh: RadialMesh,
                  scheme: str = "auto") -> ModeSolution:
    """Banded finite-difference solve of one reduced mode.

    scheme: "auto" upgrades rows with locally uniform spacing to Numerov
    (fourth order); "three_point" forces the plain second-order stencil.
    """
    if scheme not in ("auto", "three_point"):
        raise SpecError(f"unknown scheme {scheme!r}")
    g = np.asarray(g_field.values, dtype=complex)
    if g.shape != mesh.r.shape:
        raise SpecError("right-hand side does not match the mesh")
    r = mesh.r
    n = mesh.n
    z = problem.z
    q = np.full(n, z, dtype=complex) - op.mu_eff / r ** 2
    if op.v_extra is not None:
        q = q + np.asarray(op.v_extra(r), dtype=complex)

    sub = np.zeros(n, dtype=complex)   # sub[i] multiplies w_{i-1} in row i
    dia = np.zeros(n, dtype=complex)
    sup = np.zeros(n, dtype=complex)   # sup[i] multiplies w_{i+1} in row i
    rhs = np.zeros(n, dtype=complex)

    h = np.diff(r)
    hm = h[:-1]
    hp = h[1:]
    t = np.log(r)
    th = np.diff(t)
    uniform = np.abs(hp - hm) <= 1e-9 * np.maximum(hp, hm)
    log_uniform = np.abs(th[1:] - th[:-1]) <= 1e-9 * np.maximum(th[1:],
                                                                th[:-1])
    log_uniform &= ~uniform
    if scheme == "three_point":
        uniform = np.zeros(n - 2, dtype=bool)
        log_uniform = np.zeros(n - 2, dtype=bool)

    i = np.arange(1, n - 1)
    # second-order rows wherever the spacing is irregular
    sub[i] = 2.0 / (hm * (hm + hp))
    sup[i] = 2.0 / (hp * (hm + hp))
    dia[i] = -2.0 / (hm * hp) + q[i]
    rhs[i] = g[i]

    if np.any(uniform):
        j = i[uniform]
        hu = hm[uniform]
        c = hu ** 2 / 12.0
        sub[j] = (1.0 + c * q[j - 1]) / hu ** 2
        sup[j] = (1.0 + c * q[j + 1]) / hu ** 2
        dia[j] = (-2.0 + 10.0 * c * q[j]) / hu ** 2
        rhs[j] = (g[j - 1] + 10.0 * g[j] + g[j + 1]) / 12.0

    if np.any(log_uniform):
        # Liouville form on the geometric section: with r = e^t and
        # w = sqrt(r) W(t) the equation is W'' + (r^2 q - 1/4) W = r^{3/2} g
        # on a uniform t-grid, so the Numerov stencil applies there too
        j = i[log_uniform]
        tau = th[:-1][log_uniform]
        c = tau ** 2 / 12.0
        qt = r ** 2 * q - 0.25
        gt = r ** 1.5 * g
        rs = np.sqrt(r)
        sub[j] = (1.0 + c * qt[j - 1]) / rs[j - 1] / tau ** 2
        sup[j] = (1.0 + c * qt[j + 1]) / rs[j + 1] / tau ** 2
        dia[j] = (-2.0 + 10.0 * c * qt[j]) / rs[j] / tau ** 2
        rhs[j] = (gt[j - 1] + 10.0 * gt[j] + gt[j + 1]) / 12.0

    # regular solution at the inner edge: w ~ r^{nu + 1/2}
    dia[0] = 1.0
    sup[0] = -float((r[0] / r[1]) ** (op.nu_eff + 0.5))
    # radiating solution at the outer edge
    dia[n - 1] = 1.0
    sub[n - 1] = -_hankel_ratio(op, problem, r[-1], r[-2])

    ab = np.zeros((3, n), dtype=complex)
    ab[0, 1:] = sup[:-1]
    ab[1, :] = dia
    ab[2, :-1] = sub[1:]
    w = solve_banded((1, 1), ab, rhs)
    if not np.all(np.isfinite(w)):
        raise SpecError("finite-difference solve produced non-finite values")
    dw = _solution_derivative(op, problem, mesh, w)
    return ModeSolution(op, problem, mesh, w, dw, g, "fd")


def solve_mode_green(op: EffectiveRadialOp, g_field: RadialField,
                     problem: ProblemSpec, mesh: RadialMesh) -> ModeSolution:
    """Exact-kernel quadrature solve; requires a vanishing V_extra.

    w(r) = c sqrt(r) [ H(kr) int_a^r sqrt(s) J(ks) g ds
                     + J(kr) int_r^b sqrt(s) H(ks) g ds ],
    c = -i pi/2 on the upper branch, +i pi/2 on the lower branch (from
    the Wronskian of the Bessel pair).  Cumulative trapezoid sums give
    an O(n) evaluation; the kernel kink sits exactly on the nodes.
    """
    if op.v_extra is not None:
        probe = np.asarray(op.v_extra(mesh.r[:: max(1, mesh.n // 16)]))
        if np.max(np.abs(probe)) > 0.0:
            raise SpecError("Green-function route requires the potential "
                            "tail to fold into the effective index")
    g = np.asarray(g_field.values, dtype=complex)
    if g.shape != mesh.r.shape:
        raise SpecError("right-hand side does not match the mesh")
    r = mesh.r
    k = branch_wavenumber(problem)
    hfun = hankel1 if problem.sign == "plus" else hankel2
    J = jv(op.nu_eff, k * r)
    H = hfun(op.nu_eff, k * r)
    if not (np.all(np.isfinite(J)) and np.all(np.isfinite(H))):
        raise SpecError("Bessel kernel overflow; shrink the radial window")
    c = (-1j if problem.sign == "plus" else 1j) * np.pi / 2.0

    t = np.sqrt(r) * g
    below = _cumtrapz(J * t, r)            # int_{r_min}^{r_i}
    above_total = _cumtrapz(H * t, r)
    above = above_total[-1] - above_total  # int_{r_i}^{r_max}
    w = c * np.sqrt(r) * (H * below + J * above)
    dw = _solution_derivative(op, problem, mesh, w)
    return ModeSolution(op, problem, mesh, w, dw, g, "green")


def _cumtrapz(y: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Cumulative corrected trapezoid: exact for cubics on each interval.

    int_{x_j}^{x_{j+1}} y = (h/2)(y_j + y_{j+1}) - (h^2/12)(y'_{j+1} - y'_j)
    with centered-difference slopes, so smooth integrands are handled to
    fourth order while jumps degrade gracefully to the plain rule."""
    h = np.diff(x)
    dy = np.gradient(y, x, edge_order=2)
    seg = 0.5 * (y[1:] + y[:-1]) * h - h ** 2 / 12.0 * (dy[1:] - dy[:-1])
    out = np.zeros_like(y)
    out[1:] = np.cumsum(seg)
    return out


def resolve(f, pot: PotentialSpec, problem: ProblemSpec, mesh: RadialMesh,
            solver: str = "fd", scheme: str = "auto") -> list[ModeSolution]:
    """Solve every requested mode; returns the solution bundle."""
    fields = decompose_rhs(f, pot, problem, mesh)
    sols = []
    for fld in fields:
        op = effective_index(pot, fld.mode, problem)
        if solver == "fd":
            sols.append(solve_mode_fd(op, fld, problem, mesh, scheme=scheme))
        elif solver == "green":
            sols.append(solve_mode_green(op, fld, problem, mesh))
        else:
            raise SpecError(f"unknown solver {solver!r}")
    return sols


def h1_local_distance(bundle_a: Sequence[ModeSolution],
                      bundle_b: Sequence[ModeSolution],
                      r_loc: float) -> float:
    """H^1 distance of two bundles on the ball {r <= r_loc} (w-coordinates)."""
    if len(bundle_a) != len(bundle_b):
        raise SpecError("bundles have different mode content")
    total = 0.0
    for sa, sb in zip(bundle_a, bundle_b):
        if sa.op.mode != sb.op.mode:
            raise SpecError("bundles have different mode content")
        mesh = sa.mesh
        mask = mesh.r <= r_loc
        dwin = np.abs(sa.w - sb.w) ** 2 + np.abs(sa.dw - sb.dw) ** 2
        total += float(np.sum(mesh.weights[mask] * dwin[mask]))
    return float(np.sqrt(total))


@dataclass
class LimitingAbsorptionResult:
    """Vanishing-absorption diagnostics for a fixed source and energy."""

    eps: np.ndarray
    distances: np.ndarray          # consecutive H^1-local gaps
    rates: np.ndarray              # distance ratios, < 1 means contraction
    monotone: bool
    geometric: bool
    extrapolated: list[ModeSolution]
    limit_rel_error: float         # extrapolant vs the eps = 0 solve

    def converged(self) -> bool:
        return self.monotone and self.limit_rel_error < 1e-2


def limiting_absorption(f, pot: PotentialSpec, problem: ProblemSpec,
                        eps_sequence: Sequence[float], mesh: RadialMesh,
                        r_loc: float = 8.0,
                        solver: str = "fd") -> LimitingAbsorptionResult:
    """Drive eps -> 0 at fixed lam > 0 and compare with the eps = 0 solve.

    The sequence must be strictly decreasing and positive.  Convergence
    is measured in H^1 of a fixed ball: the absorbing phase drift
    e^{i(k_eps - k_0) r} is O(eps r / sqrt(lam)), so locality is what
    makes the limit visible at finite truncation.  A two-term Richardson
    extrapolant (for a halving sequence) is compared against the direct
    boundary-condition limit.
    """
    eps_arr = np.asarray(list(eps_sequence), dtype=float)
    if eps_arr.ndim != 1 or eps_arr.size < 3:
        raise SpecError("need at least three absorption values")
    if np.any(eps_arr <= 0.0) or np.any(np.diff(eps_arr) >= 0.0):
        raise SpecError("absorption sequence must be positive and "
                        "strictly decreasing")
    if problem.lam <= 0.0:
        raise SpecError("the vanishing-absorption limit needs lam > 0")

    bundles = [resolve(f, pot, problem.with_(eps=float(e)), mesh,
                       solver=solver) for e in eps_arr]
    dists = np.array([h1_local_distance(bundles[i], bundles[i + 1], r_loc)
                      for i in range(len(bundles) - 1)])
    rates = dists[1:] / np.maximum(dists[:-1], 1e-300)
    monotone = bool(np.all(np.diff(dists) < 0.0))
    geometric = bool(np.all(rates < 0.75))

    last, prev = bundles[-1], bundles[-2]
    extrapolated = []
    for sl, sp in zip(last, prev):
        w = 2.0 * sl.w - sp.w
        dw = 2.0 * sl.dw - sp.dw
        extrapolated.append(ModeSolution(sl.op, sl.problem, sl.mesh, w, dw,
                                         sl.g, sl.solver + "+richardson"))

    limit = resolve(f, pot, problem.with_(eps=0.0), mesh, solver=solver)
    gap = h1_local_distance(extrapolated, limit, r_loc)
    size = _h1_local_norm(limit, r_loc)
    rel = gap / max(size, 1e-300)
    return LimitingAbsorptionResult(eps_arr, dists, rates, monotone,
                                    geometric, extrapolated, rel)


def _h1_local_norm(bundle: Sequence[ModeSolution], r_loc: float) -> float:
    total = 0.0
    for s in bundle:
        mask = s.mesh.r <= r_loc
        dens = np.abs(s.w) ** 2 + np.abs(s.dw) ** 2
        total += float(np.sum(s.mesh.weights[mask] * dens[mask]))
    return float(np.sqrt(total))
