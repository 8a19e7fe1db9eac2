import math

import numpy as np
import pytest

from maghelm.model import ModeIndex, ProblemSpec, SpecError, build_mesh
from maghelm.potentials import build_example
from maghelm.radial import (effective_index, h1_local_distance,
                            limiting_absorption, resolve)
from maghelm.sources import (as_rhs, gaussian_packet, radial_profile,
                             smooth_annulus)
from oracles import free_resolvent_mode0

# frozen dual-route H^1-local distances, eps = 0.01, r_loc = 8
DUAL_FREE_2048 = 4.471141e-06
DUAL_FREE_4096 = 2.862929e-07
DUAL_ISQ_2048 = 3.735792e-07
DUAL_AB_2048 = 4.157688e-07


def test_effective_index_algebra():
    p3 = ProblemSpec(3, 1.0, 0.1)
    p2 = ProblemSpec(2, 1.0, 0.1)
    op = effective_index(build_example("free"), ModeIndex(3, 0), p3)
    assert op.nu_eff == pytest.approx(0.5)
    assert op.mu_eff == pytest.approx(0.0, abs=1e-15)
    op = effective_index(build_example("free"), ModeIndex(3, 2), p3)
    assert op.nu_eff == pytest.approx(2.5)
    assert op.mu_eff == pytest.approx(6.0)        # l(l+1)
    op = effective_index(build_example("aharonov_bohm", flux=0.5, d=2),
                         ModeIndex(2, -1), p2)
    assert op.nu_eff == pytest.approx(0.5)        # |m + alpha|
    op = effective_index(build_example("aharonov_bohm", flux=0.3, d=2),
                         ModeIndex(2, 2), p2)
    assert op.nu_eff == pytest.approx(2.3)
    assert op.mu_eff == pytest.approx(2.3 ** 2 - 0.25)
    op = effective_index(build_example("inverse_square_V", coupling=0.2),
                         ModeIndex(3, 0), p3)
    assert op.nu_eff == pytest.approx(math.sqrt(0.25 - 0.2))
    assert op.mu_eff == pytest.approx(-0.2)


def test_effective_index_rejections():
    p3 = ProblemSpec(3, 1.0, 0.1)
    with pytest.raises(SpecError):
        effective_index(build_example("monopole_A", coupling=0.3),
                        ModeIndex(3, 1), p3)      # modes couple
    with pytest.raises(SpecError):
        effective_index(build_example("aharonov_bohm", flux=0.5, d=3),
                        ModeIndex(3, 0), p3)      # flux line is 2d


def test_coulomb_goes_through_v_extra():
    p3 = ProblemSpec(3, 1.0, 0.1)
    pot = build_example("coulomb_type", coupling=-0.5, decay_exponent=1.5)
    op = effective_index(pot, ModeIndex(3, 0), p3)
    assert op.v_extra is not None
    assert op.v_extra(2.0) == pytest.approx(-0.5 * 2.0 ** -1.5)
    assert op.nu_eff == pytest.approx(0.5)


def test_fd_matches_exact_kernel_oracle():
    """Direct solve against adaptive quadrature of the exact free kernel."""
    prof = radial_profile(smooth_annulus(1.0, 2.0))

    def g_prof(s):
        return s * prof(s)

    for eps, tol in ((0.3, 5e-6), (0.0, 5e-6)):
        prob = ProblemSpec(3, 1.0, eps, mode_cutoff=1)
        mesh = build_mesh(prob, 2048)
        sol = resolve(as_rhs([smooth_annulus(1.0, 2.0)]),
                      build_example("free"), prob, mesh, solver="fd")[0]
        idx = [int(np.searchsorted(mesh.r, rr))
               for rr in (0.05, 0.8, 1.5, 3.0, 10.0, 30.0)]
        r_pts = mesh.r[idx]
        w_oracle = free_resolvent_mode0(r_pts, g_prof, 1.0, 2.0, 1.0, eps)
        rel = np.abs(sol.w[idx] - w_oracle) / np.max(np.abs(w_oracle))
        assert rel.max() < tol


def test_dual_route_agreement_free():
    prob = ProblemSpec(3, 1.0, 0.01, mode_cutoff=3)
    f = as_rhs([smooth_annulus(1.0, 2.0, mode=0),
                gaussian_packet(3.0, 0.5, mode=2)])
    pot = build_example("free")
    dists = {}
    for nodes in (1024, 2048, 4096):
        mesh = build_mesh(prob, nodes)
        a = resolve(f, pot, prob, mesh, solver="fd")
        b = resolve(f, pot, prob, mesh, solver="green")
        dists[nodes] = h1_local_distance(a, b, 8.0)
    assert dists[2048] == pytest.approx(DUAL_FREE_2048, rel=1e-4)
    assert dists[4096] == pytest.approx(DUAL_FREE_4096, rel=1e-4)
    # Numerov interior: the routes separate at fourth order
    order = math.log2(dists[2048] / dists[4096])
    assert order > 3.5


def test_dual_route_agreement_singular_cases():
    prob = ProblemSpec(3, 1.0, 0.01, mode_cutoff=3)
    mesh = build_mesh(prob, 2048)
    f = as_rhs([smooth_annulus(1.0, 2.0)])
    pot = build_example("inverse_square_V", coupling=0.2)
    d = h1_local_distance(resolve(f, pot, prob, mesh, "fd"),
                          resolve(f, pot, prob, mesh, "green"), 8.0)
    assert d == pytest.approx(DUAL_ISQ_2048, rel=1e-4)

    prob2 = ProblemSpec(2, 1.0, 0.01, mode_cutoff=3)
    mesh2 = build_mesh(prob2, 2048)
    f2 = as_rhs([smooth_annulus(1.0, 2.0, mode=0),
                 smooth_annulus(1.0, 2.0, mode=-1)])
    pot2 = build_example("aharonov_bohm", flux=0.5, d=2)
    d2 = h1_local_distance(resolve(f2, pot2, prob2, mesh2, "fd"),
                           resolve(f2, pot2, prob2, mesh2, "green"), 8.0)
    assert d2 == pytest.approx(DUAL_AB_2048, rel=1e-4)


def test_green_route_rejects_long_range_tail():
    prob = ProblemSpec(3, 1.0, 0.01, mode_cutoff=2)
    mesh = build_mesh(prob, 512)
    f = as_rhs([smooth_annulus(1.0, 2.0)])
    pot = build_example("coulomb_type", coupling=-0.5, decay_exponent=1.5)
    with pytest.raises(SpecError):
        resolve(f, pot, prob, mesh, solver="green")
    sols = resolve(f, pot, prob, mesh, solver="fd")
    assert np.all(np.isfinite(sols[0].w))


def test_outgoing_tail_phase():
    """Outgoing solutions rotate like exp(+i k r) far out."""
    prob = ProblemSpec(3, 4.0, 0.0, mode_cutoff=1)
    mesh = build_mesh(prob, 4096)
    sol = resolve(as_rhs([smooth_annulus(1.0, 2.0)]), build_example("free"),
                  prob, mesh, solver="fd")[0]
    k = 2.0
    idx = np.flatnonzero(mesh.r > 30.0)[:200]
    phase = sol.w[idx] * np.exp(-1j * k * mesh.r[idx])
    # frozen-phase trace is nearly constant over the window
    dev = np.max(np.abs(phase - phase.mean())) / np.abs(phase.mean())
    assert dev < 1e-3


def test_incoming_solution_conjugate_symmetry():
    """minus solutions are conjugates of plus ones for real data."""
    prob = ProblemSpec(3, 1.0, 0.05, mode_cutoff=1)
    mesh = build_mesh(prob, 1024)
    f = as_rhs([smooth_annulus(1.0, 2.0)])
    pot = build_example("free")
    up = resolve(f, pot, prob, mesh, solver="fd")[0]
    dn = resolve(f, pot, prob.with_(sign="minus"), mesh, solver="fd")[0]
    assert np.allclose(dn.w, np.conj(up.w), rtol=0.0, atol=1e-12)


def test_limiting_absorption_contracts():
    prob = ProblemSpec(3, 1.0, 0.0, mode_cutoff=2)
    mesh = build_mesh(prob, 2048)
    f = as_rhs([smooth_annulus(1.0, 2.0)])
    res = limiting_absorption(f, build_example("free"), prob,
                              [0.16, 0.08, 0.04, 0.02, 0.01], mesh)
    assert res.monotone and res.geometric
    assert np.all(res.rates < 0.75)
    # halving eps halves the gap: first order in eps
    assert res.rates[-1] == pytest.approx(0.5, abs=0.1)
    assert res.limit_rel_error == pytest.approx(7.905310806949e-04,
                                                rel=1e-6)
    with pytest.raises(SpecError):
        limiting_absorption(f, build_example("free"), prob, [0.1, 0.2, 0.3],
                            mesh)


def test_resolve_validates_solver_name(mesh_2048, free_problem, annulus_f,
                                       free_pot):
    with pytest.raises(SpecError):
        resolve(annulus_f, free_pot, free_problem, mesh_2048,
                solver="magic")
