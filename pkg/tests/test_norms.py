import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from maghelm.model import ModeIndex, ProblemSpec, RadialField, SpecError, \
    build_mesh
from maghelm.norms import (ah_dual, ah_norm, box_weight, dirichlet_form,
                           gradient_split, morrey_campanato_norm,
                           phase_shifted_gradient, radial_weight, sphere_l2,
                           weighted_l2)
from maghelm.potentials import build_example
from maghelm.radial import decompose_rhs, resolve
from maghelm.sources import as_rhs, smooth_annulus
from oracles import morrey_growth_exponent, quad_weighted

# frozen slab-weight scaling run (p=1.001, q=2.25, d=5, k=3, 1e5 samples)
SLAB_EXPONENT = 0.108707252915
SLAB_FLATNESS = 1.006251552425


def _bundle(mesh, problem):
    f = as_rhs([smooth_annulus(1.0, 2.0)])
    return resolve(f, build_example("free"), problem, mesh)


def test_weighted_l2_matches_quadrature():
    problem = ProblemSpec(3, 1.0, 0.1, mode_cutoff=1)
    mesh = build_mesh(problem, 4096)
    fields = decompose_rhs(as_rhs([smooth_annulus(1.0, 2.0)]),
                           build_example("free"), problem, mesh)
    from maghelm.sources import radial_profile
    prof = radial_profile(smooth_annulus(1.0, 2.0))
    for s in (-2.0, 0.0, 2.0):
        got = weighted_l2(fields, s, mesh)
        want = quad_weighted(prof, lambda r: r ** s, 1.0, 2.0, d=3)
        assert got == pytest.approx(want, rel=1e-9)


def test_ah_norm_scales_like_l2_locally(mesh_2048, free_problem):
    bundle = _bundle(mesh_2048, free_problem)
    val = ah_norm(bundle)
    assert val > 0.0
    doubled = [type(s)(s.op, s.problem, s.mesh, 2.0 * s.w, 2.0 * s.dw,
                       s.g, s.solver) for s in bundle]
    assert ah_norm(doubled) == pytest.approx(2.0 * val, rel=1e-12)
    with pytest.raises(SpecError):
        ah_norm(bundle, r0=1e9)


def test_ah_duality_bounds_the_pairing(mesh_2048, free_problem):
    """|int f conj(u)| <= N(f) |||u|||: the norms are actually dual."""
    fields = decompose_rhs(as_rhs([smooth_annulus(1.0, 2.0)]),
                           build_example("free"), free_problem, mesh_2048)
    bundle = _bundle(mesh_2048, free_problem)
    pair = abs(complex(mesh_2048.integrate(
        fields[0].values * np.conj(bundle[0].w))))
    bound = ah_dual(fields, 1.0, mesh_2048) * ah_norm(bundle)
    assert pair <= bound


@given(r_inner=st.floats(0.5, 2.0), width=st.floats(0.2, 2.0),
       r0=st.floats(0.25, 4.0))
def test_ah_duality_randomized(r_inner, width, r0):
    problem = ProblemSpec(3, 1.0, 0.1, mode_cutoff=1)
    mesh = build_mesh(problem, 512)
    spec = smooth_annulus(r_inner, r_inner + width)
    fields = decompose_rhs(as_rhs([spec]), build_example("free"), problem,
                           mesh)
    bundle = resolve(as_rhs([spec]), build_example("free"), problem, mesh)
    pair = abs(complex(mesh.integrate(
        fields[0].values * np.conj(bundle[0].w))))
    bound = ah_dual(fields, r0, mesh) * ah_norm(bundle)
    assert pair <= bound * (1.0 + 1e-9)


def test_gradient_split_free_has_no_magnetic_part(mesh_2048, free_problem):
    bundle = _bundle(mesh_2048, free_problem)
    straight, magnetic = gradient_split(bundle, build_example("free"))
    assert magnetic == 0.0
    assert straight == pytest.approx(dirichlet_form(bundle), rel=1e-12)


def test_radiation_makes_phase_shifted_gradient_small(mesh_2048,
                                                      free_problem):
    """Conjugating out exp(ikr) kills the leading oscillation."""
    bundle = _bundle(mesh_2048, free_problem)
    plain = dirichlet_form(bundle)
    shifted = phase_shifted_gradient(bundle, free_problem.lam, "plus")
    assert shifted < 0.25 * plain
    wrong_way = phase_shifted_gradient(bundle, free_problem.lam, "minus")
    assert shifted < 0.25 * wrong_way


def test_sphere_l2_picks_up_the_trace(mesh_2048, free_problem):
    bundle = _bundle(mesh_2048, free_problem)
    r = float(mesh_2048.r[np.searchsorted(mesh_2048.r, 3.0)])
    val = sphere_l2(bundle, r)
    assert val == pytest.approx(abs(bundle[0].w[
        np.searchsorted(mesh_2048.r, 3.0)]) ** 2, rel=1e-12)


def test_weight_spec_validation():
    with pytest.raises(SpecError):
        radial_weight(None, d=3)
    with pytest.raises(SpecError):
        box_weight(lambda x: x[:, 0], [(0.0, 1.0)], d=3)
    with pytest.raises(SpecError):
        box_weight(lambda x: x[:, 0], [(1.0, 0.0), (0.0, 1.0), (0.0, 1.0)],
                   d=3)


def test_morrey_radial_inverse_square_is_scale_free():
    w = radial_weight(lambda r: 1.0 / r ** 2, d=3)
    vals = [morrey_campanato_norm(w, 2.0, 1.25, [r]) for r in
            (0.5, 4.0, 32.0)]
    assert max(vals) / min(vals) < 1.0 + 1e-6


def test_morrey_rejects_p_below_one():
    w = radial_weight(lambda r: 1.0 / r ** 2, d=3)
    with pytest.raises(SpecError):
        morrey_campanato_norm(w, 2.0, 0.5, [1.0])


def test_slab_weight_scaling_counterexample():
    """Scale-flat weight whose square root over |x| still grows.

    Slab of amplitude R^(-d(1-1/p)) on [0,1]^2 x [R,2R]^3 in d = 5: the
    (2,p) norm stays R-independent while the (2,q) norm of sqrt(w)/|x|
    grows like a positive power of R close to 1 - 2/q - d(1-1/p).
    """
    p, q, d, k = 1.001, 2.25, 5, 3
    rs = [16.0, 32.0, 64.0, 128.0]
    cross_norms, omega_norms = [], []
    for big_r in rs:
        amp = big_r ** (-d * (1.0 - 1.0 / p))
        box = [(0.0, 1.0)] * (d - k) + [(big_r, 2.0 * big_r)] * k
        omega = box_weight(lambda x, a=amp: a * np.ones(x.shape[0]), box, d)
        cross = box_weight(
            lambda x, a=amp: math.sqrt(a) / np.linalg.norm(x, axis=1),
            box, d)
        probes = [3.5 * big_r, 4.0 * big_r, 5.0 * big_r]
        omega_norms.append(morrey_campanato_norm(omega, 2.0, p, probes,
                                                 n_samples=100_000, seed=1))
        cross_norms.append(morrey_campanato_norm(cross, 2.0, q, probes,
                                                 n_samples=100_000, seed=1))
    fit = float(np.polyfit(np.log(rs), np.log(cross_norms), 1)[0])
    assert fit == pytest.approx(SLAB_EXPONENT, rel=1e-6)
    predicted = morrey_growth_exponent(p, q, d)
    assert abs(fit - predicted) / predicted < 0.10
    flat = max(omega_norms) / min(omega_norms)
    assert flat == pytest.approx(SLAB_FLATNESS, rel=1e-6)
    assert flat < 1.10
