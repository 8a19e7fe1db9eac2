import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from maghelm.model import ProblemSpec, SpecError, build_mesh
from maghelm.norms import weighted_l2
from maghelm.potentials import build_example
from maghelm.radial import decompose_rhs
from maghelm.sources import (SOURCE_KINDS, as_rhs, breakpoints,
                             gaussian_packet, power_law, radial_profile,
                             smooth_annulus, source_cuts,
                             source_from_config, source_to_config, support)
from oracles import quad_profile_norm_sq

# adaptive-quadrature values of int |profile|^2 r^2 dr, frozen
ANNULUS_BUMP_NORM_SQ = 2.193532874185e-04
GAUSSIAN_NORM_SQ = 5.679079684711e+00


def test_catalogue_is_closed():
    assert set(SOURCE_KINDS) == {"smooth_annulus", "annulus", "gaussian",
                                 "power"}
    with pytest.raises(SpecError):
        source_from_config({"kind": "delta"})
    with pytest.raises(SpecError):
        source_from_config({"kind": "gaussian", "width": -1.0})
    with pytest.raises(SpecError):
        source_from_config({"kind": "annulus", "r_inner": 2.0,
                            "r_outer": 1.0})
    with pytest.raises(SpecError):
        source_from_config({"kind": "gaussian", "wavelength": 3.0})


def test_bump_profile_shape():
    prof = radial_profile(smooth_annulus(1.0, 2.0))
    assert prof(1.0) == 0.0 and prof(2.0) == 0.0
    assert prof(0.5) == 0.0 and prof(2.5) == 0.0
    assert prof(1.5) == pytest.approx(math.exp(-4.0), rel=1e-12)
    r = np.linspace(1.01, 1.99, 101)
    assert np.all(prof(r) > 0.0)


def test_profile_norms_match_quadrature_oracle():
    problem = ProblemSpec(3, 1.0, 0.1)
    pot = build_example("free")
    mesh = build_mesh(problem, 4096)

    spec = smooth_annulus(1.0, 2.0)
    val = weighted_l2(decompose_rhs(as_rhs([spec]), pot, problem, mesh),
                      0.0, mesh)
    assert val == pytest.approx(ANNULUS_BUMP_NORM_SQ, rel=1e-10)

    spec = gaussian_packet(3.0, 0.5)
    val = weighted_l2(decompose_rhs(as_rhs([spec]), pot, problem, mesh),
                      0.0, mesh)
    assert val == pytest.approx(GAUSSIAN_NORM_SQ, rel=1e-12)

    # discontinuous indicator: mesh quadrature is only first order at jumps
    spec = source_from_config({"kind": "annulus", "r_inner": 1.0,
                               "r_outer": 2.0})
    val = weighted_l2(decompose_rhs(as_rhs([spec]), pot, problem, mesh),
                      0.0, mesh)
    oracle = quad_profile_norm_sq(radial_profile(spec), 1.0, 2.0, d=3)
    assert oracle == pytest.approx(7.0 / 3.0, rel=1e-10)
    assert val == pytest.approx(oracle, rel=5e-3)

    # power law, singular at the origin, cut off by r_min
    spec = power_law(2.5)
    val = weighted_l2(decompose_rhs(as_rhs([spec]), pot, problem, mesh),
                      0.0, mesh)
    oracle = quad_profile_norm_sq(radial_profile(spec), problem.r_min,
                                  problem.r_max, d=3)
    assert val == pytest.approx(oracle, rel=1e-3)


def test_support_and_breakpoints():
    assert support(smooth_annulus(1.0, 2.0)) == (1.0, 2.0)
    lo, hi = support(gaussian_packet(3.0, 0.5))
    assert lo == 0.0 and hi == pytest.approx(7.0)
    ind = source_from_config({"kind": "annulus", "r_inner": 1.0,
                              "r_outer": 2.0})
    assert breakpoints(ind) == (1.0, 2.0)
    assert breakpoints(smooth_annulus(1.0, 2.0)) == ()
    cuts = source_cuts([ind, smooth_annulus(0.5, 3.0)])
    assert 1.0 in cuts and 2.0 in cuts


def test_config_round_trip():
    spec = source_from_config({"kind": "gaussian", "center": 2.0,
                               "width": 0.3, "mode": 2,
                               "coeff": [0.5, -1.0]})
    cfg = source_to_config(spec)
    again = source_from_config(cfg)
    assert again == spec
    assert again.coeff == 0.5 - 1.0j


def test_as_rhs_shapes():
    items = as_rhs([smooth_annulus(1.0, 2.0, mode=0),
                    gaussian_packet(3.0, 0.5, mode=2, coeff=1j)])
    assert [it["mode"] for it in items] == [0, 2]
    assert items[1]["coeff"] == 1j
    assert callable(items[0]["radial"])


@given(scale=st.floats(0.1, 10.0), mode=st.integers(0, 4))
def test_decompose_is_coeff_linear(scale, mode):
    problem = ProblemSpec(3, 1.0, 0.1, mode_cutoff=8)
    pot = build_example("free")
    mesh = build_mesh(problem, 256)
    one = decompose_rhs(as_rhs([smooth_annulus(1.0, 2.0, mode=mode)]),
                        pot, problem, mesh)
    scaled = decompose_rhs(
        as_rhs([smooth_annulus(1.0, 2.0, mode=mode, coeff=scale)]),
        pot, problem, mesh)
    assert np.allclose(scaled[0].values, scale * one[0].values, rtol=1e-12)
    assert scaled[0].mode.index == mode


def test_decompose_rejects_bad_modes():
    problem = ProblemSpec(3, 1.0, 0.1, mode_cutoff=2)
    pot = build_example("free")
    mesh = build_mesh(problem, 128)
    with pytest.raises(SpecError):
        decompose_rhs(as_rhs([smooth_annulus(mode=5)]), pot, problem, mesh)
    with pytest.raises(SpecError):
        decompose_rhs([], pot, problem, mesh)
    # d=3 harmonic weights are m >= 0 only
    with pytest.raises(SpecError):
        decompose_rhs([{"mode": -1, "radial": lambda r: r, "coeff": 1.0}],
                      pot, problem, mesh)
