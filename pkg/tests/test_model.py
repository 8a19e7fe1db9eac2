import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from maghelm.model import (DEFAULT_NODES, EstimateReport, ModeIndex,
                           ProblemSpec, RadialField, SpecError, build_mesh,
                           geometric_mesh, spec_hash, validate_spec)


def test_spec_z_sign_convention():
    plus = ProblemSpec(3, 2.0, 0.5, "plus")
    minus = ProblemSpec(3, 2.0, 0.5, "minus")
    assert plus.z == 2.0 + 0.5j
    assert minus.z == 2.0 - 0.5j
    assert plus.beta == 1.0
    assert ProblemSpec(2, 1.0, 0.1).beta == 0.5


def test_spec_validation_rejects_garbage():
    with pytest.raises(SpecError):
        validate_spec(ProblemSpec(1, 1.0, 0.1))
    with pytest.raises(SpecError):
        validate_spec(ProblemSpec(3, 1.0, -0.1))
    with pytest.raises(SpecError):
        validate_spec(ProblemSpec(3, 1.0, 0.1, "sideways"))
    with pytest.raises(SpecError):
        validate_spec(ProblemSpec(3, 1.0, 0.1, r_min=0.0))
    with pytest.raises(SpecError):
        validate_spec(ProblemSpec(3, 1.0, 0.1, r_min=2.0, r_max=1.0))


def test_with_replaces_fields():
    base = ProblemSpec(3, 1.0, 0.1)
    shifted = base.with_(lam=10.0, eps=1e-3)
    assert shifted.lam == 10.0 and shifted.eps == 1e-3
    assert shifted.d == base.d and shifted.r_max == base.r_max
    assert base.lam == 1.0


def test_mesh_brackets_and_quadrature(free_problem):
    mesh = build_mesh(free_problem, 2048)
    assert mesh.n == 2048
    assert mesh.r[0] == pytest.approx(free_problem.r_min)
    assert mesh.r[-1] == pytest.approx(free_problem.r_max)
    assert np.all(np.diff(mesh.r) > 0.0)
    # trapezoid weights integrate a cubic on the mesh to O(h^2)
    val = mesh.integrate(mesh.r ** 3)
    exact = (free_problem.r_max ** 4 - free_problem.r_min ** 4) / 4.0
    assert val == pytest.approx(exact, rel=5e-6)


def test_mesh_refines_near_origin(free_problem):
    mesh = build_mesh(free_problem, 2048)
    inner = np.diff(mesh.r[mesh.r < 1.0])
    outer = np.diff(mesh.r[mesh.r > 1.0])
    assert inner.min() < 1e-4
    assert inner.min() < outer.min() / 100.0
    assert outer.max() < 0.05
    # geometric section: ratios nearly constant
    ratios = inner[1:] / inner[:-1]
    assert np.allclose(ratios, ratios[0], rtol=1e-6)


def test_geometric_mesh_spans_decades():
    mesh = geometric_mesh(1e-12, 1e12, 4096)
    assert mesh.r[0] == pytest.approx(1e-12)
    assert mesh.r[-1] == pytest.approx(1e12)
    # log-constant spacing
    lr = np.log(mesh.r)
    assert np.allclose(np.diff(lr), np.diff(lr)[0], rtol=1e-8)


def test_cumulative_matches_integrate(mesh_2048):
    samples = np.exp(-mesh_2048.r)
    cum = mesh_2048.cumulative(samples)
    total = float(np.real(mesh_2048.integrate(samples)))
    assert cum[-1] == pytest.approx(total, rel=1e-12)
    assert np.all(np.diff(cum) >= 0.0)


def test_mode_index_angular_eigenvalue():
    assert ModeIndex(3, 0).angular_eigenvalue() == 0.0
    assert ModeIndex(3, 2).angular_eigenvalue() == 6.0
    assert ModeIndex(2, -3).angular_eigenvalue(flux=0.5) == pytest.approx(
        (-3 + 0.5) ** 2)


def test_radial_field_reduction_round_trip(mesh_2048):
    vals = np.exp(-mesh_2048.r) * (1.0 + 2.0j)
    field = RadialField(ModeIndex(3, 1), vals, reduced=False)
    red = field.to_reduced(mesh_2048)
    back = red.from_reduced(mesh_2048)
    assert np.allclose(back.values, vals, rtol=1e-13)
    assert np.allclose(red.values, vals * mesh_2048.r)


def test_estimate_report_guards():
    rep = EstimateReport("demo", 2.0, 4.0, {"lam": 1.0})
    assert rep.ratio == 0.5
    row = rep.as_row()
    assert row["kind"] == "demo" and row["lam"] == 1.0
    with pytest.raises(SpecError):
        EstimateReport("demo", 1.0, 0.0, {})
    with pytest.raises(SpecError):
        EstimateReport("demo", 1.0, -3.0, {})


def test_spec_hash_stability():
    a = ProblemSpec(3, 1.0, 0.1)
    b = ProblemSpec(3, 1.0, 0.1)
    c = ProblemSpec(3, 1.0, 0.2)
    assert spec_hash(a) == spec_hash(b)
    assert spec_hash(a) != spec_hash(c)
    assert spec_hash(a, {"nodes": 2048}) != spec_hash(a)
    assert len(spec_hash(a)) == 12


@given(lam=st.floats(0.01, 100.0), eps=st.floats(0.0, 1.0))
def test_z_always_in_closed_upper_half_plane(lam, eps):
    spec = ProblemSpec(3, lam, eps, "plus")
    assert spec.z.imag >= 0.0
    assert spec.z.real == lam
    assert ProblemSpec(3, lam, eps, "minus").z.conjugate() == spec.z


@given(nodes=st.integers(64, 4096))
def test_mesh_weights_sum_to_span(nodes):
    problem = ProblemSpec(3, 1.0, 0.1)
    mesh = build_mesh(problem, nodes)
    span = problem.r_max - problem.r_min
    assert float(np.sum(mesh.weights)) == pytest.approx(span, rel=1e-12)


def test_default_nodes_sane():
    assert DEFAULT_NODES == 4096
