import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from maghelm.model import geometric_mesh
from maghelm.varforms import (brute_max_rayleigh, max_rayleigh,
                              mode_form_banded, weighted_mass_banded)
from oracles import dense_hardy_mode


def _apply_banded(form, x):
    y = form[0] * x.copy()
    y[:-1] += form[1, :-1] * x[1:]
    y[1:] += form[1, :-1] * x[:-1]
    return y


def test_banded_form_matches_dense_assembly(rng):
    mesh = geometric_mesh(1e-3, 16.0, 400)
    mu = 2.0
    form = mode_form_banded(mesh, mu)
    assert form.shape == (2, mesh.n - 2)
    r, h, wts = mesh.r, np.diff(mesh.r), mesh.weights
    n = mesh.n - 2
    dense = np.zeros((n, n))
    for i in range(n):
        hl, hr = h[i], h[i + 1]
        dense[i, i] = 1.0 / hl + 1.0 / hr + wts[i + 1] * mu / r[i + 1] ** 2
        if i + 1 < n:
            dense[i, i + 1] = dense[i + 1, i] = -1.0 / hr
    x = rng.normal(size=n)
    scale = np.max(np.abs(dense @ x))
    assert np.max(np.abs(_apply_banded(form, x) - dense @ x)) < 1e-12 * scale


def test_extra_diag_is_additive(rng):
    mesh = geometric_mesh(1e-2, 8.0, 200)
    extra = rng.normal(size=mesh.n)
    base = mode_form_banded(mesh, 1.0)
    shifted = mode_form_banded(mesh, 1.0, extra_diag=extra)
    assert np.allclose(shifted[1], base[1])
    assert np.allclose(shifted[0] - base[0], extra[1:-1])


def test_dirichlet_form_positive(rng):
    mesh = geometric_mesh(1e-3, 32.0, 500)
    for mu in (0.0, -0.2, 3.75):
        form = mode_form_banded(mesh, mu)
        for _ in range(3):
            x = rng.normal(size=mesh.n - 2)
            assert float(x @ _apply_banded(form, x)) > 0.0


def test_weighted_mass_gl6_is_exact_for_smooth_weight():
    mesh = geometric_mesh(0.5, 2.0, 300)
    mass = weighted_mass_banded(mesh, lambda r: r ** 3)
    # all-ones vector: sum of interior hats is 1 - (boundary hats), and
    # GL6 per cell integrates the degree-5 product exactly
    x = np.ones(mesh.n - 2)
    total = float(x @ _apply_banded(mass, x))
    from scipy.integrate import quad
    r = mesh.r

    def chi(s):
        if s <= r[1]:
            return (s - r[0]) / (r[1] - r[0])
        if s >= r[-2]:
            return (r[-1] - s) / (r[-1] - r[-2])
        return 1.0

    exact, _ = quad(lambda s: chi(s) ** 2 * s ** 3, r[0], r[-1],
                    points=[r[1], r[-2]], limit=200)
    assert total == pytest.approx(exact, rel=1e-12)


def test_rayleigh_power_iteration_matches_brute():
    mesh = geometric_mesh(1e-8, 1e8, 3000)
    w = mesh.weights / mesh.r ** 2
    form = mode_form_banded(mesh, 0.0)
    res = max_rayleigh(form, w[1:-1])
    assert res.converged
    brute = brute_max_rayleigh(mesh, 0.0, w)
    assert res.value == pytest.approx(brute, rel=1e-6)
    # independent dense oracle on its own grid
    assert res.value == pytest.approx(dense_hardy_mode(0.5), rel=1e-4)
    # discrete Rayleigh quotients stay below the exact constant 4
    assert res.value < 4.0


def test_rayleigh_respects_index_scaling():
    mesh = geometric_mesh(1e-8, 1e8, 3000)
    w = mesh.weights / mesh.r ** 2
    res = max_rayleigh(mode_form_banded(mesh, 1.5 ** 2 - 0.25), w[1:-1])
    assert res.value == pytest.approx(4.0 / 9.0, rel=5e-3)
    assert res.value < 4.0 / 9.0 + 1e-12
    assert res.value == pytest.approx(dense_hardy_mode(1.5), rel=1e-4)


@given(mu=st.floats(-0.24, 20.0))
def test_rayleigh_value_decreases_with_mu(mu):
    mesh = geometric_mesh(1e-6, 1e6, 240)
    w = mesh.weights / mesh.r ** 2
    lo = max_rayleigh(mode_form_banded(mesh, mu), w[1:-1]).value
    hi = max_rayleigh(mode_form_banded(mesh, mu + 1.0), w[1:-1]).value
    assert hi < lo
