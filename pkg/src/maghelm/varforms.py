"""Discrete quadratic forms on the half-line and Rayleigh-quotient solvers.

Best constants of weighted inequalities (Hardy-type quotients, the
smallness constants of the potential hypotheses) are computed as largest
generalized eigenvalues  N w = theta K w  where K is the magnetic
Dirichlet form of one angular mode in half-line coordinates,

    K[w] = int |w'|^2 dr + mu * int |w|^2 / r^2 dr ,   w(a) = w(b) = 0,

(mu = nu^2 - 1/4) and N is a diagonal weight.  Discrete maxima over a
Dirichlet-truncated space are lower bounds for the continuum suprema and
improve as the mesh widens/refines.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh, solveh_banded

from .model import RadialMesh

__all__ = [
    "mode_form_banded",
    "weighted_mass_banded",
    "max_rayleigh",
    "brute_max_rayleigh",
    "RayleighResult",
]


def mode_form_banded(mesh: RadialMesh, mu: float,
                     extra_diag: np.ndarray | None = None) -> np.ndarray:
    """Lower banded (2 x m) storage of the mode Dirichlet form.

    Piecewise-linear stiffness for int |w'|^2 plus lumped mass for
    mu int |w|^2/r^2, restricted to interior nodes (Dirichlet ends).
    ``extra_diag`` adds a further lumped diagonal term (full weights).
    """
    r = mesh.r
    h = np.diff(r)
    n = mesh.n
    diag = 1.0 / h[:-1] + 1.0 / h[1:]              # interior nodes 1..n-2
    off = -1.0 / h[1:-1]
    diag = diag + mesh.weights[1:-1] * mu / r[1:-1] ** 2
    if extra_diag is not None:
        diag = diag + extra_diag[1:-1]
    ab = np.zeros((2, n - 2))
    ab[0] = diag
    ab[1, :-1] = off
    return ab


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(6)


def weighted_mass_banded(mesh: RadialMesh, weight) -> np.ndarray:
    """Consistent P1 mass of a weight profile, interior nodes only.

    Element integrals int w(r) phi_i phi_j use six-point Gauss-Legendre
    when ``weight`` is a callable of r (near-exact for smooth profiles,
    including 1/r^2 on geometrically graded elements), or the linear
    interpolant of node samples otherwise.  With a consistent numerator
    the Rayleigh quotient against mode_form_banded is a true subspace
    quotient: discrete maxima are lower bounds for the continuum values
    and increase under midpoint refinement.
    """
    r = mesh.r
    h = np.diff(r)
    n = mesh.n
    diag = np.zeros(n)
    off = np.zeros(n - 1)
    if callable(weight):
        a, b = r[:-1], r[1:]
        mid = 0.5 * (a + b)
        for t, gw in zip(_GL_NODES, _GL_WEIGHTS):
            rt = mid + 0.5 * t * h
            om = np.asarray(weight(rt), dtype=float) * gw * 0.5 * h
            pi = (b - rt) / h
            pj = (rt - a) / h
            diag[:-1] += om * pi ** 2
            diag[1:] += om * pj ** 2
            off += om * pi * pj
    else:
        v = np.asarray(weight, dtype=float)
        diag[:-1] += h * (3.0 * v[:-1] + v[1:]) / 12.0
        diag[1:] += h * (v[:-1] + 3.0 * v[1:]) / 12.0
        off[:] = h * (v[:-1] + v[1:]) / 12.0
    ab = np.zeros((2, n - 2))
    ab[0] = diag[1:-1]
    ab[1, :-1] = off[1:-1]
    return ab


@dataclass
class RayleighResult:
    value: float
    iterations: int
    converged: bool
    vector: np.ndarray  # interior-node components


def max_rayleigh(form_ab: np.ndarray, weight: np.ndarray,
                 tol: float = 1e-8, max_iter: int = 400,
                 x0: np.ndarray | None = None) -> RayleighResult:
    """Largest theta with  N x = theta K x  by power iteration on K^{-1} N.

    ``weight`` is the interior-node numerator: either lumped diagonal
    weights (1d, quadrature folded in) or a consistent mass in lower
    banded (2, m) storage.  Deterministic all-ones start unless a warm
    start is given.
    """
    m = form_ab.shape[1]
    banded_n = weight.ndim == 2

    def n_apply(x: np.ndarray) -> np.ndarray:
        return _banded_apply(weight, x) if banded_n else weight * x

    if np.all(weight <= 0.0):
        return RayleighResult(0.0, 0, True, np.zeros(m))
    x = np.ones(m) if x0 is None else np.array(x0, dtype=float)
    x /= np.linalg.norm(x)
    theta = 0.0
    for it in range(1, max_iter + 1):
        y = solveh_banded(form_ab, n_apply(x), lower=True)
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return RayleighResult(0.0, it, True, x)
        y /= ny
        num = float(np.dot(y, n_apply(y)))
        den = float(_form_apply_dot(form_ab, y))
        new_theta = num / den
        if it > 1 and abs(new_theta - theta) <= tol * max(abs(new_theta), 1e-300):
            return RayleighResult(new_theta, it, True, y)
        theta = new_theta
        x = y
    return RayleighResult(theta, max_iter, False, x)


def _banded_apply(ab: np.ndarray, x: np.ndarray) -> np.ndarray:
    d = ab[0]
    e = ab[1, :-1]
    y = d * x
    y[:-1] += e * x[1:]
    y[1:] += e * x[:-1]
    return y


def _form_apply_dot(ab: np.ndarray, x: np.ndarray) -> float:
    return float(np.dot(x, _banded_apply(ab, x)))


def _banded_to_dense(ab: np.ndarray) -> np.ndarray:
    m = ab.shape[1]
    M = np.zeros((m, m))
    M[np.arange(m), np.arange(m)] = ab[0]
    idx = np.arange(m - 1)
    M[idx, idx + 1] = ab[1, :-1]
    M[idx + 1, idx] = ab[1, :-1]
    return M


def brute_max_rayleigh(mesh: RadialMesh, mu: float,
                       weight_full: np.ndarray) -> float:
    """Dense generalized eigensolve oracle for the same quotient.

    Independent route (LAPACK eigh on the full pencil) used to validate
    the power iteration; intended for coarse meshes.  ``weight_full``
    is a full-length lumped diagonal, or an interior banded mass from
    weighted_mass_banded.
    """
    ab = mode_form_banded(mesh, mu)
    K = _banded_to_dense(ab)
    if weight_full.ndim == 2:
        N = _banded_to_dense(weight_full)
    else:
        N = np.diag(weight_full[1:-1])
    vals = eigh(N, K, eigvals_only=True)
    return float(vals[-1])
