"""Problem descriptions, radial meshes and field containers.

Everything downstream works on a truncated radial domain [r_min, r_max]
with a graded mesh: geometric spacing below r = 1 to resolve the
singularity of the coefficients at the origin, uniform spacing beyond.
Angular directions never appear on a grid; fields are stored as bundles
of radial coefficients against an orthonormal angular basis (zonal
spherical harmonics for d = 3, Fourier modes for d = 2).
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

__all__ = [
    "ProblemSpec",
    "RadialMesh",
    "RadialField",
    "ModeIndex",
    "EstimateReport",
    "SpecError",
    "validate_spec",
    "build_mesh",
    "geometric_mesh",
    "trapezoid_weights",
    "spec_hash",
    "DEFAULT_NODES",
]

DEFAULT_NODES = 4096


class SpecError(ValueError):
    """Raised when a problem/mesh/multiplier description is inconsistent."""


@dataclass(frozen=True)
class ProblemSpec:
    """Frequency, absorption and truncation data for one resolvent problem.

    The equation is (grad + iA)^2 u + V u + (lam +/- i eps) u = f; ``sign``
    selects the branch of the absorption term.
    """

    d: int
    lam: float
    eps: float
    sign: str = "plus"
    r_min: float = 1e-3
    r_max: float = 64.0
    mode_cutoff: int = 8

    @property
    def z(self) -> complex:
        return complex(self.lam, self.eps if self.sign == "plus" else -self.eps)

    @property
    def beta(self) -> float:
        # exponent of the half-line reduction w = r^beta u
        return 0.5 * (self.d - 1)

    def with_(self, **kw) -> "ProblemSpec":
        return replace(self, **kw)


def validate_spec(spec: ProblemSpec) -> None:
    """Reject inconsistent problem descriptions.

    Raises SpecError naming the offending field. lam <= 0 is allowed only
    with eps > 0 (the resolvent is then taken off the positive spectrum).
    """
    if spec.d not in (2, 3):
        raise SpecError(f"d must be 2 or 3, got d={spec.d}")
    if spec.sign not in ("plus", "minus"):
        raise SpecError(f"sign must be 'plus' or 'minus', got {spec.sign!r}")
    if not (spec.r_min > 0.0):
        raise SpecError(f"r_min must be positive, got r_min={spec.r_min}")
    if not (spec.r_min < spec.r_max):
        raise SpecError(f"need r_min < r_max, got [{spec.r_min}, {spec.r_max}]")
    if not (spec.r_min < 1.0 < spec.r_max):
        raise SpecError(
            f"truncation must bracket r = 1, got [{spec.r_min}, {spec.r_max}]"
        )
    if spec.eps < 0.0:
        raise SpecError(f"eps must be >= 0, got eps={spec.eps}")
    if spec.lam == 0.0 and spec.eps == 0.0:
        raise SpecError("lam and eps cannot both vanish")
    if spec.lam <= 0.0 and spec.eps == 0.0:
        raise SpecError("lam <= 0 requires eps > 0")
    if spec.mode_cutoff < 0:
        raise SpecError(f"mode_cutoff must be >= 0, got {spec.mode_cutoff}")
    for name in ("lam", "eps", "r_min", "r_max"):
        if not math.isfinite(getattr(spec, name)):
            raise SpecError(f"{name} must be finite")


def spec_hash(spec: ProblemSpec, extra: dict | None = None) -> str:
    """Short stable hash identifying a problem (used for row provenance)."""
    payload = {
        "d": spec.d,
        "lam": spec.lam,
        "eps": spec.eps,
        "sign": spec.sign,
        "r_min": spec.r_min,
        "r_max": spec.r_max,
        "mode_cutoff": spec.mode_cutoff,
    }
    if extra:
        payload.update(extra)
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def trapezoid_weights(r: np.ndarray) -> np.ndarray:
    """Composite trapezoid weights on arbitrary (sorted) nodes."""
    w = np.zeros_like(r)
    h = np.diff(r)
    w[: -1] += 0.5 * h
    w[1:] += 0.5 * h
    return w


@dataclass(frozen=True)
class RadialMesh:
    """Graded radial nodes with trapezoid quadrature weights."""

    r: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        if r.ndim != 1 or r.size < 16:
            raise SpecError("mesh needs at least 16 one-dimensional nodes")
        if not np.all(np.diff(r) > 0.0):
            raise SpecError("mesh nodes must be strictly increasing")
        if not np.all(np.asarray(self.weights) > 0.0):
            raise SpecError("quadrature weights must be positive")

    @property
    def n(self) -> int:
        return self.r.size

    @property
    def r_min(self) -> float:
        return float(self.r[0])

    @property
    def r_max(self) -> float:
        return float(self.r[-1])

    def integrate(self, samples: np.ndarray) -> complex:
        """Quadrature of node samples over [r_min, r_max]."""
        return complex(np.sum(self.weights * samples))

    def cumulative(self, samples: np.ndarray) -> np.ndarray:
        """Running integral from r_min to each node (trapezoid)."""
        out = np.zeros(self.n, dtype=np.result_type(samples, float))
        seg = 0.5 * np.diff(self.r) * (samples[1:] + samples[:-1])
        out[1:] = np.cumsum(seg)
        return out

    def nearest_node(self, r0: float) -> int:
        return int(np.argmin(np.abs(self.r - r0)))

    def refined(self, factor: int = 2) -> "RadialMesh":
        """Mesh with (factor) times as many intervals, same grading policy."""
        r = self.r
        pieces = [r]
        for k in range(1, factor):
            t = k / factor
            # geometric interpolation below r=1 keeps the grading ratio,
            # linear above keeps the uniform spacing
            lo = r[:-1]
            hi = r[1:]
            mid = np.where(hi <= 1.0, lo * (hi / lo) ** t, lo + t * (hi - lo))
            pieces.append(mid)
        rr = np.unique(np.concatenate(pieces))
        return RadialMesh(rr, trapezoid_weights(rr))


def geometric_mesh(r_min: float, r_max: float, nodes: int) -> RadialMesh:
    """Purely geometric (log-uniform) mesh; used for wide-range eigenproblems."""
    if nodes < 16:
        raise SpecError("mesh needs at least 16 nodes")
    r = np.geomspace(r_min, r_max, nodes)
    return RadialMesh(r, trapezoid_weights(r))


def build_mesh(spec: ProblemSpec, nodes: int = DEFAULT_NODES) -> RadialMesh:
    """Default graded mesh: geometric on [r_min, 1], uniform on [1, r_max].

    The node budget is split so the spacings match at r = 1, which keeps
    the mesh function C^1 and second-order finite differences honest.
    """
    if nodes < 16:
        raise SpecError("mesh needs at least 16 nodes")
    span_log = math.log(1.0 / spec.r_min)
    span_lin = spec.r_max - 1.0
    n_geo = max(8, int(round(nodes * span_log / (span_log + span_lin))))
    n_geo = min(n_geo, nodes - 8)
    n_lin = nodes - n_geo
    r_geo = np.geomspace(spec.r_min, 1.0, n_geo + 1)
    r_lin = np.linspace(1.0, spec.r_max, n_lin)
    r = np.concatenate([r_geo[:-1], r_lin])
    return RadialMesh(r, trapezoid_weights(r))


@dataclass(frozen=True)
class ModeIndex:
    """Angular mode label: degree ell of a zonal harmonic (d=3) or the
    Fourier index m (d=2, possibly negative)."""

    d: int
    index: int

    def __post_init__(self):
        if self.d not in (2, 3):
            raise SpecError(f"ModeIndex.d must be 2 or 3, got {self.d}")
        if self.d == 3 and self.index < 0:
            raise SpecError("zonal degree must be >= 0 for d = 3")

    def angular_eigenvalue(self, flux: float = 0.0) -> float:
        """Eigenvalue of -Laplace_sphere on this mode, with optional
        Aharonov-Bohm flux shift in d = 2."""
        if self.d == 3:
            return float(self.index * (self.index + 1))
        return float((self.index + flux) ** 2)


@dataclass
class RadialField:
    """One angular mode of a field, sampled on the mesh.

    ``reduced`` marks half-line normalization: values are w = r^beta u
    rather than the radial coefficient u itself (beta = (d-1)/2).
    """

    mode: ModeIndex
    values: np.ndarray
    reduced: bool = False

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if not np.all(np.isfinite(self.values.view(float))):
            raise SpecError("field samples must be finite")

    def to_reduced(self, mesh: RadialMesh) -> "RadialField":
        if self.reduced:
            return self
        beta = 0.5 * (self.mode.d - 1)
        return RadialField(self.mode, self.values * mesh.r**beta, reduced=True)

    def from_reduced(self, mesh: RadialMesh) -> "RadialField":
        if not self.reduced:
            return self
        beta = 0.5 * (self.mode.d - 1)
        return RadialField(self.mode, self.values / mesh.r**beta, reduced=False)


@dataclass
class EstimateReport:
    """One verified inequality: assembled left/right sides and their ratio."""

    kind: str
    lhs: float
    rhs: float
    params: dict = field(default_factory=dict)
    notes: str = ""

    def __post_init__(self):
        if not (self.rhs > 0.0):
            raise SpecError(f"estimate rhs must be positive, got {self.rhs}")
        if self.lhs < 0.0:
            raise SpecError(f"estimate lhs must be >= 0, got {self.lhs}")

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs

    def as_row(self) -> dict:
        row = {"kind": self.kind, "lhs": self.lhs, "rhs": self.rhs,
               "ratio": self.ratio, "notes": self.notes}
        row.update({k: v for k, v in self.params.items()})
        return row
