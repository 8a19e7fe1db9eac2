"""Catalogue of right-hand sides for the resolvent experiments.

Sources are per-mode radial profiles: f(x) = sum_m c_m f_m(|x|) Y_m.
Each profile kind knows its support and its breakpoints (radii where it
is merely continuous), which the identity quadrature needs to keep its
fourth-order accuracy.  Specs are plain data so run configs can build
them from JSON.

The workhorse profile is the compactly supported C-infinity annulus
bump exp(-1/(t(1-t))) in the normalized position t: all one-sided
derivatives vanish where it meets zero, so it introduces no quadrature
breakpoints and no boundary terms at the support edges.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import SpecError

__all__ = [
    "SourceSpec",
    "SOURCE_KINDS",
    "smooth_annulus",
    "annulus_indicator",
    "gaussian_packet",
    "power_law",
    "radial_profile",
    "support",
    "breakpoints",
    "as_rhs",
    "source_cuts",
    "source_from_config",
    "source_to_config",
]

SOURCE_KINDS = ("smooth_annulus", "annulus", "gaussian", "power")


@dataclass(frozen=True)
class SourceSpec:
    """One angular mode of a source with a catalogued radial profile."""

    kind: str
    mode: int = 0
    coeff: complex = 1.0
    r_inner: float = 1.0      # smooth_annulus / annulus edges
    r_outer: float = 2.0
    center: float = 3.0       # gaussian
    width: float = 0.5
    exponent: float = 2.5     # power: f = r^-exponent
    label: str = ""

    def __post_init__(self):
        if self.kind not in SOURCE_KINDS:
            raise SpecError(f"unknown source kind {self.kind!r}; "
                            f"choose from {SOURCE_KINDS}")
        if self.kind in ("smooth_annulus", "annulus"):
            if not 0.0 < self.r_inner < self.r_outer:
                raise SpecError("annulus needs 0 < r_inner < r_outer")
        if self.kind == "gaussian" and self.width <= 0.0:
            raise SpecError("gaussian width must be positive")


def smooth_annulus(r_inner: float = 1.0, r_outer: float = 2.0,
                   mode: int = 0, coeff: complex = 1.0) -> SourceSpec:
    return SourceSpec("smooth_annulus", mode, coeff, r_inner, r_outer)


def annulus_indicator(r_inner: float = 1.0, r_outer: float = 2.0,
                      mode: int = 0, coeff: complex = 1.0) -> SourceSpec:
    return SourceSpec("annulus", mode, coeff, r_inner, r_outer)


def gaussian_packet(center: float = 3.0, width: float = 0.5,
                    mode: int = 0, coeff: complex = 1.0) -> SourceSpec:
    return SourceSpec("gaussian", mode, coeff, center=center, width=width)


def power_law(exponent: float = 2.5, mode: int = 0,
              coeff: complex = 1.0) -> SourceSpec:
    return SourceSpec("power", mode, coeff, exponent=exponent)


def radial_profile(spec: SourceSpec):
    """The radial factor as a vectorized callable of r."""
    if spec.kind == "smooth_annulus":
        a, b = spec.r_inner, spec.r_outer

        def bump(r):
            t = (np.asarray(r, dtype=float) - a) / (b - a)
            out = np.zeros_like(t)
            m = (t > 0.0) & (t < 1.0)
            out[m] = np.exp(-1.0 / (t[m] * (1.0 - t[m])))
            return out

        return bump
    if spec.kind == "annulus":
        a, b = spec.r_inner, spec.r_outer
        return lambda r: ((np.asarray(r) >= a) & (np.asarray(r) <= b)
                          ).astype(float)
    if spec.kind == "gaussian":
        c, s = spec.center, spec.width
        return lambda r: np.exp(-((np.asarray(r, dtype=float) - c) / s) ** 2)
    if spec.kind == "power":
        p = spec.exponent
        return lambda r: np.asarray(r, dtype=float) ** (-p)
    raise SpecError(spec.kind)  # pragma: no cover


def support(spec: SourceSpec) -> tuple[float, float]:
    """Support radii (effective for the Gaussian: center +/- 8 widths)."""
    if spec.kind in ("smooth_annulus", "annulus"):
        return (spec.r_inner, spec.r_outer)
    if spec.kind == "gaussian":
        return (max(spec.center - 8.0 * spec.width, 0.0),
                spec.center + 8.0 * spec.width)
    return (0.0, np.inf)


def breakpoints(spec: SourceSpec) -> tuple[float, ...]:
    """Radii where the profile loses smoothness (quadrature cut points)."""
    if spec.kind == "annulus":
        return (spec.r_inner, spec.r_outer)
    return ()


def as_rhs(specs) -> list[dict]:
    """Right-hand side items for the solver (mode/radial/coeff dicts)."""
    if isinstance(specs, SourceSpec):
        specs = [specs]
    return [{"mode": s.mode, "radial": radial_profile(s), "coeff": s.coeff}
            for s in specs]


def source_cuts(specs) -> tuple[float, ...]:
    if isinstance(specs, SourceSpec):
        specs = [specs]
    cuts: list[float] = []
    for s in specs:
        cuts.extend(breakpoints(s))
    return tuple(sorted(set(cuts)))


_FIELDS = ("kind", "mode", "coeff", "r_inner", "r_outer", "center", "width",
           "exponent", "label")


def source_from_config(cfg: dict) -> SourceSpec:
    """Build a spec from a JSON dict; complex coeff as [re, im]."""
    unknown = set(cfg) - set(_FIELDS)
    if unknown:
        raise SpecError(f"unrecognised source keys {sorted(unknown)}")
    kw = dict(cfg)
    coeff = kw.get("coeff", 1.0)
    if isinstance(coeff, (list, tuple)):
        kw["coeff"] = complex(coeff[0], coeff[1])
    return SourceSpec(**kw)


def source_to_config(spec: SourceSpec) -> dict:
    cfg = {"kind": spec.kind, "mode": spec.mode}
    c = complex(spec.coeff)
    cfg["coeff"] = [c.real, c.imag] if c.imag else c.real
    if spec.kind in ("smooth_annulus", "annulus"):
        cfg["r_inner"] = spec.r_inner
        cfg["r_outer"] = spec.r_outer
    elif spec.kind == "gaussian":
        cfg["center"] = spec.center
        cfg["width"] = spec.width
    elif spec.kind == "power":
        cfg["exponent"] = spec.exponent
    if spec.label:
        cfg["label"] = spec.label
    return cfg
