"""Deterministic emission of report tables: CSV, JSON and SVG plots.

Every emitter is a pure function of its input rows: no timestamps, no
environment lookups, stable key order, fixed float formatting.  Two runs
with the same reports produce byte-identical artifacts regardless of the
order the rows were generated in (rows are canonically sorted first), so
summary files can be diffed across machines and worker counts.
"""

from __future__ import annotations

import json
import math
from typing import Iterable, Sequence

import numpy as np

from .identities import IdentityResidual
from .model import SpecError

__all__ = [
    "REPORT_FORMATS",
    "report_row",
    "canonical_rows",
    "emit_report",
    "render_csv",
    "render_json",
    "svg_line_plot",
    "summary_document",
]

REPORT_FORMATS = ("csv", "json", "svg")

_LEAD_COLUMNS = ("kind", "lhs", "rhs", "ratio", "residual", "relative",
                 "notes")


def _clean(value):
    """JSON/CSV-safe value: finite floats stay floats, the rest strings;
    containers are cleaned recursively."""
    if isinstance(value, (bool, int, str)) or value is None:
        return value
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        if math.isfinite(value):
            return value
        return repr(value)
    if isinstance(value, (complex, np.complexfloating)):
        value = complex(value)
        return f"{value.real:.17g}{value.imag:+.17g}j"
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_clean(v) for v in value]
    return str(value)


def report_row(item) -> dict:
    """Flatten one report-like object into a scalar-valued row."""
    if isinstance(item, dict):
        row = dict(item)
    elif isinstance(item, IdentityResidual):
        row = {"kind": item.identity_id, "lhs": item.lhs, "rhs": item.rhs,
               "residual": item.residual, "relative": item.relative,
               "scale": item.scale,
               "boundary_correction": item.boundary_correction}
        row.update({f"term_{k}": v for k, v in item.terms.items()})
    elif hasattr(item, "as_row"):
        row = item.as_row()
    else:
        raise SpecError(f"cannot lay out a report row from {type(item)!r}")
    return {str(k): _clean(v) for k, v in row.items()}


def canonical_rows(reports: Iterable) -> list[dict]:
    rows = [report_row(x) for x in reports]
    rows.sort(key=lambda r: json.dumps(r, sort_keys=True, default=str))
    return rows


def _fmt_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    if isinstance(value, int):
        return str(value)
    text = str(value)
    if any(c in text for c in ",\"\n"):
        text = '"' + text.replace('"', '""') + '"'
    return text


def render_csv(rows: Sequence[dict]) -> bytes:
    """'.' decimals, LF line endings, header row, 17 significant digits."""
    keys = []
    seen = set()
    extra = set()
    for row in rows:
        extra.update(row.keys())
    for k in _LEAD_COLUMNS:
        if k in extra:
            keys.append(k)
            seen.add(k)
    keys.extend(sorted(extra - seen))
    lines = [",".join(keys)]
    for row in rows:
        lines.append(",".join(_fmt_cell(row.get(k)) for k in keys))
    return ("\n".join(lines) + "\n").encode()


def render_json(payload) -> bytes:
    return (json.dumps(payload, sort_keys=True, indent=2,
                       allow_nan=False, default=str) + "\n").encode()


def _axis_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
            "#8c564b", "#17becf", "#7f7f7f")


def svg_line_plot(series: Sequence[tuple], xlabel: str = "",
                  ylabel: str = "", title: str = "",
                  logx: bool = False, logy: bool = False,
                  width: int = 640, height: int = 420) -> str:
    """Self-contained SVG line plot: axes, ticks, legend, one polyline
    per (label, xs, ys) triple.  Non-finite points (and non-positive
    ones on log axes) are dropped per series."""
    if not series:
        raise SpecError("nothing to plot")
    ml, mr, mt, mb = 76, 18, 30, 52
    view_w, view_h = width - ml - mr, height - mt - mb

    def tx(v):
        return math.log10(v) if logx else v

    def ty(v):
        return math.log10(v) if logy else v

    cleaned = []
    for label, xs, ys in series:
        pts = []
        for x, y in zip(xs, ys):
            x, y = float(x), float(y)
            if not (math.isfinite(x) and math.isfinite(y)):
                continue
            if (logx and x <= 0.0) or (logy and y <= 0.0):
                continue
            pts.append((tx(x), ty(y)))
        if pts:
            cleaned.append((str(label), pts))
    if not cleaned:
        raise SpecError("no finite data to plot")
    all_x = [p[0] for _, pts in cleaned for p in pts]
    all_y = [p[1] for _, pts in cleaned for p in pts]
    x_lo, x_hi = min(all_x), max(all_x)
    y_lo, y_hi = min(all_y), max(all_y)
    if x_hi - x_lo < 1e-300:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    if y_hi - y_lo < 1e-300:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5
    pad = 0.04 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad

    def px(v):
        return ml + (v - x_lo) / (x_hi - x_lo) * view_w

    def py(v):
        return mt + (y_hi - v) / (y_hi - y_lo) * view_h

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
           f'height="{height}" viewBox="0 0 {width} {height}">',
           f'<rect width="{width}" height="{height}" fill="white"/>']
    if title:
        out.append(f'<text x="{width/2:.1f}" y="18" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="13">{title}</text>')
    # frame
    out.append(f'<rect x="{ml}" y="{mt}" width="{view_w}" height="{view_h}" '
               'fill="none" stroke="black" stroke-width="1"/>')
    for v in _axis_ticks(x_lo, x_hi):
        x = px(v)
        label = format(10.0 ** v if logx else v, ".3g")
        out.append(f'<line x1="{x:.2f}" y1="{mt+view_h}" x2="{x:.2f}" '
                   f'y2="{mt+view_h+5}" stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{mt+view_h+18}" '
                   'text-anchor="middle" font-family="sans-serif" '
                   f'font-size="11">{label}</text>')
    for v in _axis_ticks(y_lo, y_hi):
        y = py(v)
        label = format(10.0 ** v if logy else v, ".3g")
        out.append(f'<line x1="{ml-5}" y1="{y:.2f}" x2="{ml}" y2="{y:.2f}" '
                   'stroke="black"/>')
        out.append(f'<text x="{ml-8}" y="{y+4:.2f}" text-anchor="end" '
                   f'font-family="sans-serif" font-size="11">{label}</text>')
    if xlabel:
        out.append(f'<text x="{ml+view_w/2:.1f}" y="{height-12}" '
                   'text-anchor="middle" font-family="sans-serif" '
                   f'font-size="12">{xlabel}</text>')
    if ylabel:
        out.append(f'<text x="16" y="{mt+view_h/2:.1f}" '
                   'text-anchor="middle" font-family="sans-serif" '
                   f'font-size="12" transform="rotate(-90 16 '
                   f'{mt+view_h/2:.1f})">{ylabel}</text>')
    for i, (label, pts) in enumerate(cleaned):
        color = _PALETTE[i % len(_PALETTE)]
        path = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in pts)
        out.append(f'<polyline points="{path}" fill="none" '
                   f'stroke="{color}" stroke-width="1.5"/>')
    # legend, top right inside the frame
    lx, ly = ml + view_w - 160, mt + 10
    out.append(f'<rect x="{lx-6}" y="{ly-4}" width="160" '
               f'height="{16*len(cleaned)+8}" fill="white" stroke="black" '
               'stroke-width="0.5" opacity="0.85"/>')
    for i, (label, _) in enumerate(cleaned):
        color = _PALETTE[i % len(_PALETTE)]
        y = ly + 8 + 16 * i
        out.append(f'<line x1="{lx}" y1="{y}" x2="{lx+22}" y2="{y}" '
                   f'stroke="{color}" stroke-width="1.5"/>')
        out.append(f'<text x="{lx+28}" y="{y+4}" font-family="sans-serif" '
                   f'font-size="11">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _default_plot(rows: Sequence[dict]) -> str:
    xs, ys = [], []
    for i, row in enumerate(rows):
        x = row.get("lam")
        xs.append(float(x) if isinstance(x, (int, float)) else float(i))
        y = row.get("ratio", row.get("relative", 0.0))
        ys.append(float(y) if isinstance(y, (int, float)) else 0.0)
    return svg_line_plot([("ratio", xs, ys)], xlabel="lam", ylabel="ratio")


def emit_report(reports: Iterable, format: str) -> bytes:
    """Render reports to one deterministic artifact."""
    if format not in REPORT_FORMATS:
        raise SpecError(f"unknown report format {format!r}")
    rows = canonical_rows(reports)
    if format == "csv":
        return render_csv(rows)
    if format == "json":
        return render_json({"reports": rows})
    return _default_plot(rows).encode()


def summary_document(command: str, config: dict, rows: Sequence[dict],
                     failures: Sequence[str], seed: int,
                     extras: dict | None = None) -> dict:
    doc = {"command": command, "config": config, "seed": seed,
           "reports": list(rows), "failures": list(failures),
           "pass": not failures}
    if extras:
        doc["extras"] = {k: _clean(v) for k, v in extras.items()}
    return doc
