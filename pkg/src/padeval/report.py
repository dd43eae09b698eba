"""Report serialization: JSON, DET CSV, DET SVG and text tables.

JSON reports carry a `display` block (rates as percentages rounded to two
decimals) plus a `values` block with full-precision numbers; DET points
go to CSV and to an SVG with normal-deviate (probit) axes. The SVG is
generated inline (polylines and text only) to stay dependency-free.
"""

from __future__ import annotations

import json
from statistics import NormalDist
from typing import Iterable, Sequence

from .metrics import AGGREGATE_FIELDS, DetPoint, MetricsReport

_NORM = NormalDist()

_RATE_FIELDS = ("d_eer", "bpcer10", "bpcer20", "bpcer100", "hter", "auc")


def report_to_dict(report: MetricsReport) -> dict:
    values = {name: getattr(report, name) for name in _RATE_FIELDS}
    values["eer_threshold"] = report.eer_threshold
    display = {name: round(100.0 * getattr(report, name), 2) for name in _RATE_FIELDS}
    return {
        "display_percent": display,
        "values": values,
        "det_point_count": len(report.det),
        "conventions": dict(report.conventions),
    }


def report_to_json(report: MetricsReport) -> str:
    return json.dumps(report_to_dict(report), sort_keys=True, indent=2) + "\n"


def det_to_csv(points: Sequence[DetPoint]) -> str:
    lines = ["threshold,apcer,bpcer"]
    lines += [f"{p.threshold!r},{p.apcer!r},{p.bpcer!r}" for p in points]
    return "\n".join(lines) + "\n"


def det_from_csv(text: str) -> list[DetPoint]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].split(",")[:3] != ["threshold", "apcer", "bpcer"]:
        raise ValueError("not a DET csv (missing header)")
    points = []
    for ln in lines[1:]:
        t, a, b = ln.split(",")[:3]
        points.append(DetPoint(float(t), float(a), float(b)))
    return points


# -- DET plotting ------------------------------------------------------

_TICKS = (0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.10, 0.20, 0.40)
_PROBIT_CLAMP = (1e-4, 1.0 - 1e-4)
_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _probit(rate: float) -> float:
    lo, hi = _PROBIT_CLAMP
    return _NORM.inv_cdf(min(max(rate, lo), hi))


def det_svg(curves: Iterable[tuple[str, Sequence[DetPoint]]], title: str = "DET curve") -> str:
    """Render one SVG overlaying DET curves on probit axes.

    `curves` is a list of (label, points); one polyline and one legend
    entry is emitted per curve. Axes are labeled APCER / BPCER in %.
    """
    curves = list(curves)
    width, height, margin = 520, 480, 70
    x0, x1 = _probit(_PROBIT_CLAMP[0]), _probit(_TICKS[-1])
    y0, y1 = x0, x1

    def sx(rate):
        return margin + (_probit(rate) - x0) / (x1 - x0) * (width - 2 * margin)

    def sy(rate):
        return height - margin - (_probit(rate) - y0) / (y1 - y0) * (height - 2 * margin)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="24" text-anchor="middle" font-size="15">{title}</text>',
    ]
    for tick in _TICKS:
        tx, ty = sx(tick), sy(tick)
        label = f"{tick * 100:g}"
        parts.append(
            f'<line x1="{tx:.1f}" y1="{margin}" x2="{tx:.1f}" y2="{height - margin}" '
            f'stroke="#dddddd"/>'
        )
        parts.append(
            f'<line x1="{margin}" y1="{ty:.1f}" x2="{width - margin}" y2="{ty:.1f}" '
            f'stroke="#dddddd"/>'
        )
        parts.append(
            f'<text x="{tx:.1f}" y="{height - margin + 18}" text-anchor="middle" '
            f'font-size="11">{label}</text>'
        )
        parts.append(
            f'<text x="{margin - 8}" y="{ty + 4:.1f}" text-anchor="end" font-size="11">{label}</text>'
        )
    parts.append(
        f'<rect x="{margin}" y="{margin}" width="{width - 2 * margin}" '
        f'height="{height - 2 * margin}" fill="none" stroke="black"/>'
    )
    parts.append(
        f'<text x="{width / 2:.1f}" y="{height - 16}" text-anchor="middle" '
        f'font-size="13">APCER (%)</text>'
    )
    parts.append(
        f'<text x="18" y="{height / 2:.1f}" text-anchor="middle" font-size="13" '
        f'transform="rotate(-90 18 {height / 2:.1f})">BPCER (%)</text>'
    )
    for i, (label, points) in enumerate(curves):
        color = _PALETTE[i % len(_PALETTE)]
        coords = " ".join(f"{sx(p.apcer):.2f},{sy(p.bpcer):.2f}" for p in points)
        parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = margin + 16 + 16 * i
        parts.append(
            f'<line x1="{width - margin - 150}" y1="{ly - 4}" x2="{width - margin - 125}" '
            f'y2="{ly - 4}" stroke="{color}" stroke-width="1.5"/>'
        )
        parts.append(
            f'<text x="{width - margin - 118}" y="{ly}" font-size="11" class="legend">{label}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# -- text tables -------------------------------------------------------

def format_table(headers: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    def fmt(row):
        return "  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip()
    lines = [fmt(headers), fmt(["-" * w for w in widths])]
    lines += [fmt(row) for row in rows]
    return "\n".join(lines) + "\n"


def _pct(value: float) -> str:
    return f"{100.0 * value:.2f}"


def result_table(
    fold_reports: dict[str, dict[str, MetricsReport]],
    aggregates: dict[str, dict[str, tuple[float, float]]],
) -> str:
    """Per-fold metric rows plus an Avg.+/-Std. row per model."""
    headers = ["model", "fold"] + [f.upper() for f in AGGREGATE_FIELDS]
    rows = []
    models = sorted({m for per_model in fold_reports.values() for m in per_model})
    for model in models:
        for fold_id, per_model in fold_reports.items():
            if model not in per_model:
                continue
            rep = per_model[model]
            rows.append([model, fold_id] + [_pct(getattr(rep, f)) for f in AGGREGATE_FIELDS])
        if model in aggregates:
            agg = aggregates[model]
            rows.append(
                [model, "Avg.+/-Std."]
                + [f"{_pct(agg[f][0])}+/-{_pct(agg[f][1])}" for f in AGGREGATE_FIELDS]
            )
    return format_table(headers, rows)
