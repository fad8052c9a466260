"""Writing reports (CSV/JSON) and curve overlays (SVG)."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .analytics import CoefficientStats, FitReport, LayerCountStats
from .erf_model import ErfSumModel, evaluate
from .errors import InvalidArgumentError
from .fitter import step_vertices
from .market_curves import StepCurve

FIT_COLUMNS = ["date", "hour", "status", "P", "P_appr", "abs_error", "quantity",
               "quantity_appr", "above_cap", "reason"]
TIMING_COLUMNS = ["load_seconds", "fit_seconds", "intersect_seconds"]


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _fit_report_dict(report: FitReport, include_timing: bool) -> dict:
    columns = FIT_COLUMNS + (TIMING_COLUMNS if include_timing else [])
    return {
        "config": report.config,
        "aggregates": report.aggregates(include_timing),
        "records": [{c: getattr(r, c) for c in columns} for r in report.records],
    }


def _fit_report_csv(report: FitReport, include_timing: bool) -> str:
    columns = FIT_COLUMNS + (TIMING_COLUMNS if include_timing else [])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in report.records:
        w.writerow([_cell(getattr(r, c)) for c in columns])
    w.writerow([])
    w.writerow(["aggregate", "value"])
    for key, value in report.aggregates(include_timing).items():
        w.writerow([key, _cell(value)])
    for key, value in report.config.items():
        w.writerow([f"config.{key}", _cell(value)])
    return buf.getvalue()


def _coeff_csv(stats: CoefficientStats) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    columns = list(stats.rows[0]) if stats.rows else ["index"]
    w.writerow(["side"] + columns)
    for row in stats.rows:
        w.writerow([stats.side] + [_cell(row[c]) for c in columns])
    return buf.getvalue()


def _layer_csv(stats: LayerCountStats) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["dimension", "key", "mean_offers", "mean_bids"])
    for dim, table in (("hour", stats.by_hour), ("weekday", stats.by_weekday),
                       ("month", stats.by_month)):
        for key, (offers, bids) in table.items():
            w.writerow([dim, key, _cell(offers), _cell(bids)])
    return buf.getvalue()


def render_report(report, fmt: str = "csv", include_timing: bool = False) -> str:
    """Serialize a report deterministically.

    Timing fields change from run to run, so they are left out unless
    ``include_timing`` is set.
    """
    if fmt not in ("csv", "json"):
        raise InvalidArgumentError(f"unknown report format {fmt!r}")
    if isinstance(report, FitReport):
        if fmt == "csv":
            return _fit_report_csv(report, include_timing)
        record = _fit_report_dict(report, include_timing)
    elif isinstance(report, CoefficientStats):
        if fmt == "csv":
            return _coeff_csv(report)
        record = asdict(report)
    elif isinstance(report, LayerCountStats):
        if fmt == "csv":
            return _layer_csv(report)
        record = {k: {str(kk): list(vv) for kk, vv in v.items()} for k, v in asdict(report).items()}
    else:
        raise InvalidArgumentError(f"cannot emit {type(report).__name__}")
    return json.dumps(record, indent=2) + "\n"


def emit_report(report, fmt: str, path, include_timing: bool = False) -> Path:
    path = Path(path)
    path.write_text(render_report(report, fmt, include_timing))
    return path


def read_fit_report_csv(path) -> tuple[list[dict], dict]:
    """Read back a FitReport CSV as (records, aggregates) with string values."""
    text = Path(path).read_text()
    head, _, tail = text.partition("\n\n")
    records = list(csv.DictReader(io.StringIO(head + "\n")))
    aggregates = {row["aggregate"]: row["value"] for row in csv.DictReader(io.StringIO(tail))}
    return records, aggregates


# SVG ----------------------------------------------------------------------


def _ticks(lo, hi, n=5):
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** np.floor(np.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=raw)
    start = np.ceil(lo / step) * step
    return list(np.arange(start, hi + step * 1e-9, step))


def render_curve_svg(step: StepCurve, model: ErfSumModel, path, samples: int = 600,
                     width: int = 800, height: int = 500, title: str | None = None) -> Path:
    """Overlay of a step curve and its fitted model as a standalone SVG file.

    The step curve is drawn through both ends of every plateau, the model is
    sampled at ``samples`` evenly spaced quantities.
    """
    if step.side != model.side:
        raise InvalidArgumentError(f"step curve is {step.side}, model is {model.side}")
    samples = max(int(samples), 500)
    sx, sy = step_vertices(step)
    mx = np.linspace(0.0, step.total_quantity, samples)
    my = np.asarray(evaluate(model, mx), dtype=float)
    x_hi = step.total_quantity
    y_lo = min(float(sy.min()), float(my.min()))
    y_hi = max(float(sy.max()), float(my.max()))
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    left, right, top, bottom = 70, 20, 40, 50
    pw, ph = width - left - right, height - top - bottom

    def px(x):
        return left + pw * np.asarray(x) / x_hi

    def py(y):
        return top + ph * (1.0 - (np.asarray(y) - y_lo) / (y_hi - y_lo))

    def points(xs, ys):
        return " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px(xs), py(ys)))

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>',
    ]
    for t in _ticks(0.0, x_hi):
        out.append(f'<text x="{float(px(t)):.2f}" y="{top + ph + 18}" font-size="11" '
                   f'text-anchor="middle">{t:g}</text>')
    for t in _ticks(y_lo, y_hi):
        out.append(f'<text x="{left - 6}" y="{float(py(t)) + 4:.2f}" font-size="11" '
                   f'text-anchor="end">{t:g}</text>')
    out.append(f'<text x="{left + pw / 2}" y="{height - 10}" font-size="12" '
               f'text-anchor="middle">quantity (MW)</text>')
    out.append(f'<text x="16" y="{top + ph / 2}" font-size="12" text-anchor="middle" '
               f'transform="rotate(-90 16 {top + ph / 2})">price (EUR)</text>')
    label = title or f"{step.side} curve, {len(model)} erf terms"
    out.append(f'<text x="{left + pw / 2}" y="24" font-size="14" text-anchor="middle">'
               f'{escape(label)}</text>')
    out.append(f'<polyline id="step" fill="none" stroke="#444" stroke-width="1" '
               f'points="{points(sx, sy)}"/>')
    out.append(f'<polyline id="fitted" fill="none" stroke="#d62728" stroke-width="1.5" '
               f'points="{points(mx, my)}"/>')
    out.append("</svg>")
    path = Path(path)
    path.write_text("\n".join(out) + "\n")
    return path
