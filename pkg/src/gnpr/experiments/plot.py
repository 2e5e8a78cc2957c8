"""Static SVG line plots of the experiment CSVs. Purely presentational."""
from __future__ import annotations

import csv
import io
import math
from pathlib import Path

from ..errors import InvalidArgumentError

__all__ = ["PlotError", "PLOT_KINDS", "read_result_csv", "emit_plot"]

# kind -> (x column, y column, series column, log-scale y)
PLOT_KINDS = {
    "convergence": ("iteration", "relative_error", "algorithm", True),
    "success-rate": ("m_over_n", "rate", "ensemble", False),
    "noise": ("achieved_snr_db", "mse_db", "noise_kind", False),
}
_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"]
_LEGEND = {"gn": "Gauss-Newton", "wf": "Wirtinger flow (reimplementation)"}
W, H = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 70, 20, 20, 50


class PlotError(ValueError):
    pass


def read_result_csv(path):
    """Rows of a result CSV as dicts, skipping ``#`` comment lines."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise PlotError(f"{path}: not a text file") from exc
    body = "".join(line for line in text.splitlines(keepends=True) if not line.startswith("#"))
    rows = list(csv.DictReader(io.StringIO(body)))
    if not rows:
        raise PlotError(f"{path}: no data rows")
    return rows


def _series(rows, xcol, ycol, scol, logy, path):
    missing = {xcol, ycol, scol} - set(rows[0])
    if missing:
        raise PlotError(f"{path}: missing columns {sorted(missing)}")
    out = {}
    for i, r in enumerate(rows, start=1):
        try:
            x, y = float(r[xcol]), float(r[ycol]) if r[ycol] != "" else math.nan
        except (TypeError, ValueError) as exc:
            raise PlotError(f"{path}: data row {i} is not numeric") from exc
        if logy:
            y = math.log10(y) if y > 0 else math.nan
        if math.isfinite(x) and math.isfinite(y):
            out.setdefault(r[scol], []).append((x, y))
    if not out:
        raise PlotError(f"{path}: nothing to plot")
    return out


def _ticks(lo, hi, count=5):
    if hi == lo:
        return [lo]
    return [lo + (hi - lo) * i / (count - 1) for i in range(count)]


def _svg(series, xlabel, ylabel, logy):
    xs = [p[0] for pts in series.values() for p in pts]
    ys = [p[1] for pts in series.values() for p in pts]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if logy:
        y0, y1 = math.floor(y0), math.ceil(y1)
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1
    pw, ph = W - LEFT - RIGHT, H - TOP - BOTTOM

    def px(x):
        return LEFT + (x - x0) / (x1 - x0) * pw

    def py(y):
        return TOP + (y1 - y) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="11">',
           f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#000"/>']
    for t in _ticks(x0, x1):
        out.append(f'<text x="{px(t):.1f}" y="{H - BOTTOM + 15}" text-anchor="middle">{t:.4g}</text>')
    yt = range(int(y0), int(y1) + 1) if logy and y1 - y0 <= 20 else _ticks(y0, y1)
    for t in yt:
        label = f"1e{int(t)}" if logy else f"{t:.4g}"
        out.append(f'<line x1="{LEFT}" x2="{LEFT + pw}" y1="{py(t):.1f}" y2="{py(t):.1f}" stroke="#ddd"/>')
        out.append(f'<text x="{LEFT - 5}" y="{py(t) + 4:.1f}" text-anchor="end">{label}</text>')
    out.append(f'<text x="{LEFT + pw / 2}" y="{H - 10}" text-anchor="middle">{xlabel}</text>')
    out.append(f'<text x="15" y="{TOP + ph / 2}" text-anchor="middle" '
               f'transform="rotate(-90 15 {TOP + ph / 2})">{ylabel}</text>')
    for i, (name, pts) in enumerate(series.items()):
        color = _COLORS[i % len(_COLORS)]
        coords = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in pts)
        out.append(f'<polyline class="series" data-name="{name}" fill="none" stroke="{color}" '
                   f'stroke-width="1.5" points="{coords}"/>')
        out.append(f'<text x="{LEFT + pw - 10}" y="{TOP + 15 + 14 * i}" text-anchor="end" fill="{color}">{_LEGEND.get(name, name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_plot(csv_path, kind, out_path=None):
    """Write an SVG next to ``csv_path`` (or to ``out_path``) and return its path."""
    if kind not in PLOT_KINDS:
        raise InvalidArgumentError(f"unknown plot kind {kind!r}; choose from {sorted(PLOT_KINDS)}")
    xcol, ycol, scol, logy = PLOT_KINDS[kind]
    series = _series(read_result_csv(csv_path), xcol, ycol, scol, logy, csv_path)
    out_path = Path(out_path) if out_path else Path(csv_path).with_suffix(".svg")
    out_path.write_text(_svg(series, xcol, ycol + (" (log10)" if logy else ""), logy), encoding="utf-8")
    return out_path
