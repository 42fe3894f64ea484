"""CSV and SVG output.

CSV columns are fixed and numbers use 9 significant digits, so identical
inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import io
from collections import defaultdict
from html import escape

import numpy as np

from .errors import ParameterError
from .fluid import FluidSolution
from .montecarlo import EnsembleResult

SIM_COLUMNS = ["model", "K", "c", "n", "rep_count", "t", "class", "alpha_mean", "alpha_stderr"]
FLUID_COLUMNS = ["model", "K", "c", "t", "class", "alpha"]


def fmt(x) -> str:
    return f"{float(x):.9g}"


def ensemble_rows(ens: EnsembleResult) -> list[list[str]]:
    s = ens.spec
    rows = []
    for j, t in enumerate(ens.grid):
        for k, label in enumerate(s.classes):
            rows.append([s.kind.value, str(s.K), fmt(s.c), str(s.n), str(ens.reps), fmt(t), str(label),
                         fmt(ens.mean_alpha[j, k]), fmt(ens.stderr_alpha[j, k])])
    return rows


def fluid_rows(fl: FluidSolution) -> list[list[str]]:
    """Rows for a single-c or batched solution, c-major then time then class."""
    cs = np.atleast_1d(fl.c)
    alpha = fl.alpha.reshape((len(cs),) + fl.alpha.shape[-2:])
    rows = []
    for ci, c in enumerate(cs):
        for j, t in enumerate(fl.grid):
            for k, label in enumerate(fl.classes):
                rows.append([fl.kind.value, str(fl.K), fmt(c), fmt(t), str(label), fmt(alpha[ci, j, k])])
    return rows


def render_csv(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    writer.writerows(rows)
    return buf.getvalue()


def parse_csv(text: str, columns) -> list[dict]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != list(columns):
        raise ParameterError(f"expected columns {','.join(columns)}, got {reader.fieldnames}")
    return list(reader)


def single_value(rows, key):
    values = {r[key] for r in rows}
    if len(values) != 1:
        raise ParameterError(f"expected a single {key} value, found {sorted(values)}")
    return values.pop()


def table_from_rows(rows: list[dict], value: str):
    """Turn rows of one (model, K, c) into ``(grid, classes, matrix)``."""
    times = sorted({float(r["t"]) for r in rows})
    classes = sorted({int(r["class"]) for r in rows})
    t_index = {t: j for j, t in enumerate(times)}
    k_index = {k: i for i, k in enumerate(classes)}
    out = np.full((len(times), len(classes)), np.nan)
    for r in rows:
        out[t_index[float(r["t"])], k_index[int(r["class"])]] = float(r[value])
    if np.isnan(out).any():
        raise ParameterError("CSV does not cover every (t, class) pair")
    return np.array(times), classes, out


# --------------------------------------------------------------------------- SVG

_W, _H, _PAD = 640, 420, 56
_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"]


def line_plot(series: dict, xlabel: str, ylabel: str, title: str = "") -> str:
    """Minimal SVG with axes, one polyline per series, and a legend."""
    xs = np.concatenate([np.asarray(x, float) for x, _ in series.values()])
    ys = np.concatenate([np.asarray(y, float) for _, y in series.values()])
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = 0.0, max(float(ys.max()), 1e-12)
    if x1 == x0:
        x1 = x0 + 1.0

    def sx(x):
        return _PAD + (x - x0) / (x1 - x0) * (_W - 2 * _PAD)

    def sy(y):
        return _H - _PAD - (y - y0) / (y1 - y0) * (_H - 2 * _PAD)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" viewBox="0 0 {_W} {_H}">',
             f'<rect width="{_W}" height="{_H}" fill="white"/>',
             f'<line x1="{_PAD}" y1="{_H - _PAD}" x2="{_W - _PAD}" y2="{_H - _PAD}" stroke="black"/>',
             f'<line x1="{_PAD}" y1="{_PAD}" x2="{_PAD}" y2="{_H - _PAD}" stroke="black"/>']
    for i in range(5):
        xv = x0 + (x1 - x0) * i / 4
        yv = y0 + (y1 - y0) * i / 4
        parts.append(f'<text x="{sx(xv):.2f}" y="{_H - _PAD + 16}" font-size="11" text-anchor="middle">{xv:.4g}</text>')
        parts.append(f'<text x="{_PAD - 6}" y="{sy(yv) + 4:.2f}" font-size="11" text-anchor="end">{yv:.3g}</text>')
    parts.append(f'<text x="{_W / 2}" y="{_H - 12}" font-size="13" text-anchor="middle">{escape(xlabel)}</text>')
    parts.append(f'<text x="16" y="{_H / 2}" font-size="13" text-anchor="middle" '
                 f'transform="rotate(-90 16 {_H / 2})">{escape(ylabel)}</text>')
    if title:
        parts.append(f'<text x="{_W / 2}" y="24" font-size="14" text-anchor="middle">{escape(title)}</text>')
    for i, (name, (x, y)) in enumerate(series.items()):
        color = _COLORS[i % len(_COLORS)]
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(np.asarray(x, float), np.asarray(y, float)))
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = _PAD + 16 * i
        parts.append(f'<line x1="{_W - _PAD - 90}" y1="{ly}" x2="{_W - _PAD - 70}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{_W - _PAD - 64}" y="{ly + 4}" font-size="11">{escape(str(name))}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def svg_from_rows(rows: list[dict], value: str) -> str:
    """Plot CSV rows: alpha against t for one c, or final alpha against c for a sweep."""
    model, K = single_value(rows, "model"), single_value(rows, "K")
    by_c = defaultdict(list)
    for r in rows:
        by_c[float(r["c"])].append(r)
    cs = sorted(by_c)
    if len(cs) == 1:
        grid, classes, table = table_from_rows(by_c[cs[0]], value)
        series = {f"class {k}": (grid, table[:, i]) for i, k in enumerate(classes)}
        return line_plot(series, "t", "alpha", f"{model} K={K} c={cs[0]:g}")
    finals = [table_from_rows(by_c[c], value) for c in cs]
    classes = finals[0][1]
    series = {f"class {k}": (cs, [f[2][-1, i] for f in finals]) for i, k in enumerate(classes)}
    return line_plot(series, "c", "alpha at t=1", f"{model} K={K}")
