"""Minimal deterministic SVG charts for result CSVs."""
from __future__ import annotations

import csv
import io
import math
from pathlib import Path as FsPath
from typing import Dict, List, Optional, Sequence, Tuple

from .estimators import sup_abs_tail_analytic
from .harness import CSV_FIELDS

PLOT_KINDS = ("cov-decay", "tau-scan", "sup-tail")
WIDTH, HEIGHT = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 70, 160, 30, 50
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
          "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#637939")
LOG_FLOOR = 1e-4


class CsvFormatError(ValueError):
    pass


def read_results(text: str) -> List[Dict[str, object]]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(header) != CSV_FIELDS:
        raise CsvFormatError(f"row 1: header must be {','.join(CSV_FIELDS)}")
    rows = []
    for lineno, raw in enumerate(reader, 2):
        if len(raw) != len(CSV_FIELDS):
            raise CsvFormatError(f"row {lineno}: expected {len(CSV_FIELDS)} fields, got {len(raw)}")
        rec = dict(zip(CSV_FIELDS, raw))
        try:
            for key in ("r", "C", "value", "std_error"):
                rec[key] = float(rec[key]) if rec[key] != "" else None
            for key in ("N", "n", "n_samples"):
                rec[key] = int(rec[key]) if rec[key] != "" else None
        except ValueError:
            raise CsvFormatError(f"row {lineno}: non-numeric field in {raw!r}") from None
        if rec["value"] is None:
            raise CsvFormatError(f"row {lineno}: missing value")
        rows.append(rec)
    return rows


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _tick_label(v: float) -> str:
    return f"{v:.3g}"


class _Axes:
    def __init__(self, xlim, ylim, logy=False):
        self.x0, self.x1 = xlim
        self.logy = logy
        if logy:
            ylim = (math.log10(ylim[0]), math.log10(ylim[1]))
        self.y0, self.y1 = ylim
        if self.x1 == self.x0:
            self.x0, self.x1 = self.x0 - 1, self.x1 + 1
        if self.y1 == self.y0:
            self.y0, self.y1 = self.y0 - 1, self.y1 + 1

    def px(self, x):
        return LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)

    def py(self, y):
        if self.logy:
            y = math.log10(max(y, LOG_FLOOR))
        return HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)


def _frame(title: str, xlabel: str, ylabel: str, ax: Optional[_Axes]) -> List[str]:
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
           f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           f'<text x="{WIDTH / 2:.0f}" y="18" text-anchor="middle">{title}</text>',
           f'<line class="axis" x1="{LEFT}" y1="{HEIGHT - BOTTOM}" x2="{WIDTH - RIGHT}" '
           f'y2="{HEIGHT - BOTTOM}" stroke="black"/>',
           f'<line class="axis" x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{HEIGHT - BOTTOM}" '
           f'stroke="black"/>',
           f'<text x="{(LEFT + WIDTH - RIGHT) / 2:.0f}" y="{HEIGHT - 12}" '
           f'text-anchor="middle">{xlabel}</text>',
           f'<text x="16" y="{(TOP + HEIGHT - BOTTOM) / 2:.0f}" text-anchor="middle" '
           f'transform="rotate(-90 16 {(TOP + HEIGHT - BOTTOM) / 2:.0f})">{ylabel}</text>']
    if ax is None:
        return out
    for j in range(5):
        xv = ax.x0 + (ax.x1 - ax.x0) * j / 4
        x = ax.px(xv)
        out.append(f'<line x1="{_fmt(x)}" y1="{HEIGHT - BOTTOM}" x2="{_fmt(x)}" '
                   f'y2="{HEIGHT - BOTTOM + 5}" stroke="black"/>')
        out.append(f'<text x="{_fmt(x)}" y="{HEIGHT - BOTTOM + 18}" '
                   f'text-anchor="middle">{_tick_label(xv)}</text>')
        yv = ax.y0 + (ax.y1 - ax.y0) * j / 4
        label = 10**yv if ax.logy else yv
        y = HEIGHT - BOTTOM - j / 4 * (HEIGHT - TOP - BOTTOM)
        out.append(f'<line x1="{LEFT - 5}" y1="{_fmt(y)}" x2="{LEFT}" y2="{_fmt(y)}" '
                   f'stroke="black"/>')
        out.append(f'<text x="{LEFT - 8}" y="{_fmt(y + 4)}" '
                   f'text-anchor="end">{_tick_label(label)}</text>')
    return out


Series = Tuple[str, List[Tuple[float, float, float]]]


def _chart(title, xlabel, ylabel, points: Sequence[Series], logy=False,
           curves: Sequence[Series] = ()) -> str:
    xs = [p[0] for _, pts in list(points) + list(curves) for p in pts]
    if not points or not any(pts for _, pts in points):
        body = _frame(title, xlabel, ylabel, None)
        body.append(f'<text class="no-data" x="{(LEFT + WIDTH - RIGHT) / 2:.0f}" '
                    f'y="{(TOP + HEIGHT - BOTTOM) / 2:.0f}" text-anchor="middle">no data</text>')
        return "\n".join(body + ["</svg>"]) + "\n"
    ys = []
    for _, pts in list(points) + list(curves):
        for _, y, e in pts:
            ys += [y - e, y + e]
    if logy:
        ys = [max(y, LOG_FLOOR) for y in ys]
        ylim = (min(ys), max(ys) * 1.5)
    else:
        ylim = (min(0.0, min(ys)), max(ys) * 1.05 if max(ys) > 0 else 1.0)
    ax = _Axes((min(xs), max(xs)), ylim, logy)
    body = _frame(title, xlabel, ylabel, ax)
    for k, (name, pts) in enumerate(curves):
        color = COLORS[k % len(COLORS)]
        d = " ".join(f"{'M' if j == 0 else 'L'}{_fmt(ax.px(x))},{_fmt(ax.py(y))}"
                     for j, (x, y, _) in enumerate(pts))
        body.append(f'<path class="curve" d="{d}" fill="none" stroke="{color}"/>')
    for k, (name, pts) in enumerate(points):
        color = COLORS[(k + len(curves)) % len(COLORS)]
        if len(pts) > 1 and not curves:
            d = " ".join(f"{'M' if j == 0 else 'L'}{_fmt(ax.px(x))},{_fmt(ax.py(y))}"
                         for j, (x, y, _) in enumerate(pts))
            body.append(f'<path d="{d}" fill="none" stroke="{color}" stroke-opacity="0.5"/>')
        for x, y, e in pts:
            cx = _fmt(ax.px(x))
            if e > 0:
                body.append(f'<line class="errorbar" x1="{cx}" y1="{_fmt(ax.py(y - e))}" '
                            f'x2="{cx}" y2="{_fmt(ax.py(y + e))}" stroke="{color}"/>')
            body.append(f'<circle class="marker" cx="{cx}" cy="{_fmt(ax.py(y))}" r="3" '
                        f'fill="{color}"/>')
        ly = TOP + 16 * (k + len(curves))
        body.append(f'<text x="{WIDTH - RIGHT + 10}" y="{ly + 10}" fill="{color}">{name}</text>')
    for k, (name, _) in enumerate(curves):
        body.append(f'<text x="{WIDTH - RIGHT + 10}" y="{TOP + 16 * k + 10}" '
                    f'fill="{COLORS[k % len(COLORS)]}">{name}</text>')
    return "\n".join(body + ["</svg>"]) + "\n"


def _group(rows, label, key_fields, x_field):
    groups: Dict[tuple, list] = {}
    for rec in rows:
        if rec["label"] != label or rec[x_field] is None:
            continue
        key = tuple(rec[f] for f in key_fields)
        groups.setdefault(key, []).append(
            (float(rec[x_field]), rec["value"], rec["std_error"] or 0.0))
    return [(key, sorted(pts)) for key, pts in sorted(groups.items(), key=lambda kv: str(kv[0]))]


def render(rows, kind: str) -> str:
    if kind == "cov-decay":
        series = [(f"r={key[0]:.4g}", [(x, abs(y), e) for x, y, e in pts])
                  for key, pts in _group(rows, "cov", ("r",), "n")]
        return _chart("|E[h^n_r h^n_1]| vs n", "n", "|covariance|", series, logy=True)
    if kind == "tau-scan":
        series = [(f"r={key[0]:.3g} C={key[1]:.3g}", pts)
                  for key, pts in _group(rows, "p_tau_lt_1", ("r", "C"), "N")]
        return _chart("P(tau_{r,C,N} < 1) vs N", "N", "P(tau < 1)", series)
    if kind == "sup-tail":
        points = [("Monte Carlo", pts) for _, pts in _group(rows, "sup_tail_mc", (), "C")]
        points = [p for p in points if p[1]]
        curves = []
        if points:
            cs = [x for x, _, _ in points[0][1]]
            lo, hi = min(cs), max(cs)
            grid = [lo + (hi - lo) * j / 100 for j in range(101)] if hi > lo else [lo]
            curves = [("analytic", [(c, sup_abs_tail_analytic(c), 0.0) for c in grid])]
        return _chart("P(sup |beta| > C)", "C", "probability", points, curves=curves)
    raise ValueError(f"unknown plot kind {kind!r}; allowed: {', '.join(PLOT_KINDS)}")


def infer_kind(rows) -> Optional[str]:
    kinds = {rec["experiment"] for rec in rows}
    if len(kinds) == 1 and next(iter(kinds)) in PLOT_KINDS:
        return next(iter(kinds))
    return None


def emit_plot(csv_path, kind: Optional[str], out_path) -> None:
    rows = read_results(FsPath(csv_path).read_text(encoding="utf-8"))
    kind = kind or infer_kind(rows) or (None if rows else "cov-decay")
    if kind is None:
        raise ValueError("cannot infer plot kind from CSV; pass one explicitly")
    FsPath(out_path).write_text(render(rows, kind), encoding="utf-8", newline="")
