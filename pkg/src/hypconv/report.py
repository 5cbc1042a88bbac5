"""Study output: CSV emission/round-trip and self-contained SVG plots."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .convergence import LevelResult, StudyResult

CSV_HEADER = "n_cells,dx,dt,error_l2,error_linf,succ_diff,stable"

# Line/marker palette; repeats after eight series.
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd",
           "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")


def _fmt(x) -> str:
    """17-significant-digit decimal form; round-trips doubles exactly."""
    if x is None:
        return ""
    if math.isinf(x):
        return "inf"
    return format(float(x), ".17g")


def emit_csv(result: StudyResult, path) -> Path:
    """Write one study as CSV: level rows plus fitted-quantity footer."""
    path = Path(path)
    lines = [CSV_HEADER]
    for lv in result.levels:
        err2 = "" if not lv.stable else _fmt(lv.error_l2)
        erri = "" if not lv.stable else _fmt(lv.error_linf)
        lines.append(
            f"{lv.n_cells},{_fmt(lv.dx)},{_fmt(lv.dt)},{err2},{erri},"
            f"{_fmt(lv.succ_diff)},{'true' if lv.stable else 'false'}"
        )
    lines.append(f"# slope={_fmt(result.slope)} intercept={_fmt(result.intercept)}")
    lines.append(f"# zeta_g={_fmt(result.zeta_g)} zeta_g1={_fmt(result.zeta_g1)}")
    lines.append(f"# gamma={'' if result.gamma is None else result.gamma}")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", newline="\n")
    return path


def read_study_csv(path) -> StudyResult:
    """Parse a CSV written by emit_csv back into a StudyResult skeleton."""
    text = Path(path).read_text()
    result = StudyResult(problem="", spatial="", stepper="", mode="",
                         prognostic="", norm="", eta_space=0.0, eta_time=0.0,
                         t_horizon=0.0)
    footer = {}
    for line in text.splitlines():
        if not line:
            continue
        if line.startswith("#"):
            for tok in line[1:].split():
                key, _, value = tok.partition("=")
                footer[key] = value
            continue
        if line == CSV_HEADER:
            continue
        cells = line.split(",")
        result.levels.append(LevelResult(
            n_cells=int(cells[0]),
            dx=float(cells[1]),
            dt=float(cells[2]),
            error_l2=float(cells[3]) if cells[3] else math.inf,
            error_linf=float(cells[4]) if cells[4] else math.inf,
            succ_diff=float(cells[5]) if cells[5] else None,
            stable=cells[6] == "true",
        ))
    result.slope = float(footer["slope"]) if footer.get("slope") else None
    result.intercept = float(footer["intercept"]) if footer.get("intercept") else None
    result.zeta_g = float(footer["zeta_g"]) if footer.get("zeta_g") else None
    result.zeta_g1 = float(footer["zeta_g1"]) if footer.get("zeta_g1") else None
    result.gamma = int(footer["gamma"]) if footer.get("gamma") else None
    return result


class _Frame:
    """Maps data coordinates onto the SVG pixel frame."""

    def __init__(self, x_range, y_range, log: bool,
                 width=640, height=480, margin=(64, 20, 28, 48)):
        self.log = log
        self.width, self.height = width, height
        self.left, self.right, self.top, self.bottom = margin
        tx = (lambda v: math.log10(v)) if log else (lambda v: v)
        self.tx = tx
        x0, x1 = tx(x_range[0]), tx(x_range[1])
        y0, y1 = tx(y_range[0]), tx(y_range[1])
        if x1 == x0:
            x1 = x0 + 1.0
        if y1 == y0:
            y1 = y0 + 1.0
        self.x0, self.x1, self.y0, self.y1 = x0, x1, y0, y1

    def px(self, x):
        u = (self.tx(x) - self.x0) / (self.x1 - self.x0)
        return self.left + u * (self.width - self.left - self.right)

    def py(self, y):
        v = (self.tx(y) - self.y0) / (self.y1 - self.y0)
        return self.height - self.bottom - v * (self.height - self.top - self.bottom)

    def decades(self, lo, hi):
        return range(math.ceil(lo - 1e-9), math.floor(hi + 1e-9) + 1)


def _polyline(points, color, dashed=False, width=1.5):
    pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in points)
    dash = ' stroke-dasharray="6,4"' if dashed else ""
    return (f'<polyline fill="none" stroke="{color}" stroke-width="{width}"'
            f'{dash} points="{pts}"/>')


def _svg_document(frame: _Frame, body: list, title: str,
                  xlabel: str, ylabel: str) -> str:
    f = frame
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{f.width}" '
        f'height="{f.height}" viewBox="0 0 {f.width} {f.height}">',
        f'<rect width="{f.width}" height="{f.height}" fill="white"/>',
        f'<rect x="{f.left}" y="{f.top}" width="{f.width - f.left - f.right}" '
        f'height="{f.height - f.top - f.bottom}" fill="none" stroke="black"/>',
        f'<text x="{(f.left + f.width - f.right) / 2:.0f}" y="16" '
        f'text-anchor="middle" font-family="sans-serif" font-size="13">{title}</text>',
        f'<text x="{(f.left + f.width - f.right) / 2:.0f}" y="{f.height - 8}" '
        f'text-anchor="middle" font-family="sans-serif" font-size="12">{xlabel}</text>',
        f'<text x="14" y="{(f.top + f.height - f.bottom) / 2:.0f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 14 {(f.top + f.height - f.bottom) / 2:.0f})">{ylabel}</text>',
    ]
    parts.extend(body)
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _axis_ticks_log(frame: _Frame) -> list:
    body = []
    for d in frame.decades(frame.x0, frame.x1):
        x = frame.left + (d - frame.x0) / (frame.x1 - frame.x0) * \
            (frame.width - frame.left - frame.right)
        body.append(f'<line x1="{x:.2f}" y1="{frame.height - frame.bottom}" '
                    f'x2="{x:.2f}" y2="{frame.height - frame.bottom + 5}" stroke="black"/>')
        body.append(f'<text x="{x:.2f}" y="{frame.height - frame.bottom + 18}" '
                    f'text-anchor="middle" font-family="sans-serif" font-size="11">'
                    f'1e{d}</text>')
    for d in frame.decades(frame.y0, frame.y1):
        y = frame.height - frame.bottom - (d - frame.y0) / (frame.y1 - frame.y0) * \
            (frame.height - frame.top - frame.bottom)
        body.append(f'<line x1="{frame.left - 5}" y1="{y:.2f}" x2="{frame.left}" '
                    f'y2="{y:.2f}" stroke="black"/>')
        body.append(f'<text x="{frame.left - 8}" y="{y + 4:.2f}" text-anchor="end" '
                    f'font-family="sans-serif" font-size="11">1e{d}</text>')
    return body


def _axis_ticks_linear(frame: _Frame, n=5) -> list:
    body = []
    for i in range(n + 1):
        xv = frame.x0 + (frame.x1 - frame.x0) * i / n
        x = frame.px(xv)
        body.append(f'<line x1="{x:.2f}" y1="{frame.height - frame.bottom}" '
                    f'x2="{x:.2f}" y2="{frame.height - frame.bottom + 5}" stroke="black"/>')
        body.append(f'<text x="{x:.2f}" y="{frame.height - frame.bottom + 18}" '
                    f'text-anchor="middle" font-family="sans-serif" font-size="11">'
                    f'{xv:.3g}</text>')
        yv = frame.y0 + (frame.y1 - frame.y0) * i / n
        y = frame.py(yv)
        body.append(f'<line x1="{frame.left - 5}" y1="{y:.2f}" x2="{frame.left}" '
                    f'y2="{y:.2f}" stroke="black"/>')
        body.append(f'<text x="{frame.left - 8}" y="{y + 4:.2f}" text-anchor="end" '
                    f'font-family="sans-serif" font-size="11">{yv:.3g}</text>')
    return body


def _legend(names_colors, frame: _Frame, dashed_names=()) -> list:
    body = []
    x = frame.width - frame.right - 120
    y = frame.top + 16
    for i, (name, color) in enumerate(names_colors):
        yy = y + 16 * i
        dash = ' stroke-dasharray="6,4"' if name in dashed_names else ""
        body.append(f'<line x1="{x}" y1="{yy - 4}" x2="{x + 22}" y2="{yy - 4}" '
                    f'stroke="{color}" stroke-width="2"{dash}/>')
        body.append(f'<text x="{x + 28}" y="{yy}" font-family="sans-serif" '
                    f'font-size="11">{name}</text>')
    return body


def emit_loglog_svg(series, reference_slopes, path, title="convergence",
                    xlabel="resolution", ylabel="error norm") -> Path:
    """Self-contained log-log plot.

    series is a list of (name, xs, ys) with strictly positive data; dashed
    guide lines with the given integer slopes are anchored at the first data
    point of the first series.
    """
    if not series:
        raise ValueError("no series to plot")
    cleaned = []
    for name, xs, ys in series:
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        if xs.size == 0 or ys.size == 0:
            raise ValueError(f"series {name!r} is empty")
        if np.any(xs <= 0) or np.any(ys <= 0):
            raise ValueError(f"series {name!r} has non-positive data")
        cleaned.append((name, xs, ys))
    all_x = np.concatenate([xs for _, xs, _ in cleaned])
    all_y = np.concatenate([ys for _, _, ys in cleaned])
    x_anchor, y_anchor = cleaned[0][1][0], cleaned[0][2][0]
    guide_pts = []
    for s in reference_slopes:
        ys_g = y_anchor * (all_x / x_anchor) ** s
        guide_pts.append((s, ys_g))
        all_y = np.concatenate([all_y, ys_g])
    frame = _Frame((all_x.min(), all_x.max()), (all_y.min(), all_y.max()), log=True)
    body = _axis_ticks_log(frame)
    legend = []
    for i, (name, xs, ys) in enumerate(cleaned):
        color = _COLORS[i % len(_COLORS)]
        pts = sorted(zip(xs, ys))
        body.append(_polyline([(frame.px(x), frame.py(y)) for x, y in pts], color))
        for x, y in pts:
            body.append(f'<circle cx="{frame.px(x):.2f}" cy="{frame.py(y):.2f}" '
                        f'r="2.5" fill="{color}"/>')
        legend.append((name, color))
    for s, ys_g in guide_pts:
        pts = sorted(zip(all_x, ys_g))
        body.append(_polyline([(frame.px(x), frame.py(y)) for x, y in pts],
                              "#555555", dashed=True, width=1.0))
        legend.append((f"slope {s}", "#555555"))
    body.extend(_legend(legend, frame,
                        dashed_names={f"slope {s}" for s in reference_slopes}))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(_svg_document(frame, body, title, xlabel, ylabel), newline="\n")
    return path


def emit_profile_svg(series, path, title="solution profile",
                     xlabel="x", ylabel="u") -> Path:
    """Linear-axes overlay plot of solution profiles (name, xs, ys)."""
    if not series:
        raise ValueError("no series to plot")
    all_x = np.concatenate([np.asarray(xs, dtype=float) for _, xs, _ in series])
    all_y = np.concatenate([np.asarray(ys, dtype=float) for _, _, ys in series])
    pad = 0.05 * (all_y.max() - all_y.min() or 1.0)
    frame = _Frame((all_x.min(), all_x.max()),
                   (all_y.min() - pad, all_y.max() + pad), log=False)
    body = _axis_ticks_linear(frame)
    legend = []
    for i, (name, xs, ys) in enumerate(series):
        color = _COLORS[i % len(_COLORS)]
        dashed = name.lower().startswith("exact")
        body.append(_polyline(
            [(frame.px(x), frame.py(y)) for x, y in zip(xs, ys)], color,
            dashed=dashed, width=1.2))
        legend.append((name, color))
    body.extend(_legend(legend, frame,
                        dashed_names={n for n, _, _ in series
                                      if n.lower().startswith("exact")}))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(_svg_document(frame, body, title, xlabel, ylabel), newline="\n")
    return path
