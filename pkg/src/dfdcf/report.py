"""Plain SVG line charts from time-series CSVs (one polyline per flow)."""

from __future__ import annotations

import json
import math
import os
from pathlib import Path
from xml.sax.saxutils import escape

from .metrics import read_timeseries_csv

PLOT_METRICS = {
    "delay_ms": "delay (ms)",
    "jitter_ms": "jitter (ms)",
    "rtt_ms": "RTT (ms)",
    "throughput_kbps": "throughput (kb/s)",
}
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")
MAX_POINTS = 1500
METHOD_ORDER = ("dcf", "difs", "dfdcf")

PANEL_W, PANEL_H = 560, 360
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 20, 40, 50


def nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.floor(lo / step) * step
    ticks = []
    t = start
    while t <= hi + step * 1e-9:
        if t >= lo - step * 1e-9:
            ticks.append(round(t, 10))
        t += step
    return ticks


def _fmt_tick(v: float) -> str:
    return f"{v:g}"


def _thin(points: list[tuple[float, float]]) -> list[tuple[float, float]]:
    if len(points) <= MAX_POINTS:
        return points
    stride = math.ceil(len(points) / MAX_POINTS)
    return points[::stride] + ([points[-1]] if (len(points) - 1) % stride else [])


def _panel(ox: float, oy: float, series: dict[str, list[tuple[float, float]]],
           title: str, ylabel: str) -> list[str]:
    out = [f'<g transform="translate({ox},{oy})">']
    pw = PANEL_W - MARGIN_L - MARGIN_R
    ph = PANEL_H - MARGIN_T - MARGIN_B
    out.append(f'<text x="{PANEL_W / 2}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>')
    xs = [x for pts in series.values() for x, _ in pts]
    ys = [y for pts in series.values() for _, y in pts]
    x0, x1 = (min(xs), max(xs)) if xs else (0.0, 1.0)
    y0, y1 = (min(0.0, min(ys)), max(ys)) if ys else (0.0, 1.0)
    xt, yt = nice_ticks(x0, x1), nice_ticks(y0, y1)
    x0, x1 = min(x0, xt[0]), max(x1, xt[-1])
    y0, y1 = min(y0, yt[0]), max(y1, yt[-1])
    sx = lambda v: MARGIN_L + (v - x0) / ((x1 - x0) or 1) * pw
    sy = lambda v: MARGIN_T + ph - (v - y0) / ((y1 - y0) or 1) * ph
    out.append(f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}" fill="none" stroke="#000"/>')
    for t in xt:
        x = sx(t)
        out.append(f'<line x1="{x:.1f}" y1="{MARGIN_T + ph}" x2="{x:.1f}" y2="{MARGIN_T + ph + 5}" stroke="#000"/>')
        out.append(f'<text x="{x:.1f}" y="{MARGIN_T + ph + 18}" text-anchor="middle" font-size="11">{_fmt_tick(t)}</text>')
    for t in yt:
        y = sy(t)
        out.append(f'<line x1="{MARGIN_L - 5}" y1="{y:.1f}" x2="{MARGIN_L}" y2="{y:.1f}" stroke="#000"/>')
        out.append(f'<text x="{MARGIN_L - 8}" y="{y + 4:.1f}" text-anchor="end" font-size="11">{_fmt_tick(t)}</text>')
    out.append(f'<text x="{MARGIN_L + pw / 2}" y="{PANEL_H - 10}" text-anchor="middle" font-size="12">time (s)</text>')
    out.append(f'<text transform="translate(16,{MARGIN_T + ph / 2}) rotate(-90)" text-anchor="middle" '
               f'font-size="12">{escape(ylabel)}</text>')
    if not xs:
        out.append(f'<text x="{MARGIN_L + pw / 2}" y="{MARGIN_T + ph / 2}" text-anchor="middle" '
                   f'font-size="16" fill="#888">no data</text>')
    for i, (flow, pts) in enumerate(sorted(series.items())):
        color = COLORS[i % len(COLORS)]
        coords = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in _thin(pts))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1" points="{coords}"/>')
        ly = MARGIN_T + 14 + 16 * i
        out.append(f'<line x1="{MARGIN_L + 10}" y1="{ly - 4}" x2="{MARGIN_L + 30}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{MARGIN_L + 35}" y="{ly}" font-size="11">{escape(flow)}</text>')
    out.append("</g>")
    return out


def render_svg(panels: list[tuple[str, dict[str, list[tuple[float, float]]]]], ylabel: str) -> str:
    """Side-by-side panels; each is ``(title, {flow: [(t, value), ...]})``."""
    width = PANEL_W * max(1, len(panels))
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{PANEL_H}" '
            f'viewBox="0 0 {width} {PANEL_H}" font-family="sans-serif">')
    body = ['<rect width="100%" height="100%" fill="#fff"/>']
    for i, (title, series) in enumerate(panels):
        body += _panel(i * PANEL_W, 0, series, title, ylabel)
    return "\n".join([head, *body, "</svg>"]) + "\n"


def _method_for(csv_path: Path) -> str:
    manifest = csv_path.parent / "manifest.json"
    if manifest.exists():
        try:
            return json.loads(manifest.read_text())["method"]
        except (ValueError, KeyError):
            pass
    return csv_path.parent.name or "run"


def resolve_inputs(inputs: list[str]) -> list[Path]:
    paths = []
    for item in inputs:
        p = Path(item)
        if p.is_dir():
            found = sorted(p.glob("**/timeseries.csv"))
            if not found:
                raise FileNotFoundError(f"{p}: no timeseries.csv found")
            paths.extend(found)
        elif p.exists():
            paths.append(p)
        else:
            raise FileNotFoundError(f"{p}: no such file or directory")
    return paths


def report(inputs: list[str], out_dir: str | os.PathLike) -> list[Path]:
    """Write one SVG per (metric, method) and, for several methods, a side-by-side comparison."""
    paths = resolve_inputs(inputs)
    data: dict[str, dict[str, dict[str, list]]] = {}
    for path in paths:
        method = _method_for(path)
        label = method
        n = 2
        while label in data:
            label = f"{method}-{n}"
            n += 1
        per_metric: dict[str, dict[str, list]] = {m: {} for m in PLOT_METRICS}
        for t, flow, metric, value in read_timeseries_csv(path):
            if metric in per_metric:
                per_metric[metric].setdefault(flow, []).append((t, value))
        data[label] = per_metric
    # baseline first, so panel (a) is always the reference method
    rank = {m: i for i, m in enumerate(METHOD_ORDER)}
    data = dict(sorted(data.items(), key=lambda kv: (rank.get(kv[0].rsplit("-", 1)[0], len(rank)), kv[0])))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for metric, ylabel in PLOT_METRICS.items():
        for label, per_metric in data.items():
            target = out / f"{metric}_{label}.svg"
            target.write_text(render_svg([(f"{metric.split('_')[0]}: {label}", per_metric[metric])], ylabel))
            written.append(target)
        if len(data) > 1:
            panels = [(f"({chr(ord('a') + i)}) {label}", per_metric[metric])
                      for i, (label, per_metric) in enumerate(data.items())]
            target = out / f"{metric}_compare.svg"
            target.write_text(render_svg(panels, ylabel))
            written.append(target)
    return written
