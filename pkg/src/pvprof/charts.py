"""Standalone SVG charts: line series, histograms, sweep curves.

Charts are plain generated SVG text with the plotted data embedded as a CSV
table inside an XML comment, so chart content can be diffed and tested
without an image pipeline.
"""

import math

import numpy as np

from .iotools import format_float

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
           "#8c564b", "#17becf", "#7f7f7f")
WIDTH, HEIGHT = 860, 420
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 170, 40, 50


def _nice_ticks(lo, hi, n=5):
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
        lo, hi = 0.0, 1.0
    span = hi - lo
    step = 10 ** math.floor(math.log10(span / n))
    for mult in (1, 2, 2.5, 5, 10):
        if span / (step * mult) <= n:
            step *= mult
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-12 * span:
        ticks.append(t)
        t += step
    return ticks


def _data_comment(header, rows):
    lines = ["data", ",".join(header)]
    for row in rows:
        cells = []
        for c in row:
            if isinstance(c, str):
                cells.append(c)
            else:
                cells.append("" if c is None or (isinstance(c, float)
                             and math.isnan(c)) else format_float(c))
        lines.append(",".join(cells))
    body = "\n".join(lines).replace("--", "- -")
    return f"<!--\n{body}\n-->"


def _document(title, body, comment):
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
            f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">\n'
            f"{comment}\n"
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>\n'
            f'<text x="{WIDTH / 2:.1f}" y="24" text-anchor="middle" '
            f'font-family="sans-serif" font-size="15">{title}</text>\n'
            f"{body}\n</svg>\n")


def _axes(x_lo, x_hi, y_lo, y_hi, y_label, x_tick_labels=None):
    px0, px1 = MARGIN_L, WIDTH - MARGIN_R
    py0, py1 = HEIGHT - MARGIN_B, MARGIN_T

    def sx(x):
        return px0 + (x - x_lo) / (x_hi - x_lo + 1e-300) * (px1 - px0)

    def sy(y):
        return py0 + (y - y_lo) / (y_hi - y_lo + 1e-300) * (py1 - py0)

    parts = [f'<g font-family="sans-serif" font-size="11" fill="#333">']
    parts.append(f'<line x1="{px0}" y1="{py0}" x2="{px1}" y2="{py0}" '
                 'stroke="#333"/>')
    parts.append(f'<line x1="{px0}" y1="{py0}" x2="{px0}" y2="{py1}" '
                 'stroke="#333"/>')
    for t in _nice_ticks(y_lo, y_hi):
        y = sy(t)
        parts.append(f'<line x1="{px0 - 4}" y1="{y:.1f}" x2="{px1}" '
                     f'y2="{y:.1f}" stroke="#ddd"/>')
        parts.append(f'<text x="{px0 - 8}" y="{y + 4:.1f}" '
                     f'text-anchor="end">{t:.4g}</text>')
    if x_tick_labels is not None:
        n = len(x_tick_labels)
        stride = max(1, n // 8)
        for k in range(0, n, stride):
            x = sx(k)
            parts.append(f'<line x1="{x:.1f}" y1="{py0}" x2="{x:.1f}" '
                         f'y2="{py0 + 4}" stroke="#333"/>')
            parts.append(f'<text x="{x:.1f}" y="{py0 + 16}" '
                         f'text-anchor="middle">{x_tick_labels[k]}</text>')
    else:
        for t in _nice_ticks(x_lo, x_hi):
            x = sx(t)
            parts.append(f'<line x1="{x:.1f}" y1="{py0}" x2="{x:.1f}" '
                         f'y2="{py0 + 4}" stroke="#333"/>')
            parts.append(f'<text x="{x:.1f}" y="{py0 + 16}" '
                         f'text-anchor="middle">{t:.4g}</text>')
    parts.append(f'<text x="16" y="{(py0 + py1) / 2:.1f}" '
                 f'transform="rotate(-90 16 {(py0 + py1) / 2:.1f})" '
                 f'text-anchor="middle">{y_label}</text>')
    parts.append("</g>")
    return sx, sy, "\n".join(parts)


def _legend(names):
    parts = ['<g font-family="sans-serif" font-size="12">']
    for k, name in enumerate(names):
        color = PALETTE[k % len(PALETTE)]
        y = MARGIN_T + 16 * k
        x = WIDTH - MARGIN_R + 14
        parts.append(f'<rect x="{x}" y="{y - 9}" width="10" height="10" '
                     f'fill="{color}"/>')
        parts.append(f'<text x="{x + 14}" y="{y}">{name}</text>')
    parts.append("</g>")
    return "\n".join(parts)


def _polyline(xs, ys, sx, sy, color):
    segments = []
    run = []
    for x, y in zip(xs, ys):
        if y is None or (isinstance(y, float) and math.isnan(y)):
            if len(run) > 1:
                segments.append(run)
            run = []
        else:
            run.append((sx(x), sy(y)))
    if len(run) > 1:
        segments.append(run)
    parts = []
    for seg in segments:
        pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in seg)
        parts.append(f'<polyline points="{pts}" fill="none" '
                     f'stroke="{color}" stroke-width="1.6"/>')
    return "\n".join(parts)


def line_chart(series, title, y_label, x_labels=None, x_values=None):
    """Multi-series line chart.

    ``series`` maps a name to a y-array; the x axis is either categorical
    (``x_labels``) or numeric (``x_values``).  Gaps (NaN) break the line.
    """
    names = list(series)
    all_y = [y for ys in series.values() for y in np.ravel(ys)
             if y is not None and math.isfinite(y)]
    y_lo = min(all_y) if all_y else 0.0
    y_hi = max(all_y) if all_y else 1.0
    if y_lo > 0 and y_lo / (y_hi + 1e-300) < 0.5:
        y_lo = 0.0
    pad = 0.05 * (y_hi - y_lo + 1e-300)
    if x_values is None:
        n = max(len(np.ravel(v)) for v in series.values())
        xs = list(range(n))
        x_lo, x_hi = 0, max(n - 1, 1)
    else:
        xs = list(np.asarray(x_values, dtype=float))
        x_lo, x_hi = min(xs), max(xs)
    sx, sy, axes = _axes(x_lo, x_hi, y_lo, y_hi + pad, y_label, x_labels)
    body = [axes]
    rows = []
    for k, name in enumerate(names):
        ys = [float(v) for v in np.ravel(series[name])]
        body.append(_polyline(xs, ys, sx, sy, PALETTE[k % len(PALETTE)]))
    body.append(_legend(names))
    n = max(len(np.ravel(v)) for v in series.values())
    for k in range(n):
        label = x_labels[k] if x_labels is not None else xs[k]
        rows.append([label] + [float(np.ravel(series[m])[k])
                               if k < len(np.ravel(series[m])) else None
                               for m in names])
    comment = _data_comment(["x"] + names, rows)
    return _document(title, "\n".join(body), comment)


def histogram(samples, title, x_label, bins=40, value_range=None):
    """Overlaid step-outline histograms (densities) of one array per name."""
    names = list(samples)
    arrays = {m: np.asarray(v, dtype=float) for m, v in samples.items()}
    if value_range is None:
        pooled = np.concatenate(list(arrays.values()))
        value_range = (float(pooled.min()), float(pooled.max()))
        if value_range[0] == value_range[1]:
            value_range = (value_range[0] - 1.0, value_range[1] + 1.0)
    edges = np.linspace(value_range[0], value_range[1], bins + 1)
    dens = {m: np.histogram(a, bins=edges, density=True)[0]
            for m, a in arrays.items()}
    y_hi = max(float(d.max()) for d in dens.values()) or 1.0
    sx, sy, axes = _axes(edges[0], edges[-1], 0.0, y_hi * 1.05, "density")
    body = [axes]
    for k, name in enumerate(names):
        xs, ys = [], []
        for b in range(bins):
            xs += [edges[b], edges[b + 1]]
            ys += [dens[name][b], dens[name][b]]
        body.append(_polyline(xs, ys, sx, sy, PALETTE[k % len(PALETTE)]))
    body.append(_legend(names))
    if x_label:
        body.append(f'<text x="{(MARGIN_L + WIDTH - MARGIN_R) / 2:.1f}" '
                    f'y="{HEIGHT - 12}" text-anchor="middle" '
                    f'font-family="sans-serif" font-size="12">{x_label}</text>')
    centers = 0.5 * (edges[:-1] + edges[1:])
    rows = [[float(centers[b])] + [float(dens[m][b]) for m in names]
            for b in range(bins)]
    comment = _data_comment(["bin_center"] + names, rows)
    return _document(title, "\n".join(body), comment)
