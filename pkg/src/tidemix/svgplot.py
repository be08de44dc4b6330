"""Minimal static SVG line plots (no external renderer).

Just enough for the experiment outputs: multiple series, optional log
axes, decade or nice-number ticks.
"""

import math

_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def _nice_ticks(lo, hi, target=5):
    span = hi - lo
    if span <= 0:
        return [lo]
    raw = span / target
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    start = math.ceil(lo / step) * step
    ticks = []
    v = start
    while v <= hi + 1e-12 * span:
        ticks.append(v)
        v += step
    return ticks


def _decade_ticks(lo, hi):
    first = math.ceil(lo - 1e-9)
    last = math.floor(hi + 1e-9)
    if last < first:
        return [lo, hi]
    step = max(1, (last - first) // 8)
    return [float(d) for d in range(first, last + 1, step)]


def _fmt(v, log):
    if log:
        return f"1e{int(round(v))}" if abs(v - round(v)) < 1e-9 else f"{10**v:.2g}"
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-3:
        return f"{v:.1e}"
    return f"{v:g}"


def line_plot(path, series, logx=False, logy=False, xlabel="", ylabel="",
              title="", width=640, height=440):
    """Write an SVG line plot.

    ``series`` is a list of (x, y, label) triples.  Non-positive values
    are dropped on log axes.
    """
    margin_l, margin_r, margin_t, margin_b = 64, 16, 28, 44
    pw = width - margin_l - margin_r
    ph = height - margin_t - margin_b

    cleaned = []
    for x, y, label in series:
        pts = [(float(a), float(b)) for a, b in zip(x, y)
               if (not logx or a > 0) and (not logy or b > 0)
               and math.isfinite(a) and math.isfinite(b)]
        if pts:
            cleaned.append((pts, label))
    if not cleaned:
        raise ValueError("nothing to plot (all points dropped)")

    def tx(v):
        return math.log10(v) if logx else v

    def ty(v):
        return math.log10(v) if logy else v

    xs = [tx(a) for pts, _ in cleaned for a, _ in pts]
    ys = [ty(b) for pts, _ in cleaned for _, b in pts]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    pad = 0.04 * (y_hi - y_lo)
    y_lo -= pad
    y_hi += pad

    def px(v):
        return margin_l + (tx(v) - x_lo) / (x_hi - x_lo) * pw

    def py(v):
        return margin_t + (y_hi - ty(v)) / (y_hi - y_lo) * ph

    xticks = _decade_ticks(x_lo, x_hi) if logx else _nice_ticks(x_lo, x_hi)
    yticks = _decade_ticks(y_lo, y_hi) if logy else _nice_ticks(y_lo, y_hi)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
           f'height="{height}" viewBox="0 0 {width} {height}">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<rect x="{margin_l}" y="{margin_t}" width="{pw}" height="{ph}" '
           'fill="none" stroke="#444"/>']
    font = 'font-family="sans-serif" font-size="11"'
    for v in xticks:
        X = margin_l + (v - x_lo) / (x_hi - x_lo) * pw
        out.append(f'<line x1="{X:.1f}" y1="{margin_t}" x2="{X:.1f}" '
                   f'y2="{margin_t + ph}" stroke="#ddd"/>')
        out.append(f'<text x="{X:.1f}" y="{margin_t + ph + 16}" {font} '
                   f'text-anchor="middle">{_fmt(v, logx)}</text>')
    for v in yticks:
        Y = margin_t + (y_hi - v) / (y_hi - y_lo) * ph
        out.append(f'<line x1="{margin_l}" y1="{Y:.1f}" x2="{margin_l + pw}" '
                   f'y2="{Y:.1f}" stroke="#ddd"/>')
        out.append(f'<text x="{margin_l - 6}" y="{Y + 4:.1f}" {font} '
                   f'text-anchor="end">{_fmt(v, logy)}</text>')
    for i, (pts, label) in enumerate(cleaned):
        color = _COLORS[i % len(_COLORS)]
        coords = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in pts)
        out.append(f'<polyline points="{coords}" fill="none" '
                   f'stroke="{color}" stroke-width="1.5"/>')
        if label:
            out.append(f'<text x="{margin_l + pw - 8}" '
                       f'y="{margin_t + 16 + 14 * i}" {font} fill="{color}" '
                       f'text-anchor="end">{label}</text>')
    if title:
        out.append(f'<text x="{width / 2}" y="{margin_t - 10}" {font} '
                   f'text-anchor="middle" font-size="13">{title}</text>')
    if xlabel:
        out.append(f'<text x="{margin_l + pw / 2}" y="{height - 10}" {font} '
                   f'text-anchor="middle">{xlabel}</text>')
    if ylabel:
        out.append(f'<text x="14" y="{margin_t + ph / 2}" {font} '
                   f'text-anchor="middle" '
                   f'transform="rotate(-90 14 {margin_t + ph / 2})">{ylabel}</text>')
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")
