"""Minimal SVG plotting: log-log axes, a few series, no dependencies."""

from __future__ import annotations

import math

_WIDTH, _HEIGHT = 720, 500
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 70, 30, 40, 55
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def _decades(lo: float, hi: float):
    first = math.floor(math.log10(lo))
    last = math.ceil(math.log10(hi))
    return [10.0 ** k for k in range(first, last + 1)]


class _LogAxis:
    def __init__(self, values, pixel_lo, pixel_hi):
        finite = [v for v in values if v > 0 and math.isfinite(v)]
        if not finite:
            finite = [0.1, 1.0]
        lo, hi = min(finite), max(finite)
        if lo == hi:
            lo, hi = lo / 2, hi * 2
        self.log_lo = math.log10(lo) - 0.05 * (math.log10(hi / lo) + 1e-9)
        self.log_hi = math.log10(hi) + 0.05 * (math.log10(hi / lo) + 1e-9)
        self.pixel_lo = pixel_lo
        self.pixel_hi = pixel_hi
        self.ticks = [t for t in _decades(lo, hi)
                      if self.log_lo <= math.log10(t) <= self.log_hi]

    def pixel(self, value: float) -> float:
        frac = (math.log10(value) - self.log_lo) / (self.log_hi - self.log_lo)
        return self.pixel_lo + frac * (self.pixel_hi - self.pixel_lo)


def loglog_plot(series, xlabel: str, ylabel: str, title: str) -> str:
    """Render series of (label, xs, ys) dicts as a log-log SVG document.

    Points with nonpositive coordinates are dropped (they have no place on
    a log scale).  Returns the SVG as a string.
    """
    xs_all = [x for s in series for x, y in zip(s["x"], s["y"]) if x > 0 and y > 0]
    ys_all = [y for s in series for x, y in zip(s["x"], s["y"]) if x > 0 and y > 0]
    ax_x = _LogAxis(xs_all, _MARGIN_L, _WIDTH - _MARGIN_R)
    ax_y = _LogAxis(ys_all, _HEIGHT - _MARGIN_B, _MARGIN_T)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        f'<text x="{_WIDTH / 2:.1f}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="16">{title}</text>',
    ]
    # frame
    x0, x1 = _MARGIN_L, _WIDTH - _MARGIN_R
    y0, y1 = _HEIGHT - _MARGIN_B, _MARGIN_T
    parts.append(f'<rect x="{x0}" y="{y1}" width="{x1 - x0}" height="{y0 - y1}" '
                 'fill="none" stroke="black"/>')
    for t in ax_x.ticks:
        px = ax_x.pixel(t)
        parts.append(f'<line x1="{px:.1f}" y1="{y0}" x2="{px:.1f}" y2="{y1}" '
                     'stroke="#dddddd"/>')
        parts.append(f'<text x="{px:.1f}" y="{y0 + 18}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="12">1e{int(math.log10(t))}</text>')
    for t in ax_y.ticks:
        py = ax_y.pixel(t)
        parts.append(f'<line x1="{x0}" y1="{py:.1f}" x2="{x1}" y2="{py:.1f}" '
                     'stroke="#dddddd"/>')
        parts.append(f'<text x="{x0 - 8}" y="{py + 4:.1f}" text-anchor="end" '
                     f'font-family="sans-serif" font-size="12">1e{int(math.log10(t))}</text>')
    parts.append(f'<text x="{(x0 + x1) / 2:.1f}" y="{_HEIGHT - 12}" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="14">{xlabel}</text>')
    parts.append(f'<text x="18" y="{(y0 + y1) / 2:.1f}" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="14" '
                 f'transform="rotate(-90 18 {(y0 + y1) / 2:.1f})">{ylabel}</text>')

    for idx, s in enumerate(series):
        color = s.get("color", _COLORS[idx % len(_COLORS)])
        pts = [(ax_x.pixel(x), ax_y.pixel(y))
               for x, y in zip(s["x"], s["y"]) if x > 0 and y > 0]
        if not pts:
            continue
        path = " ".join(f"{px:.2f},{py:.2f}" for px, py in pts)
        parts.append(f'<polyline points="{path}" fill="none" stroke="{color}" '
                     'stroke-width="1.8"/>')
        for px, py in pts:
            parts.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="3" fill="{color}"/>')
        ly = _MARGIN_T + 18 + 18 * idx
        parts.append(f'<line x1="{x1 - 150}" y1="{ly - 4}" x2="{x1 - 120}" y2="{ly - 4}" '
                     f'stroke="{color}" stroke-width="3"/>')
        parts.append(f'<text x="{x1 - 112}" y="{ly}" font-family="sans-serif" '
                     f'font-size="12">{s["label"]}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
