"""Minimal standalone SVG rendering of a front: markers plus a step line."""

from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

from fairfront.pattern_dp import ParetoFront

WIDTH, HEIGHT = 640, 420
MARGIN = {"left": 80, "right": 24, "top": 24, "bottom": 60}


def _scale(values: list[float], lo_px: float, hi_px: float):
    lo, hi = min(values), max(values)
    if hi == lo:
        pad = abs(lo) * 0.05 or 1.0
        lo, hi = lo - pad, hi + pad
    return lambda v: lo_px + (v - lo) / (hi - lo) * (hi_px - lo_px), lo, hi


def render_svg(front: ParetoFront, axes: tuple[str, str] | None = None) -> str:
    if len(front) == 0:
        raise ValueError("cannot plot an empty front")
    pts = sorted((cost, float(front.fairness.display(f))) for cost, f in front.points())
    if axes is None:
        unit = "sum of d^p" if front.cost_spec.mode == "sum" else "p-norm"
        axes = (f"cost ({unit})", front.fairness.label)
    x0, x1 = MARGIN["left"], WIDTH - MARGIN["right"]
    y0, y1 = HEIGHT - MARGIN["bottom"], MARGIN["top"]
    sx, xlo, xhi = _scale([p[0] for p in pts], x0, x1)
    sy, ylo, yhi = _scale([p[1] for p in pts], y0, y1)

    step = []
    for i, (c, f) in enumerate(pts):
        if i:
            step.append(f"{sx(c):.2f},{sy(pts[i - 1][1]):.2f}")
        step.append(f"{sx(c):.2f},{sy(f):.2f}")

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>',
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>',
        f'<text x="{x0}" y="{y0 + 16}" text-anchor="start">{xlo:.6g}</text>',
        f'<text x="{x1}" y="{y0 + 16}" text-anchor="end">{xhi:.6g}</text>',
        f'<text x="{x0 - 6}" y="{y0}" text-anchor="end">{ylo:.6g}</text>',
        f'<text x="{x0 - 6}" y="{y1 + 10}" text-anchor="end">{yhi:.6g}</text>',
        f'<text x="{(x0 + x1) / 2:.2f}" y="{HEIGHT - 16}" text-anchor="middle">{escape(axes[0])}</text>',
        f'<text x="18" y="{(y0 + y1) / 2:.2f}" text-anchor="middle" '
        f'transform="rotate(-90 18 {(y0 + y1) / 2:.2f})">{escape(axes[1])}</text>',
        f'<polyline class="front-step" fill="none" stroke="#4477aa" stroke-width="1.5" points="{" ".join(step)}"/>',
    ]
    out += [
        f'<circle class="front-point" cx="{sx(c):.2f}" cy="{sy(f):.2f}" r="4" fill="#cc3311"/>'
        for c, f in pts
    ]
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_svg(front: ParetoFront, path: str | Path, axes: tuple[str, str] | None = None) -> Path:
    """Write the front as an SVG scatter with a step line; Balance is plotted re-negated."""
    text = render_svg(front, axes)
    path = Path(path)
    path.write_text(text, encoding="utf-8")
    return path
