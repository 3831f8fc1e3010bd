"""SVG maps of grid partitions.

One polygon per cell, filled by part (or shaded by weight), with thick
strokes along the edges shared by cells of different parts.  Coordinates
are written with fixed precision so the same inputs give the same bytes.
"""

from __future__ import annotations

import colorsys
import math

import numpy as np

from .grid import GridGraph, Topology

__all__ = ["part_color", "cell_polygon", "render_svg"]

CELL = 20.0
MARGIN = 4.0
GOLDEN_ANGLE = 137.50776405003785


def part_color(part: int) -> str:
    hue = (part * GOLDEN_ANGLE) % 360.0 / 360.0
    r, g, b = colorsys.hls_to_rgb(hue, 0.7, 0.55)
    return "#{:02x}{:02x}{:02x}".format(*(round(x * 255) for x in (r, g, b)))


def _shade(x: float) -> str:
    level = round(255 * (1.0 - 0.85 * x))
    return f"#{level:02x}{level:02x}{level:02x}"


def cell_polygon(graph: GridGraph, v: int) -> list[tuple[float, float]]:
    """Corners of cell ``v`` in unit-spaced plane coordinates.

    Squares are unit squares centred on lattice points; hexes are flat-top
    with circumradius ``1/sqrt(3)`` so adjacent centres are one unit apart.
    """
    x, y = graph.cell_centers()[v]
    if graph.kind is Topology.SQUARE:
        return [(x - 0.5, y - 0.5), (x + 0.5, y - 0.5), (x + 0.5, y + 0.5), (x - 0.5, y + 0.5)]
    rad = 1.0 / math.sqrt(3.0)
    return [(x + rad * math.cos(math.radians(60 * t)), y + rad * math.sin(math.radians(60 * t)))
            for t in range(6)]


def _fmt(x: float) -> str:
    s = f"{x:.3f}".rstrip("0").rstrip(".")
    return "0" if s == "-0" else s


def _shared_side(pu, pv):
    common = [a for a in pu if any(math.isclose(a[0], b[0], abs_tol=1e-9)
                                   and math.isclose(a[1], b[1], abs_tol=1e-9) for b in pv)]
    return common if len(common) == 2 else None


def render_svg(graph: GridGraph, labels, shade_weights: bool = False) -> str:
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    if labels.size != graph.n_vertices:
        raise ValueError("labels do not match the graph")
    polys = [cell_polygon(graph, v) for v in range(graph.n_vertices)]
    xs = [p[0] for poly in polys for p in poly]
    ys = [p[1] for poly in polys for p in poly]
    x0, y0 = min(xs), min(ys)

    def tx(p):
        return (MARGIN + (p[0] - x0) * CELL, MARGIN + (p[1] - y0) * CELL)

    width = 2 * MARGIN + (max(xs) - x0) * CELL
    height = 2 * MARGIN + (max(ys) - y0) * CELL
    w = np.asarray(graph.weights)
    top = w.max() if w.size and w.max() > 0 else 1.0
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{_fmt(width)}" '
        f'height="{_fmt(height)}" viewBox="0 0 {_fmt(width)} {_fmt(height)}">',
        '<g stroke="#ffffff" stroke-width="0.5">',
    ]
    for v, poly in enumerate(polys):
        fill = _shade(w[v] / top) if shade_weights else part_color(int(labels[v]))
        pts = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in map(tx, poly))
        out.append(f'<polygon points="{pts}" fill="{fill}"/>')
    out.append("</g>")
    out.append('<g stroke="#202020" stroke-width="2.5" stroke-linecap="round">')
    for u, v in graph.edges:
        if labels[u] == labels[v]:
            continue
        side = _shared_side(polys[u], polys[v])
        if side is None:
            continue
        (a, b), (c, d) = map(tx, side)
        out.append(f'<line x1="{_fmt(a)}" y1="{_fmt(b)}" x2="{_fmt(c)}" y2="{_fmt(d)}"/>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
