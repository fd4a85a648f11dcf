"""Deterministic SVG figures of fence slabs and fan quotients.

Both renderers are pure functions of (system, level, options) and emit
byte-identical documents for identical inputs: coordinates are computed
as exact rationals, laid out by generalized middle-thirds recursion,
and only then fixed to decimal.

Layout: the root cylinder is the unit interval; a vertex with k
children splits its cylinder into 2k-1 equal slots and hands the odd
ones (first, third, ...) to the children in index order, leaving the
even slots as gaps. For k = 2 this is the classic middle-thirds
embedding; general k keeps cylinders disjoint with gaps on par with the
pieces, so pictures stay readable under refinement.

A fence figure draws one vertical segment per level-n vertex at its
cylinder's midpoint, spanning the fiber; optional dots mark both fiber
endpoints. A fan figure collapses the base to a bottom-center apex and
draws one ray per vertex, scaled by the fiber length; degenerate fibers
contribute no ray (the apex alone represents them).
"""

from __future__ import annotations

from fractions import Fraction

from .errors import InsufficientDepth
from .fence_systems import FSystem

CANVAS_W = 1000
CANVAS_H = 600
MARGIN = 40
APEX = (Fraction(CANVAS_W, 2), Fraction(CANVAS_H - 20))

_HEADER = ('<?xml version="1.0" encoding="UTF-8"?>\n'
           '<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
           f'width="{CANVAS_W}" height="{CANVAS_H}" '
           f'viewBox="0 0 {CANVAS_W} {CANVAS_H}">\n')

DEFAULTS = {"dots": False, "stroke": "#10243e", "stroke_width": "2",
            "dot_radius": "2.5", "dot_fill": "#7c2d12",
            "background": "#ffffff"}


def fixed12(value: Fraction) -> str:
    """Exact decimal with twelve fractional digits, half away from zero."""
    value = Fraction(value)
    sign = "-" if value < 0 else ""
    scaled = abs(value) * 10**12
    units = (2 * scaled.numerator + scaled.denominator) \
        // (2 * scaled.denominator)
    return f"{sign}{units // 10**12}.{units % 10**12:012d}"


def cylinder_midpoints(fs: FSystem, n: int) -> list[Fraction]:
    """Horizontal positions of level-n cylinders under the slot layout."""
    if not 0 <= n <= fs.depth:
        raise InsufficientDepth(f"render level {n} not built")
    spans = {(-1, 0): (Fraction(0), Fraction(1))}
    parents = [(-1, 0)]
    for m in range(n + 1):
        nxt = {}
        if m == 0:
            kids_of = {(-1, 0): list(range(fs.tower.levels[0].nv))}
        else:
            indptr, order = fs.tower.children_csr(m - 1)
            kids_of = {(m - 1, v): [int(c) for c in
                                    order[indptr[v]:indptr[v + 1]]]
                       for (_, v) in parents}
        for key in parents:
            x0, x1 = spans[key]
            kids = kids_of[key]
            k = len(kids)
            if k == 0:
                continue
            slot = (x1 - x0) / (2 * k - 1)
            for i, c in enumerate(kids):
                nxt[(m, c)] = (x0 + slot * (2 * i), x0 + slot * (2 * i + 1))
        spans = nxt
        parents = sorted(spans)
    out = []
    for v in range(fs.tower.levels[n].nv):
        x0, x1 = spans[(n, v)]
        out.append((x0 + x1) / 2)
    return out


def _xpix(t: Fraction) -> Fraction:
    return MARGIN + t * (CANVAS_W - 2 * MARGIN)


def _ypix(t: Fraction) -> Fraction:
    return (CANVAS_H - MARGIN) - t * (CANVAS_H - 2 * MARGIN)


def _open_doc(opt: dict) -> list[str]:
    return [_HEADER,
            f'<rect width="{CANVAS_W}" height="{CANVAS_H}" '
            f'fill="{opt["background"]}"/>\n']


def render_fence(fs: FSystem, n: int, options: dict | None = None) -> str:
    """SVG of the level-n slab: one vertical fiber segment per vertex."""
    opt = dict(DEFAULTS)
    if options:
        opt.update(options)
    xs = cylinder_midpoints(fs, n)
    parts = _open_doc(opt)
    dots = []
    for v, xmid in enumerate(xs):
        lo, hi = fs.interval(n, v)
        x = fixed12(_xpix(xmid))
        y1 = fixed12(_ypix(lo))
        y2 = fixed12(_ypix(hi))
        parts.append(f'<line x1="{x}" y1="{y1}" x2="{x}" y2="{y2}" '
                     f'stroke="{opt["stroke"]}" '
                     f'stroke-width="{opt["stroke_width"]}"/>\n')
        if opt["dots"]:
            for y in (y1, y2):
                dots.append(f'<circle cx="{x}" cy="{y}" '
                            f'r="{opt["dot_radius"]}" '
                            f'fill="{opt["dot_fill"]}"/>\n')
    parts.extend(dots)
    parts.append("</svg>\n")
    return "".join(parts)


def render_fan(fs: FSystem, n: int, options: dict | None = None) -> str:
    """SVG of the level-n fan quotient: rays from a common apex.

    Each vertex contributes one ray whose length is proportional to its
    fiber length, aimed at the vertex's cylinder position along the top
    of the canvas; degenerate fibers draw nothing beyond the apex.
    """
    opt = dict(DEFAULTS)
    if options:
        opt.update(options)
    xs = cylinder_midpoints(fs, n)
    ax, ay = APEX
    axs, ays = fixed12(ax), fixed12(ay)
    parts = _open_doc(opt)
    parts.append(f'<circle cx="{axs}" cy="{ays}" r="3" '
                 f'fill="{opt["stroke"]}"/>\n')
    for v, xmid in enumerate(xs):
        lo, hi = fs.interval(n, v)
        gap = hi - lo
        if gap == 0:
            continue
        tx = _xpix(xmid)
        ty = Fraction(MARGIN)
        x2 = ax + (tx - ax) * gap
        y2 = ay + (ty - ay) * gap
        parts.append(f'<line x1="{axs}" y1="{ays}" '
                     f'x2="{fixed12(x2)}" y2="{fixed12(y2)}" '
                     f'stroke="{opt["stroke"]}" '
                     f'stroke-width="{opt["stroke_width"]}"/>\n')
    parts.append("</svg>\n")
    return "".join(parts)
