"""Brute-force reference computations the library must agree with.

Every oracle here is deliberately dumb: exhaustive scans over
denominator-bounded rational grids, greedy packings, and path
enumeration. They are slower than the library paths by orders of
magnitude but their correctness is visible at a glance, which is what
makes them usable as referees. All arithmetic is exact; grids are
handled as integers at a fixed scale so numpy can do the sweeping.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

PITCH = Fraction(1, 1024)


def _scaled(value: Fraction, pitch: Fraction) -> int:
    q = value / pitch
    if q.denominator != 1:
        raise ValueError(f"{value} is not a multiple of the pitch {pitch}")
    return int(q)


def grid_eta(parent, children, pitch=PITCH) -> Fraction:
    """Worst target subinterval of the parent, scanned on a dyadic grid.

    For every grid pair (a, b) with a <= b inside the parent, the cost
    of a child [c, d] is max(|a-c|, |b-d|); the oracle reports the
    largest over targets of the smallest over children, exactly.
    """
    lo, hi = parent
    n = _scaled(hi - lo, pitch)
    a = np.arange(n + 1, dtype=np.int64)
    best = np.full((n + 1, n + 1), np.iinfo(np.int64).max, dtype=np.int64)
    for clo, chi in children:
        c = _scaled(clo - lo, pitch)
        d = _scaled(chi - lo, pitch)
        cost = np.maximum(np.abs(a[:, None] - c), np.abs(a[None, :] - d))
        np.minimum(best, cost, out=best)
    mask = a[:, None] <= a[None, :]
    return Fraction(int(best[mask].max())) * pitch


def grid_eta_one_sided(span, points, pitch=PITCH) -> Fraction:
    """Covering radius of a point set over a span, scanned on a grid."""
    lo, hi = span
    n = _scaled(hi - lo, pitch)
    t = np.arange(n + 1, dtype=np.int64)
    best = np.full(n + 1, np.iinfo(np.int64).max, dtype=np.int64)
    for p in points:
        np.minimum(best, np.abs(t - _scaled(p - lo, pitch)), out=best)
    return Fraction(int(best.max())) * pitch


def grid_affine_gap(par, child, interval, pitch=PITCH) -> Fraction:
    """Largest |par(t) - child(t)| over a grid on the interval.

    Both maps must be callables on Fractions. The difference of two
    affine maps is affine, so with the interval ends on the grid the
    scan is exact, not just pitch-accurate.
    """
    lo, hi = interval
    steps = _scaled(hi - lo, pitch)
    worst = Fraction(0)
    for k in range(steps + 1):
        t = lo + k * pitch
        worst = max(worst, abs(par(t) - child(t)))
    return worst


def greedy_separated(points, eps: Fraction) -> int:
    """Size of the greedy strictly-eps-separated subset of sorted points."""
    kept: list[Fraction] = []
    for p in sorted(points):
        if not kept or p - kept[-1] > eps:
            kept.append(p)
    return len(kept)


def walk_frontier(src: np.ndarray, dst: np.ndarray, nv: int, start: int,
                  steps: int) -> dict:
    """Endpoint -> walk count after the given number of steps, by
    explicit frontier expansion."""
    adj: list[list[int]] = [[] for _ in range(nv)]
    for u, v in zip(np.asarray(src).tolist(), np.asarray(dst).tolist()):
        adj[u].append(v)
    frontier = {start: 1}
    for _ in range(steps):
        nxt: dict[int, int] = {}
        for u, cnt in frontier.items():
            for v in adj[u]:
                nxt[v] = nxt.get(v, 0) + cnt
        frontier = nxt
    return frontier


def count_paths(src: np.ndarray, dst: np.ndarray, nv: int, start: int,
                steps: int) -> int:
    """Number of directed walks of a given length from a vertex."""
    return sum(walk_frontier(src, dst, nv, start, steps).values())
