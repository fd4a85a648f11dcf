"""Lifting base dynamics to fiber maps, and the deviation certificates.

Given a tower with level dynamics and an interval structure, the lift
realizes each level edge ``u -> v`` as a monotone surjection between the
fiber intervals. Two scaling modes are supported:

* ``ratio``: fibers are ``[0, hi]`` (lower endpoints must vanish, else
  :class:`RatioModeRequiresZeroLower`) and the edge map is the linear
  stretch ``t -> (hi(v)/hi(u)) * t``. Upper endpoints of edge endpoints
  must be nonzero (:class:`ZeroUpper`).
* ``affine``: the edge map is the unique increasing affine bijection
  ``[lo(u), hi(u)] -> [lo(v), hi(v)]``. Degenerate source fibers only
  pair with degenerate targets (:class:`DegenerateInterval`).

Whether these level maps cohere into a map on the limit is measured by
the deviation between an edge's map and its child edges' maps:

* ratio mode: gamma(u->v) is the worst difference between the parent
  ratio and a child ratio, taken in both directions (the ratio and its
  reciprocal), over all child edges;
* affine mode: gamma(u->v) evaluates the parent and child maps at the
  child source fiber's endpoints (affine differences peak at interval
  ends, so this is exact); gamma_plus does the same for the inverse maps
  at the child target fiber's endpoints.

The per-level maximum gamma_n and its partial sums form the summability
certificate: in ratio mode the certified requirement is a partial sum
below 1, in affine mode summability is reported for the built levels.
Everything is computed exactly on deduplicated endpoint classes, so
towers with millions of edges but few distinct endpoint combinations
stay cheap. Constructors of scheduled levels can install per-level
``gamma_hooks`` on the FSystem, mirroring ``eta_hooks``.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .errors import (DegenerateInterval, ImageOutsideFiber, InsufficientDepth,
                     ModeMismatch, RatioModeRequiresZeroLower, ZeroUpper)
from .fence_systems import FSystem, FencePoint
from .graph_systems import Thread, base_image, base_preimage

ZERO = Fraction(0)
ONE = Fraction(1)

MODES = ("ratio", "affine")


def _check_mode(mode: str) -> None:
    if mode not in MODES:
        raise ModeMismatch(f"unknown scaling mode {mode!r}; expected one of {MODES}")


def _require_zero_lower(fs: FSystem, levels) -> None:
    zero_id = fs.values.add(ZERO)
    for n in levels:
        if not bool(np.all(fs.lo[n] == zero_id)):
            bad = int(np.flatnonzero(fs.lo[n] != zero_id)[0])
            raise RatioModeRequiresZeroLower(
                f"level {n} vertex {fs.tower.label(n, bad)} has lower endpoint "
                f"{fs.lo_value(n, bad)}; ratio mode needs 0")


class EdgeMap:
    """The exact monotone map realizing one edge: t -> slope * t + shift."""

    __slots__ = ("slope", "shift", "src", "dst")

    def __init__(self, slope: Fraction, shift: Fraction,
                 src: tuple[Fraction, Fraction], dst: tuple[Fraction, Fraction]):
        self.slope = slope
        self.shift = shift
        self.src = src
        self.dst = dst

    def __call__(self, t: Fraction) -> Fraction:
        return self.slope * t + self.shift

    def inverse(self) -> "EdgeMap":
        if self.slope == 0:
            raise DegenerateInterval("constant edge map has no inverse")
        inv = ONE / self.slope
        return EdgeMap(inv, -self.shift * inv, self.dst, self.src)


def s_estimate(fs: FSystem, n: int, u: int, v: int, mode: str) -> EdgeMap:
    """The level-n scaling map along the edge u -> v in the given mode."""
    _check_mode(mode)
    lou, hiu = fs.interval(n, u)
    lov, hiv = fs.interval(n, v)
    if mode == "ratio":
        if lou != 0 or lov != 0:
            raise RatioModeRequiresZeroLower(
                f"edge {fs.tower.label(n, u)}->{fs.tower.label(n, v)} has nonzero "
                f"lower endpoints")
        if hiu == 0 or hiv == 0:
            raise ZeroUpper(
                f"edge {fs.tower.label(n, u)}->{fs.tower.label(n, v)} touches a "
                f"zero fiber; ratio undefined")
        return EdgeMap(hiv / hiu, ZERO, (lou, hiu), (lov, hiv))
    gap_u = hiu - lou
    gap_v = hiv - lov
    if gap_u == 0:
        if gap_v != 0:
            raise DegenerateInterval(
                f"edge {fs.tower.label(n, u)}->{fs.tower.label(n, v)} maps a "
                f"point fiber onto a nondegenerate one")
        return EdgeMap(ZERO, lov, (lou, hiu), (lov, hiv))
    return EdgeMap(gap_v / gap_u, lov - (gap_v / gap_u) * lou,
                   (lou, hiu), (lov, hiv))


def _unique_rows_chunked(cols: list[np.ndarray], chunk: int = 1 << 20) -> np.ndarray:
    """np.unique over stacked columns, chunked to bound peak memory."""
    total = len(cols[0])
    pieces = []
    for start in range(0, total, chunk):
        block = np.stack([c[start:start + chunk] for c in cols], axis=1)
        pieces.append(np.unique(block, axis=0))
    if not pieces:
        return np.zeros((0, len(cols)), dtype=np.int64)
    return np.unique(np.concatenate(pieces, axis=0), axis=0)


def _gamma_ratio_classes(fs: FSystem, n: int):
    lvc = fs.tower.levels[n + 1]
    bond = lvc.bond
    pu = bond[lvc.edge_src]
    pv = bond[lvc.edge_dst]
    cols = [fs.hi[n][pu], fs.hi[n][pv],
            fs.hi[n + 1][lvc.edge_src], fs.hi[n + 1][lvc.edge_dst]]
    return _unique_rows_chunked([np.asarray(c, dtype=np.int64) for c in cols])


def _gamma_affine_classes(fs: FSystem, n: int):
    lvc = fs.tower.levels[n + 1]
    bond = lvc.bond
    pu = bond[lvc.edge_src]
    pv = bond[lvc.edge_dst]
    cols = [fs.lo[n][pu], fs.hi[n][pu], fs.lo[n][pv], fs.hi[n][pv],
            fs.lo[n + 1][lvc.edge_src], fs.hi[n + 1][lvc.edge_src],
            fs.lo[n + 1][lvc.edge_dst], fs.hi[n + 1][lvc.edge_dst]]
    return _unique_rows_chunked([np.asarray(c, dtype=np.int64) for c in cols])


def _affine_for(lou, hiu, lov, hiv, where: str) -> EdgeMap:
    gap_u = hiu - lou
    gap_v = hiv - lov
    if gap_u == 0:
        if gap_v != 0:
            raise DegenerateInterval(
                f"{where}: point fiber maps onto a nondegenerate fiber")
        return EdgeMap(ZERO, lov, (lou, hiu), (lov, hiv))
    slope = gap_v / gap_u
    return EdgeMap(slope, lov - slope * lou, (lou, hiu), (lov, hiv))


def gamma_level(fs: FSystem, n: int, mode: str) -> dict:
    """Exact deviation rates between level n and its child level.

    Returns a dict with ``gamma`` (and ``gamma_plus`` in affine mode),
    witness endpoint classes, and the number of deduplicated classes the
    maximum was taken over. Hook-aware like the eta path.
    """
    _check_mode(mode)
    cached = fs.gamma_cache.get((n, mode))
    if cached is not None:
        return cached
    if n in fs.gamma_hooks:
        entry = dict(fs.gamma_hooks[n](mode))
        entry.setdefault("level", n)
        entry.setdefault("source", "constructor")
        fs.gamma_cache[(n, mode)] = entry
        return entry
    if n >= fs.depth:
        raise InsufficientDepth(f"gamma at level {n} needs level {n + 1}")

    val = fs.values.value
    if mode == "ratio":
        _require_zero_lower(fs, (n, n + 1))
        rows = _gamma_ratio_classes(fs, n)
        gamma = ZERO
        witness = None
        for c0, c1, c2, c3 in rows:
            hu, hv = val(int(c0)), val(int(c1))
            hu2, hv2 = val(int(c2)), val(int(c3))
            if hu == 0 or hv == 0 or hu2 == 0 or hv2 == 0:
                raise ZeroUpper(
                    f"level {n} edge class with a zero upper endpoint; "
                    f"ratio mode undefined")
            s_par = hv / hu
            s_child = hv2 / hu2
            dev = max(abs(s_par - s_child), abs(ONE / s_par - ONE / s_child))
            if dev > gamma:
                gamma = dev
                witness = (hu, hv, hu2, hv2)
        entry = {"level": n, "mode": mode, "gamma": gamma,
                 "witness": witness, "classes": int(len(rows)),
                 "source": "generic"}
        fs.gamma_cache[(n, mode)] = entry
        return entry

    rows = _gamma_affine_classes(fs, n)
    gamma = ZERO
    gamma_plus = ZERO
    w_f = w_b = None
    for row in rows:
        plou, phiu, plov, phiv, lou, hiu, lov, hiv = (val(int(c)) for c in row)
        par = _affine_for(plou, phiu, plov, phiv, f"level {n} parent edge")
        child = _affine_for(lou, hiu, lov, hiv, f"level {n + 1} child edge")
        for t in (lou, hiu):
            dev = abs(par(t) - child(t))
            if dev > gamma:
                gamma = dev
                w_f = tuple(val(int(c)) for c in row)
        try:
            par_inv = par.inverse()
            child_inv = child.inverse()
        except DegenerateInterval:
            # fully degenerate pair: inverse deviation degenerates to the
            # forward one, which is already accounted for
            continue
        for t in (lov, hiv):
            dev = abs(par_inv(t) - child_inv(t))
            if dev > gamma_plus:
                gamma_plus = dev
                w_b = tuple(val(int(c)) for c in row)
    entry = {"level": n, "mode": mode, "gamma": gamma, "gamma_plus": gamma_plus,
             "witness": w_f, "witness_plus": w_b, "classes": int(len(rows)),
             "source": "generic"}
    fs.gamma_cache[(n, mode)] = entry
    return entry


def gamma_report(fs: FSystem, mode: str, *, levels=None) -> list[dict]:
    """Per-level deviation entries for the requested levels."""
    _check_mode(mode)
    if levels is None:
        levels = sorted(set(range(fs.depth)) |
                        set(getattr(fs, "gamma_hooks", {})))
    return [gamma_level(fs, n, mode) for n in levels]


def condition_gamma(fs: FSystem, mode: str, *, levels=None,
                    budget: Fraction | None = None) -> dict:
    """Summability certificate for the deviation rates.

    In ratio mode the certified condition is ``sum gamma_n < budget``
    with the budget defaulting to 1. In affine mode every finite tower
    has a finite sum; the report carries the partial sums and, when a
    budget is supplied, checks them against it.
    """
    _check_mode(mode)
    entries = gamma_report(fs, mode, levels=levels)
    total = ZERO
    partial = []
    for e in entries:
        total += e["gamma"]
        if mode == "affine" and e.get("gamma_plus") is not None:
            total += e["gamma_plus"]
        partial.append(total)
    if budget is None and mode == "ratio":
        budget = ONE
    satisfied = True if budget is None else bool(total < budget)
    return {"mode": mode, "entries": entries, "partial_sums": partial,
            "total": total, "budget": budget, "satisfied": satisfied}


def _deepest_edge_map(fs: FSystem, src: Thread, dst: Thread, mode: str) -> tuple[EdgeMap, int]:
    n = min(src.depth, dst.depth)
    return s_estimate(fs, n, src.vertex(n), dst.vertex(n), mode), n


def lift_apply(fs: FSystem, point: FencePoint, mode: str, *,
               min_depth: int = 0) -> dict:
    """Push a fence point one step through the lifted dynamics.

    The base thread moves by the determinism scan; the height moves by
    the deepest available edge map. The result dict carries the image
    point, the level whose map was used, and the in-tower tail bound on
    the height error (the sum of deeper built gamma values, scaled by
    the source height in ratio mode).
    """
    _check_mode(mode)
    thread = point.thread
    lo, hi = fs.fiber_interval(thread)
    if not lo <= point.height <= hi:
        raise ImageOutsideFiber(
            f"height {point.height} outside fiber [{lo}, {hi}] of {thread!r}")
    image = base_image(fs.tower, thread, min_depth=min_depth)
    emap, n = _deepest_edge_map(fs, thread, image, mode)
    h = emap(point.height)
    dlo, dhi = emap.dst
    if not dlo <= h <= dhi:
        raise ImageOutsideFiber(
            f"lifted height {h} left the target fiber [{dlo}, {dhi}]")
    tail = ZERO
    for m in range(n, fs.depth):
        entry = gamma_level(fs, m, mode)
        tail += entry["gamma"]
        if mode == "affine" and entry.get("gamma_plus") is not None:
            tail += entry["gamma_plus"]
    if mode == "ratio":
        tail *= point.height
    return {"point": FencePoint(image, h), "level_used": n,
            "tail_bound_built": tail}


def lift_inverse(fs: FSystem, point: FencePoint, mode: str, *,
                 min_depth: int = 0) -> dict:
    """Pull a fence point one step backward through the lifted dynamics."""
    _check_mode(mode)
    thread = point.thread
    lo, hi = fs.fiber_interval(thread)
    if not lo <= point.height <= hi:
        raise ImageOutsideFiber(
            f"height {point.height} outside fiber [{lo}, {hi}] of {thread!r}")
    pre = base_preimage(fs.tower, thread, min_depth=min_depth)
    emap, n = _deepest_edge_map(fs, pre, thread, mode)
    inv = emap.inverse() if emap.slope != 0 else None
    if inv is None:
        h = emap.src[0]
    else:
        h = inv(point.height)
    slo, shi = emap.src
    if not slo <= h <= shi:
        raise ImageOutsideFiber(
            f"pulled-back height {h} left the source fiber [{slo}, {shi}]")
    tail = ZERO
    for m in range(n, fs.depth):
        entry = gamma_level(fs, m, mode)
        tail += entry["gamma"]
        if mode == "affine" and entry.get("gamma_plus") is not None:
            tail += entry["gamma_plus"]
    if mode == "ratio":
        tail *= point.height
    return {"point": FencePoint(pre, h), "level_used": n,
            "tail_bound_built": tail}
