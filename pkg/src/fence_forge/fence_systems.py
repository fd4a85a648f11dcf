"""Endpoint structure over a tower: fibers, nesting, and approximation rates.

An :class:`FSystem` decorates each tower vertex with an exact rational
interval ``[lo, hi]``; the fence approximated at depth d consists of the
points ``(thread, t)`` with ``t`` in the thread's deepest fiber interval.
Two monotonicity constraints make the levels genuinely refine each
other: a child's interval must sit inside its parent's. A *dagger* child
is one whose interval equals the parent's exactly; requiring one under
every vertex keeps every partial fiber alive all the way down.

The quantitative heart of the module is the family of approximation
rates. For one parent vertex g with interval I(g) and child intervals
I(c), define

    eta(g) = max over subintervals J of I(g) of
             min over children c of d_H(J, I(c)),

where d_H is the Hausdorff distance between intervals, which for
``[a, b]`` and ``[c, d]`` equals ``max(|a - c|, |b - d|)``. So eta(g) is
small exactly when the children realize every possible subinterval
shape. The one-sided rates eta_plus / eta_minus only ask the children's
upper (lower) endpoints to approximate every height in I(g).

All three are computed exactly. Identifying an interval ``[a, b]`` with
the point ``(a, b)``, subintervals of I(g) form the closed triangle
``lo <= a <= b <= hi`` and a Hausdorff ball is an L-infinity square, so
eta(g) is the smallest r at which the child squares of radius r cover
the triangle. That optimum is always one of finitely many candidate
radii built from endpoint differences, and feasibility of a given r is
decided by an exact strip sweep; see :func:`eta_exact`. The one-sided
rates reduce to 1-D covering with a closed candidate set.

eta is invariant under affine rescaling of the parent interval, so
parents are grouped by their normalized child layout and each distinct
layout is solved once. Constructors of very large levels can install
per-level hooks (``FSystem.eta_hooks``) that produce the same numbers
from their own class structure; tests cross-check hooks against this
generic path on small instances.
"""

from __future__ import annotations

import os
from bisect import bisect_left
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

import numpy as np

from .errors import (DaggerMissing, InsufficientDepth, MalformedTower,
                     OrderViolation)
from .graph_systems import Thread, Tower, thread_distance
from .rationals import ValueTable, format_frac, frac_max, pow2

ZERO = Fraction(0)
ONE = Fraction(1)


def hausdorff_interval(a: Fraction, b: Fraction, c: Fraction, d: Fraction) -> Fraction:
    """Hausdorff distance between nonempty closed intervals [a,b], [c,d]."""
    if a > b or c > d:
        raise OrderViolation("intervals must satisfy lo <= hi")
    return max(abs(a - c), abs(b - d))


class FSystem:
    """A tower with exact interval data on every vertex.

    ``lo`` and ``hi`` hold, per level, numpy arrays of ids into the
    shared :class:`ValueTable`. ``eta_hooks`` optionally maps a level
    index n to a zero-argument callable returning that level's rate
    entry (the dict shape of :func:`eta_level`) for levels whose size
    rules out the generic path.
    """

    def __init__(self, tower: Tower, lo, hi, values: ValueTable, meta=None):
        self.tower = tower
        self.values = values
        self.lo = [np.asarray(a) for a in lo]
        self.hi = [np.asarray(a) for a in hi]
        self.meta = dict(meta) if meta else {}
        self.eta_hooks: dict[int, object] = {}
        self.gamma_hooks: dict[int, object] = {}
        self.gamma_cache: dict[tuple[int, str], dict] = {}
        if len(self.lo) != len(tower.levels) or len(self.hi) != len(tower.levels):
            raise MalformedTower("endpoint tables must cover every level")
        for n, lv in enumerate(tower.levels):
            if len(self.lo[n]) != lv.nv or len(self.hi[n]) != lv.nv:
                raise MalformedTower(f"endpoint table length mismatch at level {n}")

    @classmethod
    def from_fractions(cls, tower: Tower, lo_lists, hi_lists, meta=None) -> "FSystem":
        table = ValueTable()
        lo = [table.add_many(level) for level in lo_lists]
        hi = [table.add_many(level) for level in hi_lists]
        return cls(tower, lo, hi, table, meta=meta)

    @property
    def depth(self) -> int:
        return self.tower.depth

    def lo_value(self, n: int, v: int) -> Fraction:
        return self.values.value(self.lo[n][v])

    def hi_value(self, n: int, v: int) -> Fraction:
        return self.values.value(self.hi[n][v])

    def interval(self, n: int, v: int) -> tuple[Fraction, Fraction]:
        return self.lo_value(n, v), self.hi_value(n, v)

    def fiber_interval(self, thread: Thread) -> tuple[Fraction, Fraction]:
        """The deepest (tightest) interval along a thread."""
        return self.interval(thread.depth, thread.top)

    def gap(self, n: int, v: int) -> Fraction:
        return self.hi_value(n, v) - self.lo_value(n, v)

    def interval_pairs(self, n: int) -> list[tuple[Fraction, Fraction]]:
        """Deduplicated list of interval values present at level n."""
        pairs = np.unique(np.stack([self.lo[n], self.hi[n]], axis=1), axis=0)
        return [(self.values.value(int(a)), self.values.value(int(b)))
                for a, b in pairs]

    def mesh(self, n: int) -> Fraction:
        """Largest fiber interval length at level n."""
        return frac_max([b - a for a, b in self.interval_pairs(n)])


class FencePoint:
    """A point of the approximated fence: a thread plus an exact height."""

    __slots__ = ("thread", "height")

    def __init__(self, thread: Thread, height: Fraction):
        self.thread = thread
        self.height = Fraction(height)

    def __eq__(self, other):
        return (isinstance(other, FencePoint) and other.thread == self.thread
                and other.height == self.height)

    def __repr__(self):
        return f"FencePoint({self.thread!r}, {self.height})"


def fence_distance(p: FencePoint, q: FencePoint) -> Fraction:
    """max of the base 2^-n distance and the height difference."""
    return max(thread_distance(p.thread, q.thread), abs(p.height - q.height))


def dagger_children(fs: FSystem, n: int) -> np.ndarray:
    """For each level-n vertex, a child with the identical interval, or -1."""
    if n >= fs.depth:
        raise InsufficientDepth(f"level {n + 1} not built")
    bond = fs.tower.levels[n + 1].bond
    same = (fs.lo[n + 1] == fs.lo[n][bond]) & (fs.hi[n + 1] == fs.hi[n][bond])
    out = np.full(fs.tower.levels[n].nv, -1, dtype=np.int64)
    idx = np.flatnonzero(same)
    # reversed write order so the lowest-index matching child wins
    out[bond[idx[::-1]]] = idx[::-1]
    return out


def validate_f_system(fs: FSystem, *, require_dagger: bool = True,
                      strict: bool = True) -> dict:
    """Check interval order, nesting, and dagger coverage level by level.

    Order: lo <= hi at every vertex. Nesting: each child interval sits
    inside its parent's. Dagger: every non-bottom vertex has a child
    carrying the identical interval. Violations raise (strict) or are
    collected in the report. Comparisons run in rank space, so the
    arrays never materialize Fractions.
    """
    report: dict = {"violations": [], "dagger": []}
    ranks = fs.values.ranks()
    for n, lv in enumerate(fs.tower.levels):
        lo_r = ranks[fs.lo[n]]
        hi_r = ranks[fs.hi[n]]
        bad = np.flatnonzero(lo_r > hi_r)
        if len(bad):
            v = int(bad[0])
            msg = (f"level {n} vertex {fs.tower.label(n, v)} has lo > hi: "
                   f"{fs.lo_value(n, v)} > {fs.hi_value(n, v)}")
            if strict:
                raise OrderViolation(msg)
            report["violations"].append(msg)
        if n == 0:
            continue
        bond = lv.bond
        plo_r = ranks[fs.lo[n - 1]][bond]
        phi_r = ranks[fs.hi[n - 1]][bond]
        bad = np.flatnonzero((lo_r < plo_r) | (hi_r > phi_r))
        if len(bad):
            v = int(bad[0])
            msg = (f"level {n} vertex {fs.tower.label(n, v)} interval "
                   f"[{fs.lo_value(n, v)}, {fs.hi_value(n, v)}] leaves its parent")
            if strict:
                raise OrderViolation(msg)
            report["violations"].append(msg)

    for n in range(fs.depth):
        dag = dagger_children(fs, n)
        missing = np.flatnonzero(dag < 0)
        report["dagger"].append({
            "level": n,
            "missing": int(len(missing)),
            "witness": None if len(missing) == 0 else fs.tower.label(n, int(missing[0])),
        })
        if require_dagger and len(missing):
            msg = (f"level {n} vertex {fs.tower.label(n, int(missing[0]))} "
                   f"has no child with the same interval")
            if strict:
                raise DaggerMissing(msg)
            report["violations"].append(msg)
    return report


def _cover_floor(sorted_bs: list[Fraction], r: Fraction, target: Fraction):
    """Least u with [u, target] inside the union of [b-r, b+r] balls.

    ``sorted_bs`` must be ascending. Returns None when no ball contains
    the target. Walks the chain of overlapping balls downward from the
    one covering the target.
    """
    i = bisect_left(sorted_bs, target - r)
    if i == len(sorted_bs) or sorted_bs[i] - r > target:
        return None
    # balls i, i+1, ... all reach past target - r; the chain containing
    # the target extends downward through overlapping balls below i
    low = sorted_bs[i] - r
    j = i - 1
    while j >= 0 and sorted_bs[j] + r >= low:
        low = min(low, sorted_bs[j] - r)
        j -= 1
    return low


def _eta_feasible(children: list[tuple[Fraction, Fraction]],
                  lo: Fraction, hi: Fraction, r: Fraction) -> bool:
    """Exact test: do radius-r Hausdorff balls around the child intervals
    cover every subinterval of [lo, hi]?

    In (a, b) coordinates the balls are squares [a_i - r, a_i + r] x
    [b_i - r, b_i + r] and the target is the triangle lo <= a <= b <= hi.
    Sweeping the critical a-abscissas, the squares active on a strip
    must cover, in the b coordinate, everything from the strip's left
    edge up to hi; that is a floor computation on the merged union.
    """
    xs = {lo, hi}
    for a, _ in children:
        for x in (a - r, a + r):
            if lo < x < hi:
                xs.add(x)
    crit = sorted(xs)

    def ok(x: Fraction, active_bs: list[Fraction]) -> bool:
        if not active_bs:
            return False
        floor = _cover_floor(active_bs, r, hi)
        return floor is not None and floor <= x

    for i, x in enumerate(crit):
        active = sorted(b for a, b in children if a - r <= x <= a + r)
        if not ok(x, active):
            return False
        if i + 1 < len(crit):
            x1 = crit[i + 1]
            active = sorted(b for a, b in children if a - r <= x and x1 <= a + r)
            if not ok(x, active):
                return False
    return True


def eta_exact(parent: tuple[Fraction, Fraction],
              children: list[tuple[Fraction, Fraction]]) -> Fraction:
    """Exact eta for one parent: least r whose child squares cover the
    subinterval triangle.

    The optimum is among finitely many candidates: 0, half-differences
    of child endpoints (two squares meeting), and distances from child
    endpoints to the parent's ends (a square reaching the triangle's
    boundary). Feasibility is monotone in r, so binary search over the
    sorted candidate list with the exact oracle finds the least one.
    """
    lo, hi = parent
    if lo > hi:
        raise OrderViolation("parent interval reversed")
    children = sorted(set(children))
    if not children:
        raise MalformedTower("eta needs at least one child interval")
    if lo == hi:
        return min(max(abs(a - lo), abs(b - lo)) for a, b in children)

    endpoints = sorted({e for ab in children for e in ab})
    cand = {ZERO}
    for i, x in enumerate(endpoints):
        cand.add(abs(x - lo))
        cand.add(abs(hi - x))
        for y in endpoints[i + 1:]:
            cand.add((y - x) / 2)
    ordered = sorted(cand)
    lo_i, hi_i = 0, len(ordered) - 1
    if not _eta_feasible(children, lo, hi, ordered[hi_i]):
        # keep the function total even off the expected candidate set
        r = ordered[hi_i]
        step = max(hi - lo, ONE)
        while not _eta_feasible(children, lo, hi, r):
            r += step
        return r
    while lo_i < hi_i:
        mid = (lo_i + hi_i) // 2
        if _eta_feasible(children, lo, hi, ordered[mid]):
            hi_i = mid
        else:
            lo_i = mid + 1
    return ordered[lo_i]


def eta_one_sided(span: tuple[Fraction, Fraction],
                  points: list[Fraction]) -> Fraction:
    """Exact 1-D covering radius: worst height in the span measured to
    its nearest point.

    The distance-to-nearest-point function is piecewise linear with
    breaks at the points and their midpoints, so the max over the span
    is attained at a span end or at a midpoint inside the span.
    """
    lo, hi = span
    if lo > hi:
        raise OrderViolation("span reversed")
    pts = sorted(set(points))
    if not pts:
        raise MalformedTower("one-sided eta needs at least one endpoint")

    def dist(t: Fraction) -> Fraction:
        i = bisect_left(pts, t)
        best = None
        for j in (i - 1, i):
            if 0 <= j < len(pts):
                d = abs(t - pts[j])
                best = d if best is None else min(best, d)
        return best

    cands = [lo, hi]
    for a, b in zip(pts, pts[1:]):
        m = (a + b) / 2
        if lo < m < hi:
            cands.append(m)
    return max(dist(t) for t in cands)


def _thread_count() -> int:
    try:
        return max(1, int(os.environ.get("FENCE_FORGE_THREADS", "1")))
    except ValueError:
        return 1


def _eta_level_generic(fs: FSystem, n: int) -> dict:
    """eta, eta_plus, eta_minus for one level via normalized-layout dedup."""
    tower = fs.tower
    bond = tower.levels[n + 1].bond
    rows = np.unique(np.stack(
        [bond, fs.lo[n + 1], fs.hi[n + 1]], axis=1), axis=0)
    parents = rows[:, 0]
    starts = np.flatnonzero(np.diff(parents, prepend=-1))
    ends = np.append(starts[1:], len(rows))

    val = fs.values.value
    # layout -> (max gap seen, witness parent with that gap)
    layouts: dict[tuple, tuple[Fraction, int]] = {}
    raw_cache: dict[bytes, tuple] = {}
    for k, s in enumerate(starts):
        p = int(parents[s])
        plo_id, phi_id = int(fs.lo[n][p]), int(fs.hi[n][p])
        raw = np.concatenate(
            [[plo_id, phi_id], rows[s:ends[k], 1], rows[s:ends[k], 2]]
        ).astype(np.int64).tobytes()
        hit = raw_cache.get(raw)
        if hit is not None:
            continue
        plo, phi = val(plo_id), val(phi_id)
        gap = phi - plo
        if gap == 0:
            continue
        norm = tuple(sorted(((val(int(a)) - plo) / gap, (val(int(b)) - plo) / gap)
                            for a, b in zip(rows[s:ends[k], 1], rows[s:ends[k], 2])))
        raw_cache[raw] = norm
        old = layouts.get(norm)
        if old is None or gap > old[0]:
            layouts[norm] = (gap, p)

    def solve(item):
        norm, (gap, p) = item
        kids = list(norm)
        eta_hat = eta_exact((ZERO, ONE), kids)
        ep_hat = eta_one_sided((ZERO, ONE), [b for _, b in kids])
        em_hat = eta_one_sided((ZERO, ONE), [a for a, _ in kids])
        return eta_hat * gap, ep_hat * gap, em_hat * gap, p

    items = list(layouts.items())
    workers = _thread_count()
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(solve, items))
    else:
        results = [solve(it) for it in items]

    eta = ep = em = ZERO
    w_eta = w_ep = w_em = None
    for e2, p2, m2, p in results:
        if w_eta is None or e2 > eta:
            eta, w_eta = e2, p
        if w_ep is None or p2 > ep:
            ep, w_ep = p2, p
        if w_em is None or m2 > em:
            em, w_em = m2, p
    if w_eta is None:
        # every parent fiber degenerate: all rates vanish
        eta = ep = em = ZERO
        w_eta = w_ep = w_em = 0
    return {
        "level": n,
        "eta": eta, "eta_witness": tower.label(n, w_eta),
        "eta_plus": ep, "eta_plus_witness": tower.label(n, w_ep),
        "eta_minus": em, "eta_minus_witness": tower.label(n, w_em),
        "layouts": len(items),
        "source": "generic",
    }


def eta_level(fs: FSystem, n: int) -> dict:
    """Rates between level n and level n+1 (hook-aware).

    Hook entries may leave ``eta`` as None when the full two-sided rate
    is not certified for a scheduled level; the one-sided rates are
    always present.
    """
    if n in fs.eta_hooks:
        entry = dict(fs.eta_hooks[n]())
        entry.setdefault("level", n)
        entry.setdefault("source", "constructor")
        entry.setdefault("eta", None)
        entry.setdefault("eta_minus", None)
        return entry
    if n >= fs.depth:
        raise InsufficientDepth(f"eta at level {n} needs level {n + 1}")
    return _eta_level_generic(fs, n)


def eta_report(fs: FSystem, *, levels=None) -> list[dict]:
    """Per-level exact rate entries for the requested levels.

    Levels default to every bonded pair plus hooked virtual levels.
    Entries carry eta, eta_plus, eta_minus as Fractions (or None when a
    hook does not certify one) with worst-parent witnesses.
    """
    if levels is None:
        levels = sorted(set(range(fs.depth)) | set(fs.eta_hooks))
    return [eta_level(fs, n) for n in levels]


def eta_lower_bound(fs: FSystem, n: int, target) -> dict:
    """Certified lower bound for eta at level n from one target per parent.

    ``target`` maps a parent interval (lo, hi) to a chosen subinterval;
    for each parent, min over children of d_H(target, child) is a lower
    bound for eta(parent). Returns the worst (smallest) bound over all
    nondegenerate parents, absolute and as a ratio to the parent length.
    """
    bond = fs.tower.levels[n + 1].bond
    quads = np.unique(np.stack(
        [fs.lo[n][bond], fs.hi[n][bond], fs.lo[n + 1], fs.hi[n + 1]],
        axis=1), axis=0)
    val = fs.values.value
    best: dict[tuple[int, int], Fraction] = {}
    spans: dict[tuple[int, int], Fraction] = {}
    for plo_id, phi_id, clo_id, chi_id in quads:
        key = (int(plo_id), int(phi_id))
        plo, phi = val(key[0]), val(key[1])
        if plo == phi:
            continue
        spans[key] = phi - plo
        a, b = target(plo, phi)
        d = hausdorff_interval(a, b, val(int(clo_id)), val(int(chi_id)))
        if key not in best or d < best[key]:
            best[key] = d
    if not best:
        raise MalformedTower("no nondegenerate parent at this level")
    absolute = min(best.values())
    ratio = min(b / spans[k] for k, b in best.items())
    return {"level": n, "absolute_min": absolute, "ratio_min": ratio,
            "parents": len(best)}


DEFAULT_RATE_SHIFT = 1


def default_rate(n: int) -> Fraction:
    """Certificate rate threshold for level n: 2^-(n-1)."""
    return pow2(-(n - DEFAULT_RATE_SHIFT))


def classify(fs: FSystem, *, rate=None, levels=None) -> dict:
    """Name the strongest fence class the built levels certify.

    Classes, in precedence order, with their per-level requirements
    (each checked against ``rate(n)``, default 2^-(n-1)):

    * ``cantor``: lower endpoints all zero, upper endpoints all one
      (the full product fence, exact at every built level);
    * ``lelek_fence``: lower endpoints all zero and eta_plus below rate;
    * ``fraisse_fence``: the full two-sided rate eta stays below rate;
    * ``twosided_scissorhand_fence``: eta_plus and eta_minus below rate;
    * ``scissorhand_fence``: eta_plus below rate;
    * ``unclassified`` otherwise.

    When a level's full eta is unavailable (a constructor hook on a huge
    level), an exact disqualifier substitutes where possible: with all
    lower endpoints zero and some fiber of length g > 2*rate(n), aiming
    at the degenerate target [g/2, g/2] forces eta >= g/2 > rate(n), so
    the fraisse check fails with proof. Otherwise the fraisse check is
    recorded as undecided and classification falls through to the next
    class, which is the conservative direction.
    """
    if rate is None:
        rate = default_rate
    if levels is None:
        levels = sorted(set(range(fs.depth)) | set(fs.eta_hooks))
    report: dict = {"rate": {n: format_frac(rate(n)) for n in levels}}

    zero_id = fs.values.add(ZERO)
    one_id = fs.values.add(ONE)
    lower_zero = all(bool(np.all(arr == zero_id)) for arr in fs.lo)
    upper_one = all(bool(np.all(arr == one_id)) for arr in fs.hi)
    if lower_zero and upper_one:
        report["kind"] = "cantor"
        report["levels"] = {}
        return report
    entries = {n: eta_level(fs, n) for n in levels}
    report["levels"] = {
        n: {k: (format_frac(v) if isinstance(v, Fraction) else v)
            for k, v in e.items()}
        for n, e in entries.items()
    }

    fraisse_ok = True
    undecided = False
    shortcut_levels = []
    for n in levels:
        e = entries[n]
        if e.get("eta") is not None:
            if e["eta"] > rate(n):
                fraisse_ok = False
                break
            continue
        if lower_zero and fs.mesh(n) > 2 * rate(n):
            shortcut_levels.append(n)
            fraisse_ok = False
            break
        fraisse_ok = False
        undecided = True
        break
    report["fraisse_shortcut_levels"] = shortcut_levels
    report["fraisse_undecided"] = undecided

    plus_ok = all(entries[n]["eta_plus"] is not None
                  and entries[n]["eta_plus"] <= rate(n) for n in levels)
    minus_ok = all(entries[n].get("eta_minus") is not None
                   and entries[n]["eta_minus"] <= rate(n) for n in levels)

    if lower_zero and plus_ok:
        report["kind"] = "lelek_fence"
    elif fraisse_ok:
        report["kind"] = "fraisse_fence"
    elif plus_ok and minus_ok:
        report["kind"] = "twosided_scissorhand_fence"
    elif plus_ok:
        report["kind"] = "scissorhand_fence"
    else:
        report["kind"] = "unclassified"
    return report


def fence_slab(fs: FSystem, n: int, v: int, depth2: int | None = None) -> list[dict]:
    """Intervals of all descendants of (n, v) at a deeper built level."""
    if depth2 is None:
        depth2 = min(n + 1, fs.depth)
    if not n <= depth2 <= fs.depth:
        raise InsufficientDepth(f"slab target level {depth2} out of range")
    verts = np.asarray([v], dtype=np.int64)
    for k in range(n, depth2):
        indptr, order = fs.tower.children_csr(k)
        verts = np.concatenate([order[indptr[u]:indptr[u + 1]] for u in verts])
    out = []
    for u in verts:
        lo, hi = fs.interval(depth2, int(u))
        out.append({"level": depth2, "vertex": int(u),
                    "label": fs.tower.label(depth2, int(u)),
                    "lo": lo, "hi": hi})
    return out


def degenerate_density(fs: FSystem, n: int) -> dict:
    """How densely zero-length fibers sit below level n.

    For each level-n vertex, find the least built level m >= n at which
    it owns a descendant with a degenerate fiber. A fully witnessed
    report is a finite density certificate for spike tips.
    """
    lv = fs.tower.levels[n]
    witness = np.full(lv.nv, -1, dtype=np.int64)
    for m in range(n, fs.depth + 1):
        proj = np.arange(fs.tower.levels[m].nv, dtype=np.int64)
        for k in range(m, n, -1):
            proj = fs.tower.levels[k].bond[proj]
        hit = np.flatnonzero(fs.lo[m] == fs.hi[m])
        owners = proj[hit]
        fresh = owners[witness[owners] < 0]
        witness[fresh] = m
        if np.all(witness >= 0):
            break
    return {
        "level": n,
        "degenerate_count": int(np.count_nonzero(fs.lo[n] == fs.hi[n])),
        "witness_depth": [int(w) if w >= 0 else None for w in witness],
        "all_witnessed": bool(np.all(witness >= 0)),
    }
