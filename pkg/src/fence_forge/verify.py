"""Machine-checkable certificates for lifted fence systems.

Each public checker returns a JSON-ready certificate dict built around
the common envelope

    {"kind": ...,
     "verdict": "pass" | "fail" | "unwitnessed",
     "witnesses": [...],
     "bounds": {"claimed": "p/q", "observed": "p/q"}}

plus checker-specific sections. Every verdict is decided by exact
rational comparison; no check leans on floating point. A verdict of
``unwitnessed`` means the claim could not be exercised on the given
system (for example a masked-vertex contract on a tower built without
masks); callers should treat it as distinct from both pass and fail.

The checkers cover the dynamical claims the constructors advertise:

* :func:`check_factor`: projection to the base intertwines the lift on
  a lattice of sample points (thread and endpoint heights per vertex).
* :func:`check_isometry`: all deviation rates vanish and sampled pair
  distances are preserved exactly at the built resolution; masked
  vertex contracts (shrinking gaps, or frozen positive tops) hold.
* :func:`check_transitive`: the designated orbit's marks meet every
  cell and cover every fiber within the per-stage radius budget, while
  the deviation rates stay summable below the ratio-mode budget.
* :func:`check_periodic`: threads fixed by the p-fold base dynamics,
  their fiber gaps, and whether the upper endpoint returns after p or
  2p steps; on staged-orbit towers also the per-stage periodic marks
  (distinct growing periods, frozen heights, clean wraps).
* :func:`check_mixing`: for every ordered cylinder pair at a level, a
  masked connecting word chain of every length in a window, with the
  masks rebuilt per pair from generator points and validated exactly.
* :func:`check_entropy`: greedy separated-set counts inside fibers
  stay below the n/epsilon packing bound, and the base growth rate is
  constant and equal to the lifted symbolic model's growth.
* :func:`check_twosided_inheritance`: every slab box contains a
  full-fiber sub-box, degenerate fibers (when present) are dense, each
  single-cycle level returns in exactly one cycle length, and recorded
  refinement certificates hold item by item.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .errors import (FenceForgeError, InsufficientDepth, MarksMissing,
                     ModeMismatch)
from .fence_systems import (FencePoint, FSystem, degenerate_density,
                            eta_one_sided, fence_distance)
from .graph_systems import (Thread, base_image, iterate_base,
                            thread_from_vertex)
from .lifting import condition_gamma, gamma_report, lift_apply, s_estimate
from .rationals import format_frac, pow2

ZERO = Fraction(0)
ONE = Fraction(1)

FACTOR_POINT_CAP = 50_000
ISOMETRY_PAIR_CAP = 10_000


def _frac(value) -> str:
    return format_frac(Fraction(value))


def certificate(kind: str, verdict: str, witnesses: list,
                claimed, observed, **extra) -> dict:
    """Assemble the common certificate envelope."""
    if verdict not in ("pass", "fail", "unwitnessed"):
        raise ValueError(f"unknown verdict {verdict!r}")
    cert = {
        "kind": kind,
        "verdict": verdict,
        "witnesses": witnesses,
        "bounds": {"claimed": _frac(claimed), "observed": _frac(observed)},
    }
    cert.update(extra)
    return cert


def _zero_lower(fs: FSystem) -> bool:
    zero_id = fs.values.add(ZERO)
    return all(bool(np.all(arr == zero_id)) for arr in fs.lo)


def _auto_mode(fs: FSystem) -> str:
    """Ratio when the fibers admit it, affine otherwise.

    Ratio mode needs every lower endpoint at zero and every upper
    endpoint positive; degenerate spikes force the affine realization.
    """
    if not _zero_lower(fs):
        return "affine"
    zero_id = fs.values.add(ZERO)
    if any(bool(np.any(arr == zero_id)) for arr in fs.hi):
        return "affine"
    return "ratio"


def _stride_sample(nv: int, cap: int, include=()) -> tuple[np.ndarray, bool]:
    """Deterministic vertex sample: everything when it fits, else a stride."""
    if nv <= cap:
        return np.arange(nv, dtype=np.int64), True
    stride = -(-nv // cap)
    verts = np.arange(0, nv, stride, dtype=np.int64)
    if include:
        verts = np.unique(np.concatenate(
            [verts, np.asarray(list(include), dtype=np.int64)]))
    return verts, False


def check_factor(fs: FSystem, mode: str | None = None,
                 depth: int | None = None, *,
                 point_cap: int = FACTOR_POINT_CAP) -> dict:
    """Certify that base projection intertwines the lifted dynamics.

    Samples a lattice of fence points (each vertex at the test depth
    with its fiber's lower endpoint, midpoint, and upper endpoint),
    pushes each through the lift, and demands that the image thread is
    the base image of the source thread with the image height inside
    the image fiber. Any raised realization error counts as a failure
    with a named witness. The lattice is exhaustive whenever the level
    fits the point budget; otherwise a deterministic stride sample that
    always includes the designated vertex is used.
    """
    if mode is None:
        mode = _auto_mode(fs)
    if depth is None:
        depth = min(fs.depth, 4)
    if not 1 <= depth <= fs.depth:
        raise InsufficientDepth(f"factor check needs a built level {depth}")
    nv = fs.tower.levels[depth].nv
    include = []
    designated = fs.meta.get("designated_vertices")
    if designated is not None:
        include.append(int(designated[depth]))
    verts, exhaustive = _stride_sample(nv, max(1, point_cap // 3), include)

    failures: list[dict] = []
    checked = 0
    for v in verts:
        t = thread_from_vertex(fs.tower, depth, int(v))
        img = base_image(fs.tower, t)
        lo, hi = fs.fiber_interval(t)
        for h in dict.fromkeys((lo, (lo + hi) / 2, hi)):
            checked += 1
            try:
                res = lift_apply(fs, FencePoint(t, h), mode)
            except FenceForgeError as exc:
                failures.append({"vertex": fs.tower.label(depth, int(v)),
                                 "height": _frac(h),
                                 "error": type(exc).__name__})
                continue
            if res["point"].thread.vertices != img.vertices:
                failures.append({"vertex": fs.tower.label(depth, int(v)),
                                 "height": _frac(h),
                                 "error": "image thread mismatch"})
    witnesses = [{"level": depth, "mode": mode, "vertices": int(len(verts)),
                  "points": checked, "exhaustive": exhaustive}]
    witnesses.extend(failures[:8])
    verdict = "pass" if checked and not failures else "fail"
    return certificate("factor", verdict, witnesses,
                       ZERO, Fraction(len(failures)),
                       level=depth, points=checked, exhaustive=exhaustive)


def _masked_shrinking(fs: FSystem, masks) -> dict:
    depth = fs.depth
    claimed = pow2(-depth)
    observed = ZERO
    worst = None
    for v in masks[depth]:
        lo, hi = fs.interval(depth, int(v))
        gap = hi - lo
        if gap > observed:
            observed = gap
            worst = fs.tower.label(depth, int(v))
    ok = observed < claimed and len(masks[depth]) > 0
    return {"contract": "shrinking_gap", "level": depth,
            "masked": int(len(masks[depth])),
            "claimed": _frac(claimed), "observed": _frac(observed),
            "witness": worst, "ok": bool(ok)}


def _masked_frozen(fs: FSystem, masks) -> dict:
    bottom = ONE
    worst = None
    frozen = True
    for n in range(1, fs.depth + 1):
        bond = fs.tower.levels[n].bond
        for v in masks[n]:
            iv = fs.interval(n, int(v))
            piv = fs.interval(n - 1, int(bond[int(v)]))
            if iv != piv:
                frozen = False
                worst = fs.tower.label(n, int(v))
            if iv[1] < bottom:
                bottom = iv[1]
    ok = frozen and bottom > 0 and any(len(masks[n]) for n in range(1, fs.depth + 1))
    return {"contract": "frozen_top", "min_masked_top": _frac(bottom),
            "frozen": bool(frozen), "witness": worst, "ok": bool(ok)}


def check_isometry(fs: FSystem, mode: str | None = None,
                   depth: int | None = None, *,
                   pair_cap: int = ISOMETRY_PAIR_CAP) -> dict:
    """Certify that the lift is an isometry at the built resolution.

    Two exact facts are demanded. First, every deviation entry (hooks
    included) vanishes, in both directions. Second, on a deterministic
    sample of thread pairs at the test depth, the max-metric distance
    between the points (threads truncated to the common image depth,
    heights at the fiber tops) equals the distance of their lifted
    images exactly. Towers carrying masked designated vertices are
    additionally held to their variant's endpoint contract: fibers
    shrinking below the level diameter, or fibers frozen at a positive
    top. Requesting ratio mode on a tower with nonzero lower endpoints
    raises :class:`ModeMismatch`.
    """
    if mode is None:
        mode = _auto_mode(fs)
    if mode == "ratio" and not _zero_lower(fs):
        raise ModeMismatch(
            "ratio mode demands vanishing lower endpoints on every level")

    entries = gamma_report(fs, mode)
    max_gamma = ZERO
    for e in entries:
        max_gamma = max(max_gamma, e["gamma"])
        if e.get("gamma_plus") is not None:
            max_gamma = max(max_gamma, e["gamma_plus"])
    gamma_zero = max_gamma == 0

    if depth is None:
        depth = min(fs.depth, 4)
    nv = fs.tower.levels[depth].nv
    smax = 2
    while (smax + 1) * smax // 2 <= pair_cap:
        smax += 1
    verts, exhaustive = _stride_sample(nv, smax)
    threads = [thread_from_vertex(fs.tower, depth, int(v)) for v in verts]
    tops = [fs.fiber_interval(t)[1] for t in threads]
    lifted = []
    for t, h in zip(threads, tops):
        res = lift_apply(fs, FencePoint(t, h), mode)
        lifted.append(res["point"])

    mismatches: list[dict] = []
    pairs = 0
    for i in range(len(threads)):
        for j in range(i + 1, len(threads)):
            qi, qj = lifted[i], lifted[j]
            common = min(qi.thread.depth, qj.thread.depth)
            before = fence_distance(
                FencePoint(threads[i].truncate(common), tops[i]),
                FencePoint(threads[j].truncate(common), tops[j]))
            after = fence_distance(
                FencePoint(qi.thread.truncate(common), qi.height),
                FencePoint(qj.thread.truncate(common), qj.height))
            pairs += 1
            if before != after:
                mismatches.append({
                    "pair": [fs.tower.label(depth, int(verts[i])),
                             fs.tower.label(depth, int(verts[j]))],
                    "before": _frac(before), "after": _frac(after)})

    masks = fs.meta.get("masks")
    masked_section = None
    if masks is not None and any(len(m) for m in masks):
        family = fs.meta.get("family", "")
        if family.endswith("fraisse"):
            masked_section = _masked_shrinking(fs, masks)
        else:
            masked_section = _masked_frozen(fs, masks)

    ok = gamma_zero and not mismatches and pairs > 0
    if masked_section is not None:
        ok = ok and masked_section["ok"]
    witnesses = [{"level": depth, "mode": mode, "pairs": pairs,
                  "exhaustive": exhaustive, "gamma_zero": bool(gamma_zero)}]
    witnesses.extend(mismatches[:8])
    if masked_section is not None:
        witnesses.append(masked_section)
    return certificate("isometry", "pass" if ok else "fail", witnesses,
                       ZERO, max_gamma,
                       level=depth, pairs=pairs,
                       distance_mismatches=len(mismatches),
                       masked=masked_section)


def _orbit_marks(fs: FSystem):
    cells = fs.meta.get("position_cells")
    spans = fs.meta.get("core_spans")
    scan = fs.meta.get("scan")
    if cells is None or spans is None or scan is None:
        raise MarksMissing(
            "system carries no designated-orbit marks "
            "(position_cells / core_spans / scan)")
    return cells, spans, int(scan[0])


def _stage_density(fs: FSystem, cells, span, stage: int) -> dict:
    """Covering radius of one stage's marks, one level up from the stage.

    Groups the stage's positions by their level-(stage-1) cell, reads
    the frozen level-``stage`` tops available inside each group, and
    returns the worst exact one-sided covering radius of the parent
    fibers by those tops, along with the cell coverage count.
    """
    a, b = span
    n = stage - 1
    par = cells[n][a:b]
    top = cells[stage][a:b]
    order = np.argsort(par, kind="stable")
    par_sorted = par[order]
    top_sorted = top[order]
    cuts = np.flatnonzero(np.diff(par_sorted)) + 1
    groups = np.split(np.arange(len(par_sorted)), cuts)
    radius = ZERO
    worst = None
    seen = 0
    for g in groups:
        v = int(par_sorted[g[0]])
        seen += 1
        hi_v = fs.hi_value(n, v)
        ids = np.unique(fs.hi[stage][top_sorted[g]])
        heights = [fs.values.value(int(i)) for i in ids]
        r = eta_one_sided((ZERO, hi_v), heights)
        if r > radius:
            radius = r
            worst = fs.tower.label(n, v)
    nv = fs.tower.levels[n].nv
    return {"stage": stage, "level": n, "cells": nv, "covered": seen,
            "coverage": bool(seen == nv), "radius": radius, "witness": worst}


def check_transitive(fs: FSystem, point=None, depth: int | None = None) -> dict:
    """Certify the designated orbit's density and the deviation budget.

    Demands, per built level, the ratio-mode deviation strictly below
    half the level diameter, the deviation sum strictly below the
    summability budget, and per stage a designated-orbit covering
    radius at most three times half the level diameter: the marks of
    stage s meet every level-(s-1) cell and their frozen tops cover
    every parent fiber within the exact one-sided radius. Raises
    :class:`MarksMissing` on systems without orbit marks, and
    :class:`ModeMismatch` when the fibers do not admit ratio mode.
    """
    cells, spans, scan0 = _orbit_marks(fs)
    if not _zero_lower(fs):
        raise ModeMismatch("orbit certificates run in ratio mode; "
                           "lower endpoints must vanish")
    if depth is None:
        depth = fs.depth
    if point is not None:
        want = list(fs.meta.get("designated_vertices", []))
        got = list(point.vertices) if isinstance(point, Thread) else list(point)
        if got != want[:len(got)]:
            return certificate("transitive", "fail",
                               [{"error": "designated point mismatch",
                                 "given": got, "recorded": want}],
                               ZERO, ONE)

    summ = condition_gamma(fs, "ratio")
    gamma_rows = []
    gamma_ok = True
    for e in summ["entries"]:
        budget = pow2(-(e["level"] + 1))
        ok = e["gamma"] < budget
        gamma_ok = gamma_ok and ok
        gamma_rows.append({"level": e["level"], "gamma": _frac(e["gamma"]),
                           "budget": _frac(budget), "ok": bool(ok),
                           "source": e.get("source", "generic")})

    stages = []
    density_ok = True
    for s in range(1, depth + 1):
        a, b = spans[s]
        row = _stage_density(fs, cells, (a - scan0, b - scan0), s)
        budget = 3 * pow2(-s)
        observed = max(row["radius"], pow2(-s))
        ok = row["coverage"] and observed <= budget
        density_ok = density_ok and ok
        stages.append({"stage": s, "level": row["level"],
                       "cells": row["cells"], "covered": row["covered"],
                       "radius": _frac(row["radius"]),
                       "observed": _frac(observed),
                       "budget": _frac(budget),
                       "witness": row["witness"], "ok": bool(ok)})

    ok = gamma_ok and bool(summ["satisfied"]) and density_ok
    witnesses = [{"stages": len(stages),
                  "gamma_total": _frac(summ["total"]),
                  "gamma_budget": _frac(summ["budget"]),
                  "aperiodicity": fs.meta.get("aperiodicity", {}).get("scope"),
                  "orbit_covers_levels": fs.meta.get("orbit_covers_levels")}]
    witnesses.extend(r for r in gamma_rows if not r["ok"])
    witnesses.extend(r for r in stages if not r["ok"])
    return certificate("transitive", "pass" if ok else "fail", witnesses,
                       ONE, summ["total"],
                       gamma=gamma_rows, stages=stages,
                       designated=fs.meta.get("designated_vertices"))


def _staged_orbit_section(fs: FSystem) -> dict:
    """Per-stage periodic-mark facts on a staged-orbit tower."""
    cells, spans, scan0 = _orbit_marks(fs)
    orbits = fs.meta.get("periodic_orbits", [])
    rows = []
    ok = True
    last = 0
    for rec in orbits:
        s = rec["stage"]
        a, b = rec["span"]
        period = rec["period"]
        growing = period > last
        last = period
        frozen = True
        pos = slice(a - scan0, b - scan0)
        base_ids = fs.hi[s][cells[s][pos]]
        for m in range(s + 1, fs.depth + 1):
            if not np.array_equal(fs.hi[m][cells[m][pos]], base_ids):
                frozen = False
                break
        wrap = all(int(cells[n][a - scan0]) == int(cells[n][0])
                   and int(cells[n][b - 1 - scan0]) == int(cells[n][0])
                   for n in range(fs.depth + 1))
        row_ok = growing and frozen and wrap and period == b - a
        ok = ok and row_ok
        rows.append({"stage": s, "period": period, "growing": bool(growing),
                     "frozen": bool(frozen), "wrap_in_tail": bool(wrap),
                     "ok": bool(row_ok)})
    return {"orbits": rows, "ok": bool(ok and rows)}


def check_periodic(fs: FSystem, max_period: int | None = None,
                   depth: int | None = None, *,
                   thread_cap: int = 4096) -> dict:
    """Find threads fixed by the p-fold base dynamics and their fibers.

    For each period p up to the bound, every sampled thread at the test
    depth is pushed p steps; a thread whose truncation equals its image
    is periodic at the built resolution. For each such thread the fiber
    gap is recorded together with the upper endpoint's return: after p
    steps (``return: p``), after 2p steps when depth allows a second
    look (``return: 2p``), or ``none`` when neither matches. On towers
    carrying staged periodic marks the per-stage facts (strictly
    growing periods, frozen heights, wraps through the tail cell) are
    certified as well.
    """
    if depth is None:
        depth = fs.depth
    if max_period is None:
        max_period = max(1, min(4, depth - 1))
    if max_period >= depth + 1:
        raise InsufficientDepth(
            f"period {max_period} needs more than {depth} built levels")
    nv = fs.tower.levels[depth].nv
    verts, exhaustive = _stride_sample(nv, thread_cap)

    found: list[dict] = []
    returns_ok = True
    for p in range(1, max_period + 1):
        for v in verts:
            t = thread_from_vertex(fs.tower, depth, int(v))
            try:
                it = iterate_base(fs.tower, t, p)
            except InsufficientDepth:
                continue
            if t.truncate(it.depth).vertices != it.vertices:
                continue
            lo, hi = fs.fiber_interval(t)
            top_back = fs.fiber_interval(it)[1]
            top_here = fs.fiber_interval(t.truncate(it.depth))[1]
            if top_back == top_here:
                ret = "p"
            else:
                ret = "none"
                if depth - 2 * p >= 0:
                    it2 = iterate_base(fs.tower, it, p)
                    if (fs.fiber_interval(it2)[1]
                            == fs.fiber_interval(t.truncate(it2.depth))[1]):
                        ret = "2p"
            if ret == "none":
                returns_ok = False
            found.append({"period": p, "vertex": fs.tower.label(depth, int(v)),
                          "fiber_gap": _frac(hi - lo), "return": ret})

    staged = None
    if "periodic_orbits" in fs.meta:
        staged = _staged_orbit_section(fs)

    ok = returns_ok and (staged is None or staged["ok"])
    witnesses = [{"level": depth, "max_period": max_period,
                  "threads": int(len(verts)), "exhaustive": exhaustive,
                  "fixed": len(found)}]
    witnesses.extend(found[:8])
    if staged is not None:
        witnesses.extend(staged["orbits"])
    return certificate("periodic", "pass" if ok else "fail", witnesses,
                       Fraction(max_period), Fraction(len(found)),
                       fixed=found, staged=staged)


def check_mixing(fs_or_tower, mask=None, level: int = 2,
                 window: int | None = None, horizon: int | None = None) -> dict:
    """Certify masked connections between all cylinder pairs at a level.

    Without an explicit mask, each ordered pair (U, V) of level-n words
    gets its own invariant mask built from three generator kinds: the U
    point, the V point, and one connecting point per tested gap. The
    certificate demands a masked path of every length in the window for
    every pair; mask invariance is validated exactly during
    construction. With an explicit mask, the same profile runs for the
    masked vertices of that mask instead. The window defaults to the
    word width (the least gap at which two blocks are disjoint) and the
    horizon to eight more; raising the horizon only adds lengths, so a
    passing certificate stays passing on any sub-window.
    """
    from .constructors.shift import (invariant_point_mask,
                                     masked_path_profile, mixing_points,
                                     vertex_word, width)

    tower = fs_or_tower.tower if isinstance(fs_or_tower, FSystem) else fs_or_tower
    if level > tower.depth:
        raise InsufficientDepth(f"mixing level {level} not built")
    if window is None:
        window = width(level)
    if horizon is None:
        horizon = window + 8
    lengths = list(range(window, horizon + 1))

    nv = tower.levels[level].nv
    if mask is not None:
        words = [vertex_word(level, int(v)) for v in mask.marks[level]]
    else:
        words = [vertex_word(level, v) for v in range(nv)]

    failures: list[dict] = []
    pairs = 0
    connected = 0
    for u_word in words:
        for v_word in words:
            pairs += 1
            if mask is None:
                pair_mask = invariant_point_mask(
                    tower, mixing_points(u_word, v_word, lengths))
            else:
                pair_mask = mask
            prof = masked_path_profile(tower, pair_mask, level,
                                       u_word, v_word, lengths)
            if prof["all_connected"]:
                connected += 1
            else:
                missing = [m for m, hit in prof["reach"].items() if not hit]
                failures.append({"u": u_word, "v": v_word,
                                 "missing_lengths": missing})

    ok = pairs > 0 and not failures
    witnesses = [{"level": level, "window": [window, horizon],
                  "pairs": pairs, "connected": connected,
                  "per_pair_masks": mask is None}]
    witnesses.extend(failures[:8])
    return certificate("mixing", "pass" if ok else "fail", witnesses,
                       Fraction(pairs), Fraction(connected),
                       level=level, window=window, horizon=horizon,
                       failures=len(failures))


def _separated_count(length: Fraction, scale: Fraction, eps: Fraction) -> int:
    """Largest strictly-eps-separated set in [0, length] at metric scale.

    Points x with pairwise scaled distance strictly above eps: q + 1
    points need scaled span strictly above q * eps, so the exact
    maximum is floor(length * scale / eps) + 1, dropping to the integer
    itself when the ratio is a whole number.
    """
    if eps <= 0:
        raise ValueError("separation scale must be positive")
    q = (length * scale) / eps
    whole = q.numerator // q.denominator
    return whole if q.denominator == 1 and whole > 0 else whole + 1


def check_entropy(fs: FSystem, depth: int | None = None,
                  eps_grid=(Fraction(1, 4), Fraction(1, 8), Fraction(1, 16)),
                  n_max: int = 16, *, fiber_cap: int = 32) -> dict:
    """Certify zero fiber entropy and base-equal lifted growth.

    Fibers: for sampled threads, the orbit's exact height ratios give
    the scale of the time-n metric on the fiber; the largest strictly
    separated set is counted in closed form and must stay at or below
    n/epsilon for every n up to the horizon and every epsilon in the
    grid. Growth: path counts in the level digraph must grow by one
    constant integer factor per step (the base growth), and the lifted
    symbolic model must grow identically; the lift adds no states
    because the fiber top is slaved to the vertex, which is certified
    by checking the top-to-top identity along every edge.
    """
    if depth is None:
        depth = min(fs.depth, 4)
    mode = _auto_mode(fs)

    nv_deep = fs.tower.levels[fs.depth].nv
    include = []
    designated = fs.meta.get("designated_vertices")
    if designated is not None:
        include.append(int(designated[fs.depth]))
    verts, _ = _stride_sample(nv_deep, fiber_cap, include)
    fiber_rows = []
    fibers_ok = True
    for v in verts:
        t = thread_from_vertex(fs.tower, fs.depth, int(v))
        lo, hi = fs.fiber_interval(t)
        length = hi - lo
        tops = [hi]
        cur = t
        while cur.depth > 0 and tops[-1] > 0:
            try:
                cur = base_image(fs.tower, cur)
            except FenceForgeError:
                break
            tops.append(fs.fiber_interval(cur)[1])
        for ncap in range(1, n_max + 1):
            if length == 0 or hi == 0:
                break
            scale = max(h / hi for h in tops[:ncap]) if mode == "ratio" else ONE
            for eps in eps_grid:
                count = _separated_count(length, scale, eps)
                if Fraction(count) > Fraction(ncap) / eps:
                    fibers_ok = False
        fiber_rows.append({"vertex": fs.tower.label(fs.depth, int(v)),
                           "length": _frac(length), "steps": len(tops) - 1})

    lv = fs.tower.levels[depth]
    counts = [Fraction(lv.nv)]
    src = np.asarray(lv.edge_src, dtype=np.int64)
    dst = np.asarray(lv.edge_dst, dtype=np.int64)
    vec = np.ones(lv.nv, dtype=np.int64)
    for _ in range(depth + 2):
        nxt = np.zeros(lv.nv, dtype=np.int64)
        np.add.at(nxt, src, vec[dst])
        vec = nxt
        counts.append(Fraction(int(vec.sum())))
    ratios = [counts[k + 1] / counts[k] for k in range(len(counts) - 1)]
    growth_constant = len(set(ratios)) == 1
    growth = ratios[0] if growth_constant else ZERO

    slaved = True
    bad_edge = None
    if mode == "ratio":
        for u, v in zip(src[:4096], dst[:4096]):
            emap = s_estimate(fs, depth, int(u), int(v), mode)
            if emap(fs.hi_value(depth, int(u))) != fs.hi_value(depth, int(v)):
                slaved = False
                bad_edge = (fs.tower.label(depth, int(u)),
                            fs.tower.label(depth, int(v)))
                break
    lift_equal = slaved

    ok = fibers_ok and growth_constant and slaved and lift_equal
    witnesses = [{"level": depth, "fibers": len(fiber_rows),
                  "n_max": n_max,
                  "eps_grid": [_frac(e) for e in eps_grid],
                  "growth_factor": _frac(growth),
                  "growth_constant": bool(growth_constant),
                  "lift_growth_equal": bool(lift_equal),
                  "top_slaved": bool(slaved), "bad_edge": bad_edge}]
    return certificate("entropy", "pass" if ok else "fail", witnesses,
                       growth, growth,
                       fibers=fiber_rows,
                       ratios=[_frac(r) for r in ratios])


def _full_fiber_subbox(fs: FSystem) -> dict:
    rows = []
    ok = True
    for n in range(fs.depth):
        lvc = fs.tower.levels[n + 1]
        bond = lvc.bond
        match = ((fs.lo[n + 1] == fs.lo[n][bond])
                 & (fs.hi[n + 1] == fs.hi[n][bond]))
        covered = np.zeros(fs.tower.levels[n].nv, dtype=bool)
        covered[bond[match]] = True
        missing = np.flatnonzero(~covered)
        row_ok = len(missing) == 0
        ok = ok and row_ok
        rows.append({"level": n, "boxes": int(len(covered)),
                     "witnessed": int(covered.sum()),
                     "missing": [fs.tower.label(n, int(v))
                                 for v in missing[:4]],
                     "ok": bool(row_ok)})
    return {"levels": rows, "ok": bool(ok)}


def _cycle_visits(fs: FSystem) -> dict | None:
    if fs.tower.meta.get("dynamic") != "cycle_shift":
        return None
    rows = []
    ok = True
    for n in range(fs.depth + 1):
        lv = fs.tower.levels[n]
        src = np.asarray(lv.edge_src, dtype=np.int64)
        dst = np.asarray(lv.edge_dst, dtype=np.int64)
        if len(src) != lv.nv or len(np.unique(src)) != lv.nv:
            rows.append({"level": n, "single_cycle": False, "ok": False})
            ok = False
            continue
        step = np.empty(lv.nv, dtype=np.int64)
        step[src] = dst
        seen = 1
        v = int(step[0])
        while v != 0 and seen <= lv.nv:
            v = int(step[v])
            seen += 1
        row_ok = seen == lv.nv
        ok = ok and row_ok
        rows.append({"level": n, "cells": int(lv.nv), "return_time": seen,
                     "single_cycle": bool(row_ok), "ok": bool(row_ok)})
    return {"levels": rows, "ok": bool(ok)}


def _refinement_items(fs: FSystem) -> dict | None:
    """Item-by-item audit of recorded equal-piece refinements.

    For each recorded refinement with quality epsilon: (a) child fibers
    nest inside their parent's, (b) every parent keeps a child with the
    identical fiber, (c) every grid pair of the parent's equal-piece
    grid appears among the children and the pitch is strictly below
    epsilon, (d) the deviation rates of the refined step, forward and
    inverse, are strictly below epsilon.
    """
    refinements = fs.meta.get("refinements")
    if not refinements:
        return None
    gam = {e["level"]: e for e in gamma_report(fs, "affine")}
    rows = []
    ok = True
    for rec in refinements:
        n = rec["level"]
        eps = Fraction(rec["epsilon"])
        pieces = int(rec["pieces"])
        bond = fs.tower.levels[n].bond
        nest = True
        dagger = True
        grid_ok = True
        pitch_worst = ZERO
        parents = fs.tower.levels[n - 1].nv
        kids_lo = fs.values.values_for(fs.lo[n])
        kids_hi = fs.values.values_for(fs.hi[n])
        par_lo = fs.values.values_for(fs.lo[n - 1])
        par_hi = fs.values.values_for(fs.hi[n - 1])
        seen_pairs: list[set] = [set() for _ in range(parents)]
        for c in range(fs.tower.levels[n].nv):
            g = int(bond[c])
            a, b = kids_lo[c], kids_hi[c]
            pa, pb = par_lo[g], par_hi[g]
            if not (pa <= a <= b <= pb):
                nest = False
            step = (pb - pa) / pieces
            jj = (a - pa) / step
            kk = (b - pa) / step
            if jj.denominator == 1 and kk.denominator == 1:
                seen_pairs[g].add((int(jj), int(kk)))
            else:
                grid_ok = False
        want = pieces * (pieces + 1) // 2
        for g in range(parents):
            if len(seen_pairs[g]) != want:
                grid_ok = False
            if (0, pieces) not in seen_pairs[g]:
                dagger = False
            pitch = (par_hi[g] - par_lo[g]) / pieces
            pitch_worst = max(pitch_worst, pitch)
        pitch_ok = pitch_worst < eps
        entry = gam.get(n - 1)
        dev_ok = (entry is not None and entry["gamma"] < eps
                  and entry.get("gamma_plus", ZERO) < eps)
        row_ok = nest and dagger and grid_ok and pitch_ok and dev_ok
        ok = ok and row_ok
        rows.append({"level": n, "epsilon": _frac(eps), "pieces": pieces,
                     "nesting": bool(nest), "dagger": bool(dagger),
                     "grid_complete": bool(grid_ok),
                     "pitch": _frac(pitch_worst), "pitch_ok": bool(pitch_ok),
                     "gamma": _frac(entry["gamma"]) if entry else None,
                     "gamma_plus": _frac(entry["gamma_plus"])
                     if entry and entry.get("gamma_plus") is not None else None,
                     "deviation_ok": bool(dev_ok), "ok": bool(row_ok)})
    return {"refinements": rows, "ok": bool(ok)}


def check_twosided_inheritance(fs: FSystem) -> dict:
    """Certify that the built slabs inherit the limit fence's texture.

    Three structural facts and one family-specific audit: every slab
    box contains a full-fiber sub-box over a child cylinder; when the
    system has degenerate fibers at all, every vertex sees one below
    itself at a recorded depth; cycle-dynamic levels consist of one
    cycle each, so every orbit meets every cylinder of its level within
    one cycle length; and recorded refinement certificates are checked
    item by item against their stored quality.
    """
    subbox = _full_fiber_subbox(fs)

    has_degenerate = any(bool(np.any(fs.lo[n] == fs.hi[n]))
                         for n in range(fs.depth + 1))
    density_rows = []
    density_ok = True
    if has_degenerate:
        for n in range(fs.depth + 1):
            rep = degenerate_density(fs, n)
            density_ok = density_ok and rep["all_witnessed"]
            density_rows.append({"level": n,
                                 "degenerate": rep["degenerate_count"],
                                 "all_witnessed": rep["all_witnessed"]})
    density = {"levels": density_rows, "ok": bool(density_ok),
               "applicable": bool(has_degenerate)}

    visits = _cycle_visits(fs)
    refits = _refinement_items(fs)

    parts = [subbox["ok"]]
    if has_degenerate:
        parts.append(density_ok)
    if visits is not None:
        parts.append(visits["ok"])
    if refits is not None:
        parts.append(refits["ok"])
    ok = all(parts)
    witnessed = sum(r["witnessed"] for r in subbox["levels"])
    boxes = sum(r["boxes"] for r in subbox["levels"])
    witnesses = [{"subbox_levels": len(subbox["levels"]),
                  "degenerate_applicable": bool(has_degenerate),
                  "cycle_dynamic": visits is not None,
                  "refinements": len(refits["refinements"]) if refits else 0}]
    witnesses.extend(r for r in subbox["levels"] if not r["ok"])
    return certificate("twosided_inheritance", "pass" if ok else "fail",
                       witnesses, Fraction(boxes), Fraction(witnessed),
                       subbox=subbox, degenerate=density,
                       cycle_visits=visits, refinements=refits)
