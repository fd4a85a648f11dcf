"""Orbit-template towers: transitive, chaotic, and mixing lifts.

The transitive and chaotic families here are cut from one engineered
binary sequence, the *template*. It is grown in stages. Stage s wraps
the previous core in a ladder of tagged blocks: a *grade tag* is a flag
(``1 0^14 1``) followed by fixed-width stage and grade fields, and the
grade in force at a position is the one of the nearest tag on its left
(no tag in sight means grade 0). Each stage closes with a grade-0 tag,
so everything built later sits at grade 0 for every earlier stage. Up
ladders are matched by down ladders, hence grades only ever step by
one between neighboring positions. Three kinds of content ride in the
blocks:

* *carrier copies*: verbatim copies of the full previous core (tags
  included) hosted at a few selected grades, chosen so the geometric
  heights ``r^e`` walk from 1 down below ``2^-s`` in steps of at most
  ``3 * 2^-s``;
* a *de Bruijn run* of order ``2s + 2`` in the grade-0 span, so every
  window narrow enough for the earlier levels already occurs at the
  all-frozen grades and later content never mints new shallow cells;
* zero pads everywhere else, sized so the flag pattern cannot occur by
  accident (verified by a scan at build time).

Level s of the tower has one vertex per class of template positions
under the key (level s-1 cell, centered width-(2s+1) word, stage-s
grade); edges are the observed successor pairs, the bond forgets the
last component, and the fiber over a cell is ``[0, h]`` with ``h`` the
parent height times ``r_s^grade``. Because carrier copies reproduce
the old content tags and all, copied positions land in the same old
cells and hand every cell a child at every selected grade: that is at
once the dagger child (grade 0), the one-sided rate certificate, and
the covering ladder for the designated orbit. The level above the top
built one is scheduled, not materialized: its stage would copy the
whole core at every selected grade, so its rate and deviation entries
are computed from the built arrays plus the schedule and installed as
hooks.

The transitive lift designates the template point itself (the orbit
through position 0 visits every cell of every level). The chaotic lift
keeps, per stage, the periodization of that stage's core: its period
is the core length, the wrap happens inside zero pads, and all earlier
periodic orbits sit in grade-0 cells of every later stage, so their
heights stay frozen. The mixing lift is a small separate build over
the full-shift tower with an invariant cylinder mask kept at full
height.
"""

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ..errors import MalformedTower, ModeMismatch, PeriodicSearchExhausted
from ..fence_systems import FSystem, eta_one_sided
from ..graph_systems import Level, Tower
from ..rationals import ValueTable, pow2
from .shift import ZeroBackedPoint, build_shift_tower, invariant_point_mask

ZERO = Fraction(0)
ONE = Fraction(1)

FLAG_ZEROS = 14
STAGE_BITS = 3
GRADE_BITS = 9
PAD_LEN = 12
COLLAR = 48
SCAN_MARGIN = 8

PAD = [0] * PAD_LEN


def _bits(value: int, width: int) -> list[int]:
    if value < 0 or value >= (1 << width):
        raise MalformedTower(f"{value} does not fit in {width} bits")
    return [(value >> (width - 1 - i)) & 1 for i in range(width)]


def _flag() -> list[int]:
    return [1] + [0] * FLAG_ZEROS + [1]


def _tag(stage: int, grade: int) -> list[int]:
    return _flag() + _bits(stage, STAGE_BITS) + _bits(grade, GRADE_BITS) + [1]


TAG_LEN = len(_tag(1, 0))

_DB_CACHE: dict[int, list[int]] = {}


def de_bruijn_run(order: int) -> list[int]:
    """Binary de Bruijn sequence of the given order, linearized.

    Standard Lyndon-word concatenation; the first order-1 symbols are
    appended so every order-wide window occurs in the flat string.
    """
    cached = _DB_CACHE.get(order)
    if cached is not None:
        return list(cached)
    a = [0] * (order + 1)
    seq: list[int] = []

    def build(t: int, p: int) -> None:
        if t > order:
            if order % p == 0:
                seq.extend(a[1:p + 1])
            return
        a[t] = a[t - p]
        build(t + 1, p)
        for j in range(a[t - p] + 1, 2):
            a[t] = j
            build(t + 1, t)

    build(1, 1)
    run = seq + seq[:order - 1]
    _DB_CACHE[order] = run
    return list(run)


def ladder_params(stage: int) -> tuple[Fraction, list[int]]:
    """Height ratio and selected carrier grades for one stage.

    The ratio is ``1 - 2^-(stage+2)``. Selected grades are the greedy
    walk down the geometric ladder keeping consecutive carrier heights
    within ``3 * 2^-stage`` of each other and stopping once a carrier
    sits at or below ``2 * 2^-stage``; both margins leave the covering
    radius for level stage-1 strictly inside its ``3 * 2^-stage``
    budget. Stage 1 needs no carriers at all (the whole unit fiber is
    within budget), so its ladder is empty and the stage adds no tags.
    """
    ratio = ONE - pow2(-(stage + 2))
    bottom = 2 * pow2(-stage)
    gap_budget = 3 * pow2(-stage)
    selected: list[int] = []
    e = 0
    h = ONE
    last = ONE
    while last > bottom:
        e += 1
        h *= ratio
        if h <= bottom or last - h * ratio > gap_budget:
            selected.append(e)
            last = h
    return ratio, selected


@dataclass
class _Core:
    sym: np.ndarray
    tags: list[tuple[int, int, int]]
    origin: int
    inner_offset: int


class _Assembler:
    def __init__(self):
        self.parts: list[np.ndarray] = []
        self.length = 0
        self.tags: list[tuple[int, int, int]] = []

    def add(self, symbols) -> int:
        arr = np.asarray(symbols, dtype=np.int8)
        offset = self.length
        self.parts.append(arr)
        self.length += len(arr)
        return offset

    def add_tag(self, stage: int, grade: int) -> None:
        self.tags.append((self.length, stage, grade))
        self.add(_tag(stage, grade))

    def add_core(self, core: _Core) -> int:
        offset = self.length
        self.tags.extend((offset + p, s, g) for p, s, g in core.tags)
        self.add(core.sym)
        return offset

    def finish(self, origin: int, inner_offset: int) -> _Core:
        return _Core(np.concatenate(self.parts), self.tags, origin,
                     inner_offset)


def _stage_core(prev: _Core, stage: int, selected: list[int]) -> _Core:
    top = selected[-1] if selected else 0
    chosen = set(selected)
    asm = _Assembler()
    asm.add(PAD)
    if top:
        # bare ladder on the left: up, down, grade-0 gate before the core
        for e in range(1, top + 1):
            asm.add_tag(stage, e)
            asm.add(PAD)
        for e in range(top - 1, 0, -1):
            asm.add_tag(stage, e)
            asm.add(PAD)
        asm.add_tag(stage, 0)
        asm.add(PAD)
    inner = asm.add_core(prev)
    asm.add(PAD)
    asm.add(de_bruijn_run(2 * stage + 2))
    asm.add(PAD)
    if top:
        # carrier ladder on the right, then back down to the closing 0
        for e in range(1, top + 1):
            asm.add_tag(stage, e)
            if e in chosen:
                asm.add_core(prev)
            asm.add(PAD)
        for e in range(top - 1, -1, -1):
            asm.add_tag(stage, e)
            asm.add(PAD)
    return asm.finish(prev.origin + inner, inner)


def _find_flags(template: np.ndarray) -> np.ndarray:
    """Positions where the flag word 1 0^14 1 occurs."""
    n = len(template)
    span = FLAG_ZEROS + 2
    if n < span:
        return np.zeros(0, dtype=np.int64)
    zeros = np.concatenate([[0], np.cumsum(template == 0)])
    i = np.arange(n - span + 1)
    interior = zeros[i + 1 + FLAG_ZEROS] - zeros[i + 1]
    hit = (template[i] == 1) & (template[i + span - 1] == 1) \
        & (interior == FLAG_ZEROS)
    return i[hit].astype(np.int64)


def _refute_periods(template: np.ndarray, flags: np.ndarray) -> dict:
    """Show the template matches no shift of itself.

    Any self-overlap period short enough for the overlap to retain the
    first flag in full would have to carry that flag onto another flag
    (flags occur nowhere else, which the caller has already verified),
    so those periods are exactly the distances from the first flag to a
    later one; each is refuted by direct comparison. Longer shifts
    leave no complete flag in the overlap, and the designated point is
    zero on both tails, so no global period survives them either.

    A flagless template (a single stage grows no carrier ladder, hence
    no tags) is covered by the support argument alone: the designated
    point is zero outside a finite nonempty support, and any shift
    moves that support, so no period exists.
    """
    n = len(template)
    if len(flags) == 0:
        if not np.any(template):
            raise MalformedTower("template carries no content")
        return {"candidates": 0, "refuted": 0, "scope": "finite_support"}
    first = int(flags[0])
    cands = sorted(int(f) - first for f in flags[1:])
    for p in cands:
        if np.array_equal(template[:-p], template[p:]):
            raise MalformedTower(f"template is periodic with period {p}")
    return {"candidates": len(cands), "refuted": len(cands),
            "scope": n - first - TAG_LEN}


def build_template(depth: int) -> dict:
    """Grow the staged template and verify its landmark structure."""
    if depth < 1:
        raise MalformedTower("orbit templates need depth at least 1")
    core = _Core(np.asarray(PAD + [1] + PAD, dtype=np.int8), [], PAD_LEN, 0)
    cores = [core]
    stage_params = []
    for s in range(1, depth + 1):
        ratio, selected = ladder_params(s)
        core = _stage_core(core, s, selected)
        cores.append(core)
        stage_params.append({
            "stage": s,
            "ratio": str(ratio),
            "selected": list(selected),
            "top_grade": selected[-1] if selected else 0,
            "carriers": len(selected),
            "core_len": int(len(core.sym)),
        })
    template = np.concatenate([
        np.zeros(COLLAR, dtype=np.int8), core.sym,
        np.zeros(COLLAR, dtype=np.int8)])

    # absolute spans of each stage's core inside the final template
    spans = [None] * (depth + 1)
    start = COLLAR
    spans[depth] = (start, start + len(cores[depth].sym))
    for s in range(depth, 0, -1):
        start += cores[s].inner_offset
        spans[s - 1] = (start, start + len(cores[s - 1].sym))

    tag_pos = {s: [] for s in range(1, depth + 1)}
    tag_grade = {s: [] for s in range(1, depth + 1)}
    for off, s, g in core.tags:
        tag_pos[s].append(off + COLLAR)
        tag_grade[s].append(g)
    tags = {}
    for s in range(1, depth + 1):
        pos = np.asarray(tag_pos[s], dtype=np.int64)
        order = np.argsort(pos)
        tags[s] = (pos[order],
                   np.asarray(tag_grade[s], dtype=np.int64)[order])

    flags = _find_flags(template)
    designed = np.sort(np.asarray([off + COLLAR for off, _, _ in core.tags],
                                  dtype=np.int64))
    if not np.array_equal(flags, designed):
        raise MalformedTower(
            f"flag scan found {len(flags)} occurrences, "
            f"{len(designed)} tags were written")
    aperiodicity = _refute_periods(template, flags)

    return {
        "template": template,
        "origin": core.origin + COLLAR,
        "tags": tags,
        "spans": spans,
        "stage_params": stage_params,
        "flags": int(len(flags)),
        "aperiodicity": aperiodicity,
        "depth": depth,
    }


def _grade_field(tags, positions: np.ndarray) -> np.ndarray:
    """Grade in force at each position: nearest tag on the left, else 0."""
    pos, grades = tags
    if len(pos) == 0:
        return np.zeros(len(positions), dtype=np.int64)
    idx = np.searchsorted(pos, positions, side="right") - 1
    return np.where(idx >= 0, grades[np.clip(idx, 0, None)], 0)


def _window_codes(template: np.ndarray, centers: np.ndarray,
                  radius: int) -> np.ndarray:
    wide = template.astype(np.int64)
    codes = np.zeros(len(centers), dtype=np.int64)
    width = 2 * radius + 1
    for k in range(width):
        codes = (codes << 1) | wide[centers - radius + k]
    return codes


def _partition_levels(built: dict) -> dict:
    """Position classes, bonds, edges, and grades for every level."""
    template = built["template"]
    depth = built["depth"]
    n = len(template)
    centers = np.arange(SCAN_MARGIN, n - SCAN_MARGIN, dtype=np.int64)

    ids = np.zeros(len(centers), dtype=np.int64)
    per_level = [{
        "nv": 1, "bond": None, "edges": (np.zeros(1, np.int64),
                                         np.zeros(1, np.int64)),
        "parent": None, "grade": np.zeros(1, np.int64),
        "ids": ids,
    }]
    for s in range(1, depth + 1):
        codes = _window_codes(template, centers, s)
        grade = _grade_field(built["tags"][s], centers)
        if int(np.abs(np.diff(grade)).max(initial=0)) > 1:
            raise MalformedTower(f"stage {s} grade field jumps by more than 1")
        shift = GRADE_BITS + 2 * s + 1
        if int(grade.max(initial=0)) >= (1 << GRADE_BITS) \
                or int(ids.max(initial=0)) >= (1 << (62 - shift)):
            raise MalformedTower("level key does not fit the packing scheme")
        pack = (ids << shift) | (codes << GRADE_BITS) | grade
        uniq, first, inv = np.unique(pack, return_index=True,
                                     return_inverse=True)
        cell_parent = ids[first]
        cell_grade = grade[first]
        nv = len(uniq)
        epack = inv[:-1] * nv + inv[1:]
        epairs = np.unique(epack)
        edges = (epairs // nv, epairs % nv)
        per_level.append({
            "nv": nv, "bond": cell_parent, "edges": edges,
            "parent": cell_parent, "grade": cell_grade, "ids": inv,
        })
        ids = inv
    for lv in per_level:
        if len(np.unique(lv["ids"])) != lv["nv"]:
            raise MalformedTower("a cell escaped the designated orbit")
    return {"levels": per_level, "centers": centers}


def _virtual_stage(depth: int) -> dict:
    ratio, selected = ladder_params(depth + 1)
    tops = [ONE] + [ratio ** e for e in selected]
    eta_plus = eta_one_sided((ZERO, ONE), tops)
    return {"stage": depth + 1, "ratio": ratio, "selected": selected,
            "eta_plus": eta_plus}


def _install_hooks(fs: FSystem, virtual: dict) -> None:
    depth = fs.depth
    label = fs.tower.label(depth, int(fs.meta["designated_vertices"][depth]))

    def eta_hook():
        return {
            "level": depth,
            "eta": None,
            "eta_plus": virtual["eta_plus"],
            "eta_plus_witness": label,
            "eta_minus": None,
            "layouts": 1,
            "source": "constructor",
            "dagger": True,
            "schedule": {"stage": virtual["stage"],
                         "ratio": str(virtual["ratio"]),
                         "selected": list(virtual["selected"])},
        }

    val = fs.values.value
    lv = fs.tower.levels[depth]
    pairs = np.unique(np.stack([fs.hi[depth][lv.edge_src],
                                fs.hi[depth][lv.edge_dst]], axis=1), axis=0)
    ratio = virtual["ratio"]

    def gamma_hook(mode: str):
        if mode != "ratio":
            raise ModeMismatch(
                "the scheduled orbit level certifies ratio mode only")
        worst = ZERO
        witness = None
        for a, b in pairs:
            s_par = val(int(b)) / val(int(a))
            for shift in (ratio, ONE / ratio):
                s_child = s_par * shift
                dev = max(abs(s_par - s_child),
                          abs(ONE / s_par - ONE / s_child))
                if dev > worst:
                    worst = dev
                    witness = (val(int(a)), val(int(b)), shift)
        return {
            "level": depth, "mode": mode, "gamma": worst,
            "witness": witness, "classes": int(len(pairs)) * 2,
            "source": "constructor", "bound": "upper",
            "schedule": {"stage": virtual["stage"],
                         "ratio": str(virtual["ratio"]),
                         "selected": list(virtual["selected"])},
        }

    fs.eta_hooks[depth] = eta_hook
    fs.gamma_hooks[depth] = gamma_hook


def _assemble(built: dict, family: str) -> FSystem:
    depth = built["depth"]
    parts = _partition_levels(built)
    per_level = parts["levels"]
    centers = parts["centers"]

    ratios = {rec["stage"]: Fraction(rec["ratio"])
              for rec in built["stage_params"]}
    table = ValueTable()
    zero_id = table.add(ZERO)
    one_id = table.add(ONE)

    levels = []
    lo_ids = []
    hi_ids = []
    hi_prev = np.asarray([one_id], dtype=np.int64)
    for s, data in enumerate(per_level):
        if s == 0:
            levels.append(Level(1, edges=data["edges"]))
            lo_ids.append(np.asarray([zero_id], dtype=np.int64))
            hi_ids.append(hi_prev)
            continue
        levels.append(Level(data["nv"], bond=data["bond"],
                            edges=data["edges"]))
        parent_hi = hi_prev[data["parent"]]
        key = parent_hi * (1 << GRADE_BITS) + data["grade"]
        uniq, inv = np.unique(key, return_inverse=True)
        r = ratios[s]
        powers: dict[int, Fraction] = {}
        vals = []
        for k in uniq:
            pid, grade = int(k) >> GRADE_BITS, int(k) & ((1 << GRADE_BITS) - 1)
            p = powers.get(grade)
            if p is None:
                p = r ** grade
                powers[grade] = p
            vals.append(table.value(pid) * p)
        new_ids = table.add_many(vals)
        hi = new_ids[inv]
        lo_ids.append(np.full(data["nv"], zero_id, dtype=np.int64))
        hi_ids.append(hi)
        hi_prev = hi

    origin_idx = int(built["origin"]) - SCAN_MARGIN
    designated = [int(data["ids"][origin_idx]) for data in per_level]

    tower = Tower(levels, meta={"family": family, "dynamic": "shift"})
    virtual = _virtual_stage(depth)
    meta = {
        "family": family,
        "depth": depth,
        "template_len": int(len(built["template"])),
        "origin": int(built["origin"]),
        "scan": [int(centers[0]), int(centers[-1]) + 1],
        "stage_params": built["stage_params"],
        "virtual_stage": {"stage": virtual["stage"],
                          "ratio": str(virtual["ratio"]),
                          "selected": list(virtual["selected"]),
                          "eta_plus": str(virtual["eta_plus"])},
        "flags": built["flags"],
        "aperiodicity": built["aperiodicity"],
        "level_sizes": [data["nv"] for data in per_level],
        "designated_vertices": designated,
        "orbit_covers_levels": True,
        "core_spans": [[int(a), int(b)] for a, b in built["spans"]],
        "position_cells": [data["ids"].astype(np.int32)
                           for data in per_level],
    }
    fs = FSystem(tower, lo_ids, hi_ids, table, meta=meta)
    _install_hooks(fs, virtual)
    return fs


def build_transitive_lift(depth: int = 4) -> FSystem:
    """Fence tower with a designated orbit meeting every cell.

    Explicit levels 0..depth from the staged template; the next level
    is scheduled and certified through the eta and gamma hooks. The
    designated thread through the template origin is aperiodic (period
    scan in the build report) and its orbit visits every vertex of
    every built level, carrying the ladder of carrier heights that
    makes the orbit's closure meet every fiber within the covering
    budget.
    """
    built = build_template(depth)
    return _assemble(built, "transitive_orbit_lift")


def build_chaotic_lift(depth: int = 4) -> FSystem:
    """Transitive template plus one designated periodic orbit per stage.

    The stage-s orbit is the periodization of the stage-s core; its
    period is the core length, and the wrap point sits inside zero
    pads, so the closed walk only uses observed cells and edges. Later
    stages keep every earlier core inside their grade-0 span, which
    freezes the earlier orbits' heights; the new orbit sweeps the full
    carrier ladder, so its marks stay dense in the slab one level down.
    """
    built = build_template(depth)
    fs = _assemble(built, "chaotic_orbit_lift")
    spans = fs.meta["core_spans"]
    scan0 = fs.meta["scan"][0]
    cells = fs.meta["position_cells"]
    tail_ids = [int(c[0]) for c in cells]
    orbits = []
    last_period = 0
    for s in range(1, built["depth"] + 1):
        a, b = spans[s]
        period = b - a
        if period <= last_period:
            raise PeriodicSearchExhausted(
                f"stage {s} period {period} does not exceed stage "
                f"{s - 1}'s {last_period}")
        last_period = period
        for level_cells, tail in zip(cells, tail_ids):
            if int(level_cells[a - scan0]) != tail \
                    or int(level_cells[b - 1 - scan0]) != tail:
                raise MalformedTower(
                    f"stage {s} orbit wrap leaves the zero cell")
        orbits.append({"stage": s, "period": int(period),
                       "span": [int(a), int(b)]})
    fs.meta["periodic_orbits"] = orbits
    return fs


def build_mixing_lift(depth: int = 3, extra_generators=()) -> FSystem:
    """Full-shift tower with an invariant cylinder mask held at height 1.

    The mask collects the cylinders met by the zero point and by the
    single-1 point; mask closure is validated by the shift machinery.
    ``extra_generators`` adds finite binary blocks (placed at position
    0) whose shift orbits the mask must also cover. A thread's fiber
    stays ``[0, 1]`` while it is masked and shrinks by ``1 - 2^-(n+2)``
    once, at the level where it first leaves the mask, staying constant
    after that. Every vertex therefore keeps a child with the identical
    fiber, and the ratio deviations per level stay summable.
    """
    tower = build_shift_tower(depth)
    points = [ZeroBackedPoint(0, "1")]
    points.extend(ZeroBackedPoint(0, block) for block in extra_generators)
    mask = invariant_point_mask(tower, points)
    lo_lists = []
    hi_lists = []
    prev = [ONE, ONE]
    for n in range(depth + 1):
        lv = tower.levels[n]
        flags = mask.mask_array(n, lv.nv)
        if n == 0:
            heights = [ONE if flags[v] else ONE - pow2(-2)
                       for v in range(lv.nv)]
        else:
            shrink = ONE - pow2(-(n + 2))
            pflags = mask.mask_array(n - 1, tower.levels[n - 1].nv)
            heights = []
            for v in range(lv.nv):
                base = prev[int(lv.bond[v])]
                if flags[v] or not pflags[int(lv.bond[v])]:
                    heights.append(base)
                else:
                    heights.append(base * shrink)
        lo_lists.append([ZERO] * lv.nv)
        hi_lists.append(heights)
        prev = heights
    meta = {
        "family": "mixing_lift",
        "depth": depth,
        "mask_sizes": [int(len(m)) for m in mask.marks],
        "generators": ["zero", "single-1 at 0",
                       *(f"block {b} at 0" for b in extra_generators)],
    }
    fs = FSystem.from_fractions(tower, lo_lists, hi_lists, meta=meta)
    fs.meta["mask"] = mask
    return fs
