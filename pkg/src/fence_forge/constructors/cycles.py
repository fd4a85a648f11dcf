"""Cycle towers: periodic levels whose lifted dynamics are isometries.

A cycle level is a disjoint union of directed cycles. Every vertex of a
cycle carries the same fiber interval, the edge relation is the cyclic
successor, and each cycle projects onto a cycle one level up whose
length divides its own. Two structural facts make these towers the
isometry workhorses:

* the successor map is a bijection on every level, so the first level
  at which two threads differ is preserved by the dynamics and base
  distances are exact invariants;
* both endpoints are constant along each cycle, so every edge map (in
  either scaling mode) is the identity on its interval and all
  deviation rates vanish identically.

Three builders live here. ``build_warmup_isometry`` splits each cycle
into a same-length half-interval copy plus all subinterval pairs on an
ever finer uniform grid. ``build_isometry_lift`` builds the two
fence-valued variants: a grid-pair family whose classification is
``fraisse_fence`` and a zero-anchored rung family whose classification
is ``lelek_fence``. Both variants can thread a designated chain of
masked cycles through the tower; masked vertices are recorded per level
in ``meta["masks"]`` and their fibers obey the variant's endpoint
contract (shrinking below the level diameter for the grid variant,
frozen for the rung variant).

The grid variant keeps levels explicit through depth 4 and certifies
the step into level 5 through rate and deviation hooks computed from
the per-parent child family, which depends on the parent fiber alone.
"""

from fractions import Fraction

import numpy as np

from ..errors import InsufficientCycles, RatioModeRequiresZeroLower
from ..fence_systems import FSystem, eta_exact, eta_one_sided
from ..graph_systems import Level, Tower
from ..rationals import ValueTable, pow2

ZERO = Fraction(0)
ONE = Fraction(1)
HALF = Fraction(1, 2)


class CycleLayer:
    """One level of a cycle tower, recorded cycle by cycle.

    ``parent[c]`` is the index of the cycle one level up that cycle c
    projects onto (-1 on the root layer). ``lo``/``hi`` are the constant
    fiber endpoints of each cycle; ``masked`` flags designated cycles.
    """

    __slots__ = ("lengths", "parent", "lo", "hi", "masked")

    def __init__(self, lengths, parent, lo, hi, masked=None):
        self.lengths = np.asarray(lengths, dtype=np.int64)
        self.parent = np.asarray(parent, dtype=np.int64)
        self.lo = list(lo)
        self.hi = list(hi)
        if masked is None:
            masked = np.zeros(len(self.lengths), dtype=bool)
        self.masked = np.asarray(masked, dtype=bool)
        if not (len(self.parent) == len(self.lo) == len(self.hi)
                == len(self.masked) == len(self.lengths)):
            raise InsufficientCycles("cycle layer arrays disagree in length")
        if len(self.lengths) == 0:
            raise InsufficientCycles("cycle layer is empty")

    @property
    def ncycles(self) -> int:
        return len(self.lengths)

    @property
    def nvertices(self) -> int:
        return int(self.lengths.sum())

    def offsets(self) -> np.ndarray:
        out = np.zeros(self.ncycles + 1, dtype=np.int64)
        np.cumsum(self.lengths, out=out[1:])
        return out


def _layer_to_level(layer: CycleLayer, prev: CycleLayer | None):
    """Materialize a layer as a Level plus per-vertex cycle/pos arrays."""
    offs = layer.offsets()
    total = int(offs[-1])
    cyc = np.repeat(np.arange(layer.ncycles, dtype=np.int64), layer.lengths)
    starts = offs[:-1][cyc]
    pos = np.arange(total, dtype=np.int64) - starts
    if prev is None:
        bond = None
    else:
        poffs = prev.offsets()
        pc = layer.parent[cyc]
        bond = poffs[:-1][pc] + pos % prev.lengths[pc]
    dst = starts + (pos + 1) % layer.lengths[cyc]
    level = Level(total, bond=bond, edges=(np.arange(total, dtype=np.int64), dst))
    return level, cyc


def _assemble(layers: list[CycleLayer], meta: dict) -> FSystem:
    table = ValueTable()
    levels, lo_ids, hi_ids, masks = [], [], [], []
    prev = None
    for layer in layers:
        level, cyc = _layer_to_level(layer, prev)
        levels.append(level)
        cyc_lo = np.fromiter((table.add(f) for f in layer.lo),
                             dtype=np.int64, count=layer.ncycles)
        cyc_hi = np.fromiter((table.add(f) for f in layer.hi),
                             dtype=np.int64, count=layer.ncycles)
        lo_ids.append(cyc_lo[cyc])
        hi_ids.append(cyc_hi[cyc])
        masks.append(np.flatnonzero(layer.masked[cyc]))
        prev = layer
    meta = dict(meta)
    meta["masks"] = masks
    meta["cycle_counts"] = [layer.ncycles for layer in layers]
    tower = Tower(levels, meta={"family": meta.get("family"),
                                "dynamic": "cycle_shift"})
    return FSystem(tower, lo_ids, hi_ids, table, meta=meta)


def build_warmup_isometry(depth: int = 5) -> FSystem:
    """Uniform-grid subinterval tower over period-doubling cycles.

    At step k every cycle of length m over [l, u] spawns one length-m
    cycle over the upper half [(l+u)/2, u] and, for every grid pair
    0 <= i < j <= k+1 on the (k+1)-point uniform grid, a length-2m cycle
    over [l + i*d, l + j*d] with d = (u-l)/(k+1). The (0, k+1) pair
    repeats the parent fiber on a doubled cycle, so every vertex keeps a
    same-interval child. Vertex counts multiply by k^2 + 3k + 3 each
    step: 1, 3, 21, 273, 5733, 177723.
    """
    layers = [CycleLayer([1], [-1], [ZERO], [ONE])]
    for k in range(depth):
        cur = layers[-1]
        lengths, parent, lo, hi = [], [], [], []
        for c in range(cur.ncycles):
            m = int(cur.lengths[c])
            l, u = cur.lo[c], cur.hi[c]
            d = (u - l) / (k + 1)
            lengths.append(m)
            parent.append(c)
            lo.append((l + u) / 2)
            hi.append(u)
            for i in range(k + 2):
                for j in range(i + 1, k + 2):
                    lengths.append(2 * m)
                    parent.append(c)
                    lo.append(l + d * i)
                    hi.append(l + d * j)
        layers.append(CycleLayer(lengths, parent, lo, hi))
    return _assemble(layers, {"family": "warmup_isometry", "depth": depth})


def _grid_children(l: Fraction, u: Fraction, n: int, include_masked: bool):
    """Child fibers of a grid-variant cycle at step n -> n+1.

    Returns (interval, length_factor, masked) triples; length_factor
    multiplies the parent cycle length.
    """
    a = u - l
    q = 1 << n
    p = a / q
    out = []
    for i in range(q + 1):
        for j in range(i + 1, q + 1):
            factor = 1 if (i == 0 and j == q) else 2
            out.append(((l + p * i, l + p * j), factor, False))
    out.append(((l, l + p / 2), 2, False))
    out.append(((u - p / 2, u), 2, False))
    if include_masked:
        g = min(a, pow2(-(n + 1))) / 2
        c = (l + u) / 2
        out.append(((c - g / 2, c + g / 2), 1, True))
    return out


def _rung_children(l: Fraction, u: Fraction, n: int, include_masked: bool):
    """Child fibers of a rung-variant cycle at step n -> n+1."""
    q = 1 << n
    out = []
    for i in range(1, q + 1):
        factor = 1 if i == q else 2
        out.append(((ZERO, u * Fraction(i, q)), factor, False))
    if include_masked:
        out.append(((ZERO, u), 1, True))
    return out


_FAMILIES = {"fraisse": _grid_children, "lelek": _rung_children}


def _grid_rate_hook(fs: FSystem, n: int, include_masked: bool):
    """Exact rates for the scheduled grid-variant step at level n.

    The child family of a parent depends only on the parent fiber, and
    the covering functional is affine-invariant, so one exact solve per
    distinct fiber length suffices. Witnesses name the first vertex
    whose length class attains each maximum.
    """
    def hook():
        pairs, first = np.unique(
            np.stack([fs.lo[n], fs.hi[n]], axis=1), axis=0, return_index=True)
        by_len: dict[Fraction, int] = {}
        for (lo_id, hi_id), v in zip(pairs, first):
            a = fs.values.value(int(hi_id)) - fs.values.value(int(lo_id))
            if a not in by_len:
                by_len[a] = int(np.flatnonzero(
                    (fs.lo[n] == lo_id) & (fs.hi[n] == hi_id))[0])
        eta = ep = em = ZERO
        w = wp = wm = 0
        for a, v in by_len.items():
            fam = _grid_children(ZERO, a, n, include_masked)
            kids = [iv for iv, _, _ in fam]
            e = eta_exact((ZERO, a), kids)
            p_ = eta_one_sided((ZERO, a), [b for _, b in kids])
            m_ = eta_one_sided((ZERO, a), [x for x, _ in kids])
            if e > eta:
                eta, w = e, v
            if p_ > ep:
                ep, wp = p_, v
            if m_ > em:
                em, wm = m_, v
        return {"level": n, "eta": eta, "eta_witness": fs.tower.label(n, w),
                "eta_plus": ep, "eta_plus_witness": fs.tower.label(n, wp),
                "eta_minus": em, "eta_minus_witness": fs.tower.label(n, wm),
                "layouts": len(by_len), "source": "constructor"}
    return hook


def _cycle_gamma_hook(fs: FSystem, n: int, children_per_parent):
    """Deviation certificate for a scheduled cycle-level step.

    Every edge of a cycle level joins two vertices of one cycle, which
    carry identical fibers, so each edge map is the identity and every
    deviation (either mode, either direction) is exactly zero. The class
    count tallies distinct (parent fiber, child fiber) pairs.
    """
    def hook(mode: str):
        if mode == "ratio":
            has_nonzero = any(np.any(arr != fs.values.add(ZERO))
                              for arr in fs.lo)
            if has_nonzero:
                raise RatioModeRequiresZeroLower(
                    "scheduled cycle level has nonzero lower endpoints")
        pairs = np.unique(np.stack([fs.lo[n], fs.hi[n]], axis=1), axis=0)
        classes = sum(children_per_parent(
            fs.values.value(int(a)), fs.values.value(int(b)))
            for a, b in pairs)
        entry = {"level": n, "mode": mode, "gamma": ZERO, "witness": None,
                 "classes": int(classes), "source": "constructor"}
        if mode == "affine":
            entry["gamma_plus"] = ZERO
            entry["witness_plus"] = None
        return entry
    return hook


def build_isometry_lift(variant: str = "fraisse", depth: int | None = None,
                        include_masked: bool = True) -> FSystem:
    """Cycle tower whose lift is an exact isometry of a named fence.

    ``variant="fraisse"`` grows, per parent fiber of length a, every
    grid pair on the pitch-(a/2^n) grid (the full pair on a same-length
    cycle, the rest doubled), two half-pitch corner cycles, and one
    masked cycle centered in the parent with fiber length
    min(a, 2^-(n+1))/2. Levels stay explicit through depth 4; the step
    into level 5 is certified by hooks and recorded in
    ``meta["scheduled"]``.

    ``variant="lelek"`` grows zero-anchored rungs [0, i*u/2^n] (the top
    rung on a same-length cycle, the rest doubled) plus one masked
    same-length cycle with the parent fiber frozen. All levels explicit.
    """
    if variant not in _FAMILIES:
        raise ValueError(f"unknown variant {variant!r}")
    if depth is None:
        depth = 4 if variant == "fraisse" else 5
    family = _FAMILIES[variant]

    layers = [CycleLayer([1], [-1], [ZERO], [ONE])]
    for n in range(depth):
        cur = layers[-1]
        lengths, parent, lo, hi, masked = [], [], [], [], []
        for c in range(cur.ncycles):
            m = int(cur.lengths[c])
            for (a, b), factor, is_masked in family(
                    cur.lo[c], cur.hi[c], n, include_masked):
                lengths.append(factor * m)
                parent.append(c)
                lo.append(a)
                hi.append(b)
                masked.append(is_masked)
        layers.append(CycleLayer(lengths, parent, lo, hi, masked))

    fs = _assemble(layers, {"family": f"isometry_lift_{variant}",
                            "depth": depth,
                            "include_masked": include_masked})
    if variant == "fraisse":
        q = 1 << depth
        per_parent = q * (q + 1) // 2 + 2 + (1 if include_masked else 0)
        top = layers[-1]
        doubled = per_parent - (2 if include_masked else 1)
        vfactor = (2 if include_masked else 1) + 2 * doubled
        fs.meta["scheduled"] = {
            "level": depth + 1,
            "cycles": int(top.ncycles * per_parent),
            "vertices": int(top.nvertices * vfactor),
        }
        fs.eta_hooks[depth] = _grid_rate_hook(fs, depth, include_masked)
        fs.gamma_hooks[depth] = _cycle_gamma_hook(
            fs, depth,
            lambda a, b: len(_grid_children(a, b, depth, include_masked)))
    return fs
