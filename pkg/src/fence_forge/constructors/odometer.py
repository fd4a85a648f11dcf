"""Equal-piece cycle refinements and the minimal lift they generate.

``refine_cycle_odometer`` is the single-step engine: it takes one cycle
whose cells carry nondegenerate fiber intervals and produces a cycle m
times longer. Each parent interval is cut into ``pieces`` equal parts,
a child cell carries the subinterval [grid(j), grid(k)] for a pair
j < k, and the new cycle walks the parent cycle once per pass with a
constant pair per pass. The pass pairs follow a deterministic tour of
the pair triangle that starts and ends at the full-interval pair
(0, pieces), moves one grid unit at a time, and covers every pair;
padding passes repeat the full pair until the requested multiple m is
hit exactly. Two exactness facts carry the certificates:

* within a pass the child edge map is the parent edge map restricted
  to a grid subinterval (the grids are affinely equivariant), so the
  deviation is exactly zero;
* at a pass boundary one endpoint moves one grid unit, so the
  deviation is at most (parent length) / pieces.

``build_minimal_fraisse_lift`` iterates the step with pieces doubling
each refinement (1, 2, 4, 8, ...) and the multiple drawn from a fixed
divisibility chain, defaulting to primorials. The base tower is then a
p-adic odometer, every level is a single cycle (the finite minimality
witness: one turn visits every cell), and the interval data classifies
as a fraisse fence.
"""

from fractions import Fraction

import numpy as np

from ..errors import (MalformedTower, MTooSmall, OrderViolation,
                      PeriodChainExhausted)
from ..fence_systems import FSystem
from ..graph_systems import Level, Tower
from ..rationals import ValueTable

ZERO = Fraction(0)
ONE = Fraction(1)

PRIMORIALS = (2, 6, 30, 210, 2310, 30030)


def build_odometer_tower(lengths) -> Tower:
    """Plain adding-machine tower: one cycle per level, no intervals."""
    lengths = [int(x) for x in lengths]
    if not lengths:
        raise MalformedTower("odometer needs at least one cycle length")
    for a, b in zip(lengths, lengths[1:]):
        if b % a != 0:
            raise MalformedTower(f"cycle length {b} is not a multiple of {a}")
    levels = []
    prev = None
    for n, size in enumerate(lengths):
        pos = np.arange(size, dtype=np.int64)
        bond = None if n == 0 else pos % prev
        edges = (pos, (pos + 1) % size)
        levels.append(Level(size, bond=bond, edges=edges))
        prev = size
    return Tower(levels, meta={"family": "odometer", "lengths": lengths})


def pair_tour(pieces: int) -> list[tuple[int, int]]:
    """Deterministic unit-step tour of the pair triangle.

    Visits every pair 0 <= j < k <= pieces, starting and ending at
    (0, pieces), each step moving a single endpoint by one grid unit.
    Built by chaining shortest unit-step paths between the pairs in
    lexicographic order; revisits count, so the tour length is the
    minimum pass count m0 of the refinement.
    """
    if pieces < 1:
        raise MalformedTower("need at least one piece")
    full = (0, pieces)
    targets = [(j, k) for j in range(pieces + 1)
               for k in range(j + 1, pieces + 1)]

    def step_toward(cur, goal):
        j, k = cur
        gj, gk = goal
        # move j first, then k; each candidate keeps 0 <= j < k <= pieces
        if j != gj:
            nj = j + (1 if gj > j else -1)
            if 0 <= nj < k:
                return (nj, k)
        if k != gk:
            nk = k + (1 if gk > k else -1)
            if j < nk <= pieces:
                return (j, nk)
        # blocked single move (j wants to pass k or vice versa): give way
        if j != gj:
            return (j, k + 1) if k < pieces else (j - 1, k)
        return (j + 1, k) if j + 1 < k else (j, k - 1)

    tour = [full]
    for goal in targets + [full]:
        while tour[-1] != goal:
            tour.append(step_toward(tour[-1], goal))
    return tour


def refine_cycle_odometer(lo, hi, pieces: int, m: int) -> dict:
    """One refinement step: a cycle of intervals to an m-fold cycle.

    ``lo``/``hi`` list the fiber endpoints around the parent cycle, in
    cycle order, all nondegenerate. Returns the child endpoint lists
    (length m * len(lo)), the pass tour, and m0. Raises
    :class:`MTooSmall` (carrying .m0) when m cannot host the tour.
    """
    size = len(lo)
    if size != len(hi) or size == 0:
        raise MalformedTower("endpoint lists must be nonempty and parallel")
    lo = [Fraction(a) for a in lo]
    hi = [Fraction(b) for b in hi]
    for a, b in zip(lo, hi):
        if a >= b:
            raise OrderViolation(f"degenerate parent interval [{a}, {b}]")
    tour = pair_tour(pieces)
    m0 = len(tour)
    if m < m0:
        raise MTooSmall(f"multiple {m} below the minimum pass count {m0}",
                        m0=m0)
    passes = tour + [(0, pieces)] * (m - m0)
    new_lo, new_hi = [], []
    for j, k in passes:
        for g in range(size):
            step = (hi[g] - lo[g]) / pieces
            new_lo.append(lo[g] + step * j)
            new_hi.append(lo[g] + step * k)
    return {"lo": new_lo, "hi": new_hi, "passes": passes, "m0": m0,
            "pieces": pieces, "m": m, "size": m * size}


def build_minimal_fraisse_lift(depth: int = 4, chain=PRIMORIALS) -> FSystem:
    """Iterated equal-piece refinement over a divisibility chain.

    Refinement n (building level n) uses pieces = 2^(n-1) and quality
    epsilon_n = 2^(2-n); the multiple is the least chain entry at or
    above that step's m0 (:class:`PeriodChainExhausted` if none is).
    With the default primorial chain and depth 4 the multiples come out
    (2, 6, 30, 210) and the top cycle has 75600 cells. Per-refinement
    certificates (epsilon, pieces, m0, m) land in ``meta["refinements"]``.
    """
    chain = sorted(set(int(c) for c in chain))
    lo, hi = [ZERO], [ONE]
    level_data = [(lo, hi)]
    refinements = []
    for n in range(1, depth + 1):
        pieces = 1 << (n - 1)
        tour_len = len(pair_tour(pieces))
        pick = next((c for c in chain if c >= tour_len), None)
        if pick is None:
            raise PeriodChainExhausted(
                f"no chain entry at or above m0={tour_len} for refinement {n}")
        step = refine_cycle_odometer(lo, hi, pieces, pick)
        lo, hi = step["lo"], step["hi"]
        level_data.append((lo, hi))
        refinements.append({
            "level": n,
            "epsilon": Fraction(4, 1 << n),
            "pieces": pieces,
            "m0": step["m0"],
            "m": pick,
            "size": step["size"],
        })

    table = ValueTable()
    levels, lo_ids, hi_ids = [], [], []
    prev_size = None
    for n, (los, his) in enumerate(level_data):
        size = len(los)
        pos = np.arange(size, dtype=np.int64)
        bond = None if n == 0 else pos % prev_size
        edges = (pos, (pos + 1) % size)
        levels.append(Level(size, bond=bond, edges=edges))
        lo_ids.append(table.add_many(los))
        hi_ids.append(table.add_many(his))
        prev_size = size
    tower = Tower(levels, meta={"family": "minimal_fraisse",
                                "dynamic": "cycle_shift"})
    meta = {"family": "minimal_fraisse", "depth": depth,
            "chain": list(chain), "refinements": refinements,
            "sizes": [len(ld[0]) for ld in level_data]}
    return FSystem(tower, lo_ids, hi_ids, table, meta=meta)
