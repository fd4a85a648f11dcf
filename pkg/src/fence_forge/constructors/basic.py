"""Static fence towers: cantor, lelek, fraisse, twosided.

These four families carry identity dynamics (every vertex a self-loop)
and exist to exercise the interval machinery: validation, exact rates,
classification, rendering. All endpoints are dyadic, so levels are built
as integer numerator arrays over one global power-of-two denominator and
interned at the end.

Child families, per parent fiber [l, u] of length a at level n:

* cantor: two children, both [0, 1]: the full product fence where every
  fiber is the whole unit arc.
* lelek: upper endpoints on the dyadic grid of pitch 2^-(n+1), that is
  [0, j * 2^-(n+1)] for every grid point j * 2^-(n+1) <= u. Zero-length
  parents split into two zero children so the tower keeps splitting.
* fraisse: a two-parameter grid. Upper endpoints u' = l + i * a / 2^n
  (i = 1 .. 2^n), and below each u' the lower endpoints
  l' = u' - k * (u' - l) / 2^n (k = 1 .. 2^n). The (2^n, 2^n) child is
  the parent itself. 4^n children per parent, none degenerate.
* twosided: anchored sub-fibers [u - w, u] and [l, l + w] for widths
  w = j * a / 2^(n+1) (j = 1 .. 2^(n+1)), with the full-width duplicate
  merged: 2^(n+2) - 1 children per parent.
"""

from fractions import Fraction

import numpy as np

from ..errors import MalformedTower
from ..graph_systems import Level, Tower
from ..fence_systems import FSystem
from ..rationals import ValueTable

ZERO = Fraction(0)
ONE = Fraction(1)


def _loops(nv: int):
    idx = np.arange(nv, dtype=np.int64)
    return idx, idx


def _intern_scaled(table: ValueTable, nums: np.ndarray, denom_pow: int) -> np.ndarray:
    """Intern numerators num / 2^denom_pow as value ids, vectorized."""
    uniq, inv = np.unique(np.asarray(nums, dtype=np.int64), return_inverse=True)
    denom = 1 << denom_pow
    ids = np.fromiter((table.add(Fraction(int(u), denom)) for u in uniq),
                      dtype=np.int64, count=len(uniq))
    return ids[inv]


def build_cantor(depth: int = 6, alphabet: int = 2) -> FSystem:
    """Word tower over a k-letter alphabet, every fiber the unit arc."""
    if alphabet < 2:
        raise MalformedTower(f"alphabet needs at least two letters, got {alphabet}")
    levels = [Level(1, edges=_loops(1), labels=["e"])]
    nv = 1
    for n in range(1, depth + 1):
        prev, nv = nv, nv * alphabet
        bond = np.arange(nv, dtype=np.int64) // alphabet
        labels = (["".join(np.base_repr(v, alphabet).zfill(n))
                   for v in range(nv)] if nv <= 4096 and alphabet <= 10
                  else None)
        levels.append(Level(nv, bond=bond, edges=_loops(nv), labels=labels))
    tower = Tower(levels, meta={"family": "cantor", "dynamic": "identity",
                                "alphabet": alphabet})
    table = ValueTable()
    zid = table.add(ZERO)
    oid = table.add(ONE)
    lo = [np.full(lv.nv, zid, dtype=np.int64) for lv in levels]
    hi = [np.full(lv.nv, oid, dtype=np.int64) for lv in levels]
    return FSystem(tower, lo, hi, table, meta=dict(tower.meta))


def build_lelek(depth: int = 6) -> FSystem:
    """Dyadic-grid haircut tower: lower endpoints zero everywhere.

    The rate certificate is one-sided: child upper endpoints form the
    full pitch-2^-(n+1) grid inside each parent, so the covering radius
    is exactly 2^-(n+2) for every nondegenerate parent.
    """
    table = ValueTable()
    denom_pow = depth + 1
    scale = 1 << denom_pow

    levels = [Level(1, edges=_loops(1))]
    hi_nums = [np.array([scale], dtype=np.int64)]
    cur = hi_nums[0]
    for n in range(depth):
        step = 1 << (denom_pow - n - 1)
        counts = np.where(cur > 0, cur // step + 1, 2)
        total = int(counts.sum())
        starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
        bond = np.repeat(np.arange(len(cur), dtype=np.int64), counts)
        j_local = np.arange(total, dtype=np.int64) - np.repeat(starts, counts)
        child = np.where(np.repeat(cur > 0, counts), j_local * step, 0)
        levels.append(Level(total, bond=bond, edges=_loops(total)))
        hi_nums.append(child.astype(np.int64))
        cur = hi_nums[-1]

    tower = Tower(levels, meta={"family": "lelek", "dynamic": "identity"})
    zid = table.add(ZERO)
    lo = [np.full(lv.nv, zid, dtype=np.int64) for lv in levels]
    hi = [_intern_scaled(table, nums, denom_pow) for nums in hi_nums]
    return FSystem(tower, lo, hi, table, meta=dict(tower.meta))


def build_fraisse(depth: int = 5) -> FSystem:
    """Two-parameter grid tower with no degenerate fibers.

    Level sizes are 1, 1, 4, 64, 4096, 2^20: each level-n parent has 4^n
    children, and the single level-1 child is the parent fiber itself
    (splitting starts one level down).
    """
    denom_pow = depth * (depth - 1) if depth > 1 else 1
    table = ValueTable()
    scale = 1 << denom_pow

    levels = [Level(1, edges=_loops(1))]
    lo_nums = [np.array([0], dtype=np.int64)]
    hi_nums = [np.array([scale], dtype=np.int64)]
    A, B = lo_nums[0], hi_nums[0]
    for n in range(depth):
        q = 1 << n
        # child counts are uniform: q uppers times q lowers per parent
        h = (B - A) // (q * q)          # exact: endpoints live on a 4^-n subgrid
        i = np.arange(1, q + 1, dtype=np.int64)
        k = np.arange(1, q + 1, dtype=np.int64)
        uppers = A[:, None] + i[None, :] * (h * q)[:, None]        # (P, q)
        span = uppers - A[:, None]                                  # i * h * q
        lowers = uppers[:, :, None] - k[None, None, :] * (span // q)[:, :, None]
        hi_next = np.repeat(uppers, q, axis=1).reshape(-1)
        lo_next = lowers.reshape(-1)
        bond = np.repeat(np.arange(len(A), dtype=np.int64), q * q)
        nv = len(lo_next)
        levels.append(Level(nv, bond=bond, edges=_loops(nv)))
        lo_nums.append(lo_next)
        hi_nums.append(hi_next)
        A, B = lo_next, hi_next

    tower = Tower(levels, meta={"family": "fraisse", "dynamic": "identity"})
    lo = [_intern_scaled(table, nums, denom_pow) for nums in lo_nums]
    hi = [_intern_scaled(table, nums, denom_pow) for nums in hi_nums]
    return FSystem(tower, lo, hi, table, meta=dict(tower.meta))


def build_twosided(depth: int = 5) -> FSystem:
    """End-anchored tower: both one-sided rates are exactly a * 2^-(n+1).

    Every child clings to one end of its parent, so midline targets stay
    at least a quarter parent-length away from every child: the full
    two-sided rate is bounded below while both one-sided rates vanish.
    """
    denom_pow = depth * (depth + 1) // 2
    table = ValueTable()
    scale = 1 << denom_pow

    levels = [Level(1, edges=_loops(1))]
    lo_nums = [np.array([0], dtype=np.int64)]
    hi_nums = [np.array([scale], dtype=np.int64)]
    L, U = lo_nums[0], hi_nums[0]
    for n in range(depth):
        q = 1 << (n + 1)
        s = (U - L) // q                 # anchored-width pitch, exact
        j = np.arange(1, q + 1, dtype=np.int64)
        j_low = np.arange(1, q, dtype=np.int64)   # full width merged with upper block
        up_lo = U[:, None] - j[None, :] * s[:, None]
        up_hi = np.broadcast_to(U[:, None], up_lo.shape)
        lowlo = np.broadcast_to(L[:, None], (len(L), q - 1))
        lowhi = L[:, None] + j_low[None, :] * s[:, None]
        lo_next = np.concatenate([up_lo, lowlo], axis=1).reshape(-1)
        hi_next = np.concatenate([up_hi, lowhi], axis=1).reshape(-1)
        bond = np.repeat(np.arange(len(L), dtype=np.int64), 2 * q - 1)
        nv = len(lo_next)
        levels.append(Level(nv, bond=bond, edges=_loops(nv)))
        lo_nums.append(lo_next)
        hi_nums.append(hi_next)
        L, U = lo_next, hi_next

    tower = Tower(levels, meta={"family": "twosided", "dynamic": "identity"})
    lo = [_intern_scaled(table, nums, denom_pow) for nums in lo_nums]
    hi = [_intern_scaled(table, nums, denom_pow) for nums in hi_nums]
    return FSystem(tower, lo, hi, table, meta=dict(tower.meta))
