"""Full-shift cylinder towers and invariant cylinder masks.

Level n of the shift tower has one vertex per binary word of width
2n+1, read as the centered window of a two-sided sequence. The bond
drops both end symbols; the edge relation is window overlap under the
left shift (drop the leftmost symbol, append one on the right), so
every vertex has out-degree and in-degree 2. The forward image of a
thread is determined one level down: the appended symbol is exactly
what the narrower window forgets.

A :class:`KMask` marks a vertex subset per level standing in for a
closed shift-invariant set. Invariance shows up combinatorially: every
masked vertex keeps a masked out-neighbor, projects onto a masked
parent, and (below the top level) owns a masked child. The masks used
by the mixing certificate mark exactly the cylinders met by a finite
list of eventually-zero generator points: a connecting point with one
word at position 0 and another at position m, the two single-word
points, and the zero point. Membership is decided by sliding the
window over each generator's finite support.
"""

from fractions import Fraction

import numpy as np

from ..errors import CylinderTooDeep, MalformedTower, MaskNotInvariant
from ..graph_systems import Level, Thread, Tower


def width(n: int) -> int:
    """Window width at level n."""
    return 2 * n + 1


def build_shift_tower(depth: int = 5) -> Tower:
    """The full 2-shift tower on centered windows, to the given depth."""
    levels = []
    for n in range(depth + 1):
        w = width(n)
        nv = 1 << w
        v = np.arange(nv, dtype=np.int64)
        if n == 0:
            bond = None
        else:
            bond = (v & ((1 << (w - 1)) - 1)) >> 1
        dst0 = (v & ((1 << (w - 1)) - 1)) << 1
        src = np.concatenate([v, v])
        dst = np.concatenate([dst0, dst0 | 1])
        labels = ([format(x, f"0{w}b") for x in range(nv)]
                  if w <= 13 else None)
        levels.append(Level(nv, bond=bond, edges=(src, dst), labels=labels))
    return Tower(levels, meta={"family": "full_shift", "alphabet": 2})


def word_vertex(word: str) -> tuple[int, int]:
    """Level and vertex index of a centered binary word."""
    if len(word) % 2 != 1 or any(ch not in "01" for ch in word):
        raise MalformedTower(f"not an odd-width binary word: {word!r}")
    return (len(word) - 1) // 2, int(word, 2)


def vertex_word(n: int, v: int) -> str:
    return format(v, f"0{width(n)}b")


def thread_of_word(tower: Tower, word: str) -> Thread:
    """The thread a centered word pins down, via its nested subwindows."""
    n, _ = word_vertex(word)
    if n > tower.depth:
        raise CylinderTooDeep(
            f"word of width {len(word)} needs level {n}, tower has {tower.depth}")
    verts = []
    for k in range(n + 1):
        mid = word[n - k:n + k + 1]
        verts.append(int(mid, 2))
    return Thread(tower, verts)


class ZeroBackedPoint:
    """A two-sided sequence with finite support in a zero background."""

    __slots__ = ("start", "bits")

    def __init__(self, start: int, bits: str):
        if any(ch not in "01" for ch in bits):
            raise MalformedTower(f"not a binary block: {bits!r}")
        self.start = int(start)
        self.bits = bits

    @property
    def end(self) -> int:
        """One past the last support position."""
        return self.start + len(self.bits)

    def symbol(self, i: int) -> int:
        if self.start <= i < self.end:
            return int(self.bits[i - self.start])
        return 0

    def window(self, center: int, radius: int) -> int:
        out = 0
        for i in range(center - radius, center + radius + 1):
            out = (out << 1) | self.symbol(i)
        return out


def connecting_point(u_word: str, v_word: str, m: int) -> ZeroBackedPoint:
    """u centered at 0 and v centered at m, zeros elsewhere.

    Requires the two blocks to be disjoint: m at least the common width.
    """
    if len(u_word) != len(v_word):
        raise MalformedTower("cylinder words must share a width")
    n = (len(u_word) - 1) // 2
    if m < len(u_word):
        raise MalformedTower(
            f"blocks at 0 and {m} overlap for width {len(u_word)}")
    gap = m - len(u_word)
    return ZeroBackedPoint(-n, u_word + "0" * gap + v_word)


class KMask:
    """Per-level masked vertex sets, closed under the tower dynamics.

    ``marks[n]`` is a sorted int64 array of masked level-n vertices.
    ``validate`` checks the three closure directions against a tower and
    raises :class:`MaskNotInvariant` with a named witness otherwise.
    """

    def __init__(self, marks):
        self.marks = [np.unique(np.asarray(m, dtype=np.int64)) for m in marks]

    def depth(self) -> int:
        return len(self.marks) - 1

    def masked(self, n: int, v: int) -> bool:
        m = self.marks[n]
        i = np.searchsorted(m, v)
        return bool(i < len(m) and m[i] == v)

    def mask_array(self, n: int, nv: int) -> np.ndarray:
        out = np.zeros(nv, dtype=bool)
        out[self.marks[n]] = True
        return out

    def validate(self, tower: Tower) -> None:
        if len(self.marks) > tower.depth + 1:
            raise CylinderTooDeep(
                f"mask covers {len(self.marks)} levels, tower has {tower.depth + 1}")
        for n, marked in enumerate(self.marks):
            if len(marked) == 0:
                continue
            lv = tower.level(n)
            if marked[-1] >= lv.nv or marked[0] < 0:
                raise MaskNotInvariant(f"level {n} mask names a missing vertex")
            flags = self.mask_array(n, lv.nv)
            for v in marked:
                if not np.any(flags[lv.out_neighbors(int(v))]):
                    raise MaskNotInvariant(
                        f"masked vertex {tower.label(n, int(v))} has no masked "
                        f"successor")
            if n > 0 and len(self.marks[n - 1]):
                pflags = self.mask_array(n - 1, tower.level(n - 1).nv)
                bad = np.flatnonzero(~pflags[lv.bond[marked]])
                if len(bad):
                    v = int(marked[bad[0]])
                    raise MaskNotInvariant(
                        f"masked vertex {tower.label(n, v)} projects onto an "
                        f"unmasked parent")
            if n < len(self.marks) - 1:
                cflags = self.mask_array(n + 1, tower.level(n + 1).nv)
                child_bond = tower.level(n + 1).bond
                covered = np.zeros(lv.nv, dtype=bool)
                covered[child_bond[self.marks[n + 1]]] = True
                bad = np.flatnonzero(~covered[marked])
                if len(bad):
                    v = int(marked[bad[0]])
                    raise MaskNotInvariant(
                        f"masked vertex {tower.label(n, v)} has no masked child")


def invariant_point_mask(tower: Tower, points, *, levels=None) -> KMask:
    """Mask the cylinders met by the given zero-backed points.

    The zero point is always included: far from every finite support
    the window reads all zeros, so the all-zero word is masked at every
    level and the mask is never empty.
    """
    if levels is None:
        levels = range(tower.depth + 1)
    marks = []
    for n in levels:
        hits = {0}
        for pt in points:
            for center in range(pt.start - n, pt.end + n):
                hits.add(pt.window(center, n))
        marks.append(np.fromiter(hits, dtype=np.int64, count=len(hits)))
    mask = KMask(marks)
    mask.validate(tower)
    return mask


def mixing_points(u_word: str, v_word: str, gaps) -> list[ZeroBackedPoint]:
    """Generator points for one cylinder pair of the mixing certificate."""
    n = (len(u_word) - 1) // 2
    pts = [ZeroBackedPoint(-n, u_word), ZeroBackedPoint(-n, v_word)]
    for m in gaps:
        pts.append(connecting_point(u_word, v_word, m))
    return pts


def masked_adjacency(tower: Tower, mask: KMask, n: int) -> np.ndarray:
    """Boolean adjacency of the masked level-n subgraph (full indexing)."""
    lv = tower.level(n)
    flags = mask.mask_array(n, lv.nv)
    keep = flags[lv.edge_src] & flags[lv.edge_dst]
    adj = np.zeros((lv.nv, lv.nv), dtype=bool)
    adj[lv.edge_src[keep], lv.edge_dst[keep]] = True
    return adj


def masked_path_profile(tower: Tower, mask: KMask, n: int,
                        u_word: str, v_word: str, lengths) -> dict:
    """Which path lengths connect two cylinders inside the mask.

    Uses boolean powers of the masked adjacency, so the certificate is
    exact: a True entry means a masked word chain of that exact length.
    """
    ln, u = word_vertex(u_word)
    lv_, v = word_vertex(v_word)
    if ln != n or lv_ != n:
        raise MalformedTower("cylinder words do not live on the tested level")
    adj = masked_adjacency(tower, mask, n).astype(np.uint8)
    lengths = list(lengths)
    reach = {}
    power = np.eye(adj.shape[0], dtype=np.uint8)
    top = max(lengths)
    for step in range(1, top + 1):
        power = (power.astype(np.int64) @ adj > 0).astype(np.uint8)
        if step in lengths:
            reach[step] = bool(power[u, v])
    return {"level": n, "u": u_word, "v": v_word, "reach": reach,
            "all_connected": all(reach.values())}
