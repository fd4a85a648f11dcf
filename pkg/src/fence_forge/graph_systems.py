"""Towers of finite digraph levels connected by bond maps.

A tower models a zero-dimensional system at increasing resolution. Level
``n`` is a finite set of vertices (abstract cylinder pieces); the bond
array of level ``n+1`` sends each vertex to the coarser piece containing
it; edges inside a level record which pieces the dynamics can move
between in one step. Threads (bond-compatible vertex chains) are the
points of the inverse-limit approximation, with the usual 2^-n metric.

Two graded determinism conditions make the level digraphs track a single
continuous map: going forward, out-neighbor sets must eventually project
to a single coarse vertex, and going backward the same must hold for
in-neighbors. ``validate_graph_c_system`` finds the least witnessing
depth for every target level, and ``base_image``/``base_preimage`` use
the same scan per vertex to push threads through the dynamics.

Endpoint data (the fence part) lives in :mod:`fence_forge.fence_systems`;
this module is purely about the zero-dimensional skeleton.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .errors import InsufficientDepth, MalformedTower, NoChildren
from .rationals import pow2


def _as_index_array(data, what: str) -> np.ndarray:
    arr = np.asarray(data)
    if arr.dtype.kind not in "iu":
        if arr.size and not np.issubdtype(arr.dtype, np.integer):
            arr = arr.astype(np.int64)
        else:
            arr = arr.astype(np.int64)
    if arr.ndim != 1:
        raise MalformedTower(f"{what} must be one-dimensional")
    return arr


def segment_minmax(values: np.ndarray, indptr: np.ndarray):
    """Per-segment min and max for CSR-style offsets.

    Empty segments are reported through the returned mask; their min/max
    slots hold unspecified values and must not be read.
    """
    nv = len(indptr) - 1
    mins = np.zeros(nv, dtype=values.dtype)
    maxs = np.zeros(nv, dtype=values.dtype)
    nonempty = indptr[:-1] < indptr[1:]
    starts = indptr[:-1][nonempty]
    if len(starts):
        mins[nonempty] = np.minimum.reduceat(values, starts)
        maxs[nonempty] = np.maximum.reduceat(values, starts)
    return mins, maxs, nonempty


class Level:
    """One tower level: vertices, bond to the previous level, edges.

    Parameters
    ----------
    nv:
        Vertex count. Vertices are the integers ``0..nv-1``.
    bond:
        For each vertex, the index of its parent one level up the tower
        (``None`` exactly at level 0).
    edges:
        Either an ``(E, 2)`` array-like of ``(src, dst)`` pairs or a pair
        of parallel arrays.
    labels:
        Optional human-readable vertex names used in reports and JSON.
    """

    __slots__ = ("nv", "bond", "edge_src", "edge_dst", "labels",
                 "_out_csr", "_in_csr")

    def __init__(self, nv: int, bond=None, edges=None, labels=None):
        self.nv = int(nv)
        if self.nv <= 0:
            raise MalformedTower("level must have at least one vertex")
        if bond is None:
            self.bond = None
        else:
            self.bond = _as_index_array(bond, "bond")
            if len(self.bond) != self.nv:
                raise MalformedTower("bond length must equal vertex count")
        if edges is None:
            src = np.zeros(0, dtype=np.int64)
            dst = np.zeros(0, dtype=np.int64)
        elif isinstance(edges, tuple) and len(edges) == 2:
            src = _as_index_array(edges[0], "edge sources")
            dst = _as_index_array(edges[1], "edge targets")
        else:
            pairs = np.asarray(edges, dtype=np.int64)
            if pairs.size == 0:
                pairs = pairs.reshape(0, 2)
            if pairs.ndim != 2 or pairs.shape[1] != 2:
                raise MalformedTower("edges must be (E, 2) pairs")
            src, dst = pairs[:, 0].copy(), pairs[:, 1].copy()
        if len(src) != len(dst):
            raise MalformedTower("edge arrays must have equal length")
        if len(src) and (src.min() < 0 or src.max() >= self.nv
                         or dst.min() < 0 or dst.max() >= self.nv):
            raise MalformedTower("edge endpoint out of range")
        self.edge_src = src
        self.edge_dst = dst
        self.labels = list(labels) if labels is not None else None
        if self.labels is not None and len(self.labels) != self.nv:
            raise MalformedTower("labels length must equal vertex count")
        self._out_csr = None
        self._in_csr = None

    @property
    def ne(self) -> int:
        return len(self.edge_src)

    def _csr(self, key_arr: np.ndarray, val_arr: np.ndarray):
        order = np.argsort(key_arr, kind="stable")
        counts = np.bincount(key_arr, minlength=self.nv)
        indptr = np.zeros(self.nv + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        return indptr, val_arr[order], order

    def out_csr(self):
        """(indptr, dst-sorted-by-src, edge-order) for forward adjacency."""
        if self._out_csr is None:
            self._out_csr = self._csr(self.edge_src, self.edge_dst)
        return self._out_csr

    def in_csr(self):
        if self._in_csr is None:
            self._in_csr = self._csr(self.edge_dst, self.edge_src)
        return self._in_csr

    def out_neighbors(self, v: int) -> np.ndarray:
        indptr, nbrs, _ = self.out_csr()
        return nbrs[indptr[v]:indptr[v + 1]]

    def in_neighbors(self, v: int) -> np.ndarray:
        indptr, nbrs, _ = self.in_csr()
        return nbrs[indptr[v]:indptr[v + 1]]

    def out_degrees(self) -> np.ndarray:
        return np.bincount(self.edge_src, minlength=self.nv)

    def in_degrees(self) -> np.ndarray:
        return np.bincount(self.edge_dst, minlength=self.nv)

    def label(self, v: int, level_index: int | None = None) -> str:
        if self.labels is not None:
            return self.labels[v]
        if level_index is None:
            return f"v{v}"
        return f"L{level_index}V{v}"

    def has_edge(self, u: int, v: int) -> bool:
        return bool(np.any(self.out_neighbors(u) == v))


class Tower:
    """A finite stack of levels joined by bonds.

    ``meta`` is a free-form dict for constructor-specific annotations
    (designated threads, masks, schedule summaries); nothing in this
    module reads it.
    """

    def __init__(self, levels, meta=None):
        levels = list(levels)
        if not levels:
            raise MalformedTower("tower needs at least one level")
        if levels[0].bond is not None:
            raise MalformedTower("level 0 must not carry a bond")
        for n, lv in enumerate(levels[1:], start=1):
            if lv.bond is None:
                raise MalformedTower(f"level {n} is missing its bond")
            if len(lv.bond) and lv.bond.max() >= levels[n - 1].nv:
                raise MalformedTower(f"level {n} bond points past level {n - 1}")
            if len(lv.bond) and lv.bond.min() < 0:
                raise MalformedTower(f"level {n} bond has negative entries")
        self.levels = levels
        self.meta = dict(meta) if meta else {}
        self._children_csr: dict[int, tuple] = {}

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    def level(self, n: int) -> Level:
        if not 0 <= n <= self.depth:
            raise InsufficientDepth(f"level {n} not built (depth {self.depth})")
        return self.levels[n]

    def children_csr(self, n: int):
        """CSR of level-(n+1) children grouped by level-n parent."""
        if n not in self._children_csr:
            if n >= self.depth:
                raise InsufficientDepth(f"no level below {n} (depth {self.depth})")
            bond = self.levels[n + 1].bond
            order = np.argsort(bond, kind="stable")
            counts = np.bincount(bond, minlength=self.levels[n].nv)
            indptr = np.zeros(self.levels[n].nv + 1, dtype=np.int64)
            np.cumsum(counts, out=indptr[1:])
            self._children_csr[n] = (indptr, order)
        return self._children_csr[n]

    def children(self, n: int, v: int) -> np.ndarray:
        indptr, order = self.children_csr(n)
        return order[indptr[v]:indptr[v + 1]]

    def label(self, n: int, v: int) -> str:
        return self.levels[n].label(v, n)


def compose_bond(tower: Tower, n: int, m: int) -> np.ndarray:
    """Full projection array from level-n vertices to level m (m <= n)."""
    if m > n:
        raise ValueError("projection must go down the tower")
    proj = np.arange(tower.levels[n].nv, dtype=np.int64)
    for k in range(n, m, -1):
        proj = tower.levels[k].bond[proj]
    return proj


def project_vertices(tower: Tower, n: int, m: int, verts) -> np.ndarray:
    """Project a few level-n vertices to level m without full arrays."""
    v = np.atleast_1d(np.asarray(verts, dtype=np.int64))
    for k in range(n, m, -1):
        v = tower.levels[k].bond[v]
    return v


class Thread:
    """A bond-compatible chain of vertices from level 0 down to some depth."""

    __slots__ = ("tower", "_verts")

    def __init__(self, tower: Tower, vertices):
        self.tower = tower
        self._verts = tuple(int(v) for v in vertices)
        if not self._verts:
            raise MalformedTower("thread needs at least the level-0 vertex")

    @property
    def depth(self) -> int:
        return len(self._verts) - 1

    def vertex(self, n: int) -> int:
        return self._verts[n]

    @property
    def top(self) -> int:
        return self._verts[-1]

    @property
    def vertices(self) -> tuple:
        return self._verts

    def truncate(self, n: int) -> "Thread":
        return Thread(self.tower, self._verts[:n + 1])

    def __eq__(self, other):
        return (isinstance(other, Thread) and other.tower is self.tower
                and other._verts == self._verts)

    def __hash__(self):
        return hash((id(self.tower), self._verts))

    def __repr__(self):
        names = "/".join(self.tower.label(n, v) for n, v in enumerate(self._verts))
        return f"Thread({names})"


def thread_from_vertex(tower: Tower, n: int, v: int) -> Thread:
    """The unique thread through a given level-n vertex."""
    verts = [int(v)]
    for k in range(n, 0, -1):
        verts.append(int(tower.levels[k].bond[verts[-1]]))
    verts.reverse()
    return Thread(tower, verts)


def thread_check(tower: Tower, thread: Thread) -> None:
    if thread.depth > tower.depth:
        raise InsufficientDepth("thread deeper than tower")
    for k in range(thread.depth, 0, -1):
        if int(tower.levels[k].bond[thread.vertex(k)]) != thread.vertex(k - 1):
            raise MalformedTower(f"thread breaks the bond at level {k}")


def thread_extensions(tower: Tower, thread: Thread) -> list[Thread]:
    """All one-level-deeper threads extending the given one."""
    n = thread.depth
    kids = tower.children(n, thread.top)
    return [Thread(tower, thread.vertices + (int(c),)) for c in kids]


def all_threads(tower: Tower, n: int):
    """Iterate every thread of depth n (one per level-n vertex)."""
    for v in range(tower.levels[n].nv):
        yield thread_from_vertex(tower, n, v)


def thread_distance(a: Thread, b: Thread) -> Fraction:
    """2^-n where n is the first level the threads disagree on.

    Threads that agree on every commonly built level get distance 0;
    callers comparing approximations should treat that as "below the
    resolution 2^-(min depth)" rather than genuine equality.
    """
    d = min(a.depth, b.depth)
    for n in range(d + 1):
        if a.vertex(n) != b.vertex(n):
            return pow2(-n)
    return Fraction(0)


def level_diameter(n: int) -> Fraction:
    """Diameter of the set of threads through one fixed level-n vertex."""
    return pow2(-(n + 1))


def validate_c_structure(tower: Tower, *, strict: bool = True) -> dict:
    """Check bonds are onto and vertices eventually split.

    Returns a report dict. With ``strict`` (default) a non-surjective
    bond raises :class:`NoChildren`; otherwise it is recorded under
    ``violations``. Splitting is witnessed per level by the least deeper
    level at which every vertex has grown at least two descendants;
    levels too close to the bottom of the build keep ``None``.
    """
    report: dict = {"levels": [], "violations": [], "split_witness": []}
    for n, lv in enumerate(tower.levels):
        entry = {"level": n, "nv": lv.nv, "ne": lv.ne}
        if n > 0:
            hit = np.bincount(lv.bond, minlength=tower.levels[n - 1].nv)
            missing = np.flatnonzero(hit == 0)
            if len(missing):
                msg = (f"level {n - 1} vertex "
                       f"{tower.label(n - 1, int(missing[0]))} has no child")
                if strict:
                    raise NoChildren(msg)
                report["violations"].append(msg)
            entry["min_children"] = int(hit.min()) if len(hit) else 0
        report["levels"].append(entry)

    for n in range(tower.depth + 1):
        witness = None
        counts = np.ones(tower.levels[n].nv, dtype=np.int64)
        for m in range(n + 1, tower.depth + 1):
            proj = compose_bond(tower, m, n)
            counts = np.bincount(proj, minlength=tower.levels[n].nv)
            if counts.size and counts.min() >= 2:
                witness = m
                break
        report["split_witness"].append(witness)
    return report


def _forward_witness_for_level(tower: Tower, m: int, *, backward: bool) -> int | None:
    """Least n >= m with single-valued (out|in)-projection to level m."""
    for n in range(m, tower.depth + 1):
        lv = tower.levels[n]
        proj = compose_bond(tower, n, m)
        if backward:
            indptr, nbrs, _ = lv.in_csr()
        else:
            indptr, nbrs, _ = lv.out_csr()
        mapped = proj[nbrs]
        mins, maxs, nonempty = segment_minmax(mapped, indptr)
        if not nonempty.all():
            return None
        if np.array_equal(mins, maxs):
            return n
    return None


def validate_graph_c_system(tower: Tower, *, require_onto: bool = True,
                            strict: bool = True) -> dict:
    """Full structural check for a tower carrying level dynamics.

    Beyond the plain bond checks this verifies, with witnesses:

    * every vertex has an out-edge (and, with ``require_onto``, an
      in-edge), so no level has dead ends;
    * bonds preserve edges, i.e. every fine edge projects onto a coarse
      edge one level up;
    * graded forward determinism: for each target level m, the least
      level n whose out-neighbor sets all project to single level-m
      vertices (``forward_witness``), and the mirrored backward version
      on in-neighbors (``backward_witness``). ``None`` marks targets the
      built depth cannot witness yet.
    """
    report = validate_c_structure(tower, strict=strict)
    for n, lv in enumerate(tower.levels):
        out_deg = lv.out_degrees()
        dead = np.flatnonzero(out_deg == 0)
        if len(dead):
            msg = f"level {n} vertex {tower.label(n, int(dead[0]))} has no out-edge"
            if strict:
                raise MalformedTower(msg)
            report["violations"].append(msg)
        if require_onto:
            in_deg = lv.in_degrees()
            orphan = np.flatnonzero(in_deg == 0)
            if len(orphan):
                msg = f"level {n} vertex {tower.label(n, int(orphan[0]))} has no in-edge"
                if strict:
                    raise MalformedTower(msg)
                report["violations"].append(msg)

    for n in range(1, tower.depth + 1):
        lv = tower.levels[n]
        if lv.ne == 0:
            continue
        bond = lv.bond
        ps = bond[lv.edge_src]
        pt = bond[lv.edge_dst]
        up = tower.levels[n - 1]
        key = ps * np.int64(up.nv) + pt
        if up.ne == 0:
            good = np.zeros(lv.ne, dtype=bool)
        else:
            ukey = np.unique(up.edge_src * np.int64(up.nv) + up.edge_dst)
            pos = np.minimum(np.searchsorted(ukey, key), len(ukey) - 1)
            good = ukey[pos] == key
        if not good.all():
            i = int(np.flatnonzero(~good)[0])
            msg = (f"level {n} edge {tower.label(n, int(lv.edge_src[i]))}->"
                   f"{tower.label(n, int(lv.edge_dst[i]))} does not project to an edge")
            if strict:
                raise MalformedTower(msg)
            report["violations"].append(msg)

    report["forward_witness"] = [
        _forward_witness_for_level(tower, m, backward=False)
        for m in range(tower.depth + 1)
    ]
    report["backward_witness"] = [
        _forward_witness_for_level(tower, m, backward=True)
        for m in range(tower.depth + 1)
    ]
    return report


def _image_vertex(tower: Tower, thread: Thread, m: int, *, backward: bool):
    """Project (out|in)-neighbor sets of the thread to level m until single."""
    for n in range(m, thread.depth + 1):
        lv = tower.levels[n]
        u = thread.vertex(n)
        nbrs = lv.in_neighbors(u) if backward else lv.out_neighbors(u)
        if len(nbrs) == 0:
            raise MalformedTower(
                f"level {n} vertex {tower.label(n, u)} has no "
                f"{'in' if backward else 'out'}-edge")
        proj = project_vertices(tower, n, m, nbrs)
        lo, hi = int(proj.min()), int(proj.max())
        if lo == hi:
            return lo
    return None


def base_image(tower: Tower, thread: Thread, *, min_depth: int = 0,
               backward: bool = False) -> Thread:
    """Push a thread one step through the base dynamics.

    The image vertex at each level m is found by the determinism scan:
    walk down from level m until the thread's out-neighbor set projects
    to a single level-m vertex. The result is the deepest determined
    prefix, so the image thread is usually shorter than the input;
    ``min_depth`` raises :class:`InsufficientDepth` if the determined
    part is too shallow. Set ``backward`` for the preimage scan on
    in-neighbors.
    """
    thread_check(tower, thread)
    verts: list[int] = []
    for m in range(thread.depth + 1):
        v = _image_vertex(tower, thread, m, backward=backward)
        if v is None:
            break
        if verts:
            if int(tower.levels[m].bond[v]) != verts[-1]:
                raise MalformedTower(
                    f"determinism scan produced a bond-incompatible image at level {m}")
        verts.append(v)
    if len(verts) - 1 < min_depth:
        raise InsufficientDepth(
            f"image determined only to depth {len(verts) - 1}, need {min_depth}")
    return Thread(tower, verts)


def base_preimage(tower: Tower, thread: Thread, *, min_depth: int = 0) -> Thread:
    """Pull a thread one step backward (the mirrored determinism scan)."""
    return base_image(tower, thread, min_depth=min_depth, backward=True)


def iterate_base(tower: Tower, thread: Thread, steps: int, *,
                 min_depth: int = 0) -> Thread:
    """Apply base_image repeatedly; depth shrinks with each step."""
    t = thread
    for _ in range(steps):
        t = base_image(tower, t, min_depth=min_depth)
    return t
