"""Canonical JSON for towers, fence systems, and certificate reports.

The tower schema keys every vertex by its string label:

    {"levels": [{"index": n,
                 "vertices": [id, ...],
                 "edges": [[src_id, dst_id], ...],
                 "bond": {id: parent_id},
                 "dagger_child": {parent_id: child_id}}]}

A fence system extends it with two top-level maps: ``phi`` assigns each
vertex its exact endpoint pair ``{"lo": "p/q", "hi": "p/q"}``, and
``dagger_witness`` records, per non-bottom vertex, one child carrying
the identical endpoint pair. Rationals always serialize as canonical
``p/q`` strings. A selective ``meta`` block keeps the JSON-safe
construction records (orbit marks, spans, masks, refinement
certificates) so parsed files stay verifiable; construction-time hooks
are callables and do not survive a round trip, so a parsed system
certifies its built levels only.

``dumps`` is deterministic: sorted keys, fixed separators, no locale or
hash-order dependence. Two runs of the same build emit identical bytes.
"""

from __future__ import annotations

import json
from fractions import Fraction

import numpy as np

from .errors import MalformedTower
from .fence_systems import FSystem
from .graph_systems import Level, Tower
from .rationals import ValueTable, format_frac, parse_frac

_META_SAFE_KEYS = (
    "family", "dynamic", "alphabet", "depth", "template_len", "origin",
    "scan", "stage_params", "virtual_stage", "flags", "aperiodicity",
    "level_sizes", "designated_vertices", "orbit_covers_levels",
    "core_spans", "position_cells", "periodic_orbits", "refinements",
    "chain", "sizes", "mask_sizes", "generators", "masks", "cycle_counts",
    "include_masked", "scheduled", "mask",
)

_TOWER_META_KEYS = ("family", "dynamic", "alphabet", "masks",
                    "cycle_counts")


def _jsonable(obj):
    """Recursively convert construction records to JSON-safe values."""
    if isinstance(obj, Fraction):
        return format_frac(obj)
    if isinstance(obj, np.ndarray):
        return [int(x) for x in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if obj is None or isinstance(obj, (bool, int, str)):
        return obj
    if isinstance(obj, float):
        raise MalformedTower(
            f"refusing to serialize a float ({obj!r}); exact records only")
    if hasattr(obj, "marks"):
        return {"marks": [_jsonable(m) for m in obj.marks]}
    return str(obj)


def tower_to_jsonable(tower: Tower, dagger: dict | None = None) -> dict:
    """The tower schema dict; ``dagger`` overrides the canonical child.

    Without an override the canonical child of each vertex is its first
    child by index, which keeps plain towers serializable; fence
    systems pass the endpoint-equal child instead.
    """
    levels = []
    for n in range(tower.depth + 1):
        lv = tower.levels[n]
        ids = [tower.label(n, v) for v in range(lv.nv)]
        edges = sorted([ids[int(u)], ids[int(v)]]
                       for u, v in zip(lv.edge_src, lv.edge_dst))
        entry = {"index": n, "vertices": ids, "edges": edges, "bond": {}}
        if n > 0:
            prev = [tower.label(n - 1, v)
                    for v in range(tower.levels[n - 1].nv)]
            entry["bond"] = {ids[v]: prev[int(lv.bond[v])]
                             for v in range(lv.nv)}
        if n < tower.depth:
            entry["dagger_child"] = _level_dagger(tower, n, dagger)
        else:
            entry["dagger_child"] = {}
        levels.append(entry)
    return {"levels": levels}


def _level_dagger(tower: Tower, n: int, dagger: dict | None) -> dict:
    out = {}
    indptr, order = tower.children_csr(n)
    for v in range(tower.levels[n].nv):
        label = tower.label(n, v)
        if dagger is not None:
            child = dagger.get((n, v))
            if child is None:
                continue
            out[label] = tower.label(n + 1, child)
            continue
        kids = order[indptr[v]:indptr[v + 1]]
        if len(kids):
            out[label] = tower.label(n + 1, int(kids[0]))
    return out


def fsystem_to_jsonable(fs: FSystem) -> dict:
    """The fence-system schema dict: tower + phi + dagger witnesses."""
    dagger: dict = {}
    for n in range(fs.depth):
        lvc = fs.tower.levels[n + 1]
        bond = lvc.bond
        match = ((fs.lo[n + 1] == fs.lo[n][bond])
                 & (fs.hi[n + 1] == fs.hi[n][bond]))
        kids = np.flatnonzero(match)
        for c in kids[np.argsort(kids, kind="stable")]:
            key = (n, int(bond[int(c)]))
            if key not in dagger:
                dagger[key] = int(c)
    data = tower_to_jsonable(fs.tower, dagger)
    phi = {}
    for n in range(fs.depth + 1):
        for v in range(fs.tower.levels[n].nv):
            lo, hi = fs.interval(n, v)
            phi[fs.tower.label(n, v)] = {"lo": format_frac(lo),
                                         "hi": format_frac(hi)}
    data["phi"] = phi
    data["dagger_witness"] = {fs.tower.label(n, v): fs.tower.label(n + 1, c)
                              for (n, v), c in dagger.items()}
    merged = {k: v for k, v in fs.tower.meta.items()
              if k in _TOWER_META_KEYS and v is not None}
    merged.update(fs.meta)
    meta = {k: _jsonable(v) for k, v in merged.items()
            if k in _META_SAFE_KEYS}
    if meta:
        data["meta"] = meta
    return data


def _parse_levels(data: dict) -> tuple[list[Level], list[dict]]:
    levels = []
    index_maps: list[dict] = []
    for n, entry in enumerate(sorted(data["levels"], key=lambda e: e["index"])):
        if entry["index"] != n:
            raise MalformedTower(f"level indices must be 0..depth, got "
                                 f"{entry['index']} at position {n}")
        ids = list(entry["vertices"])
        where = {vid: i for i, vid in enumerate(ids)}
        if len(where) != len(ids):
            raise MalformedTower(f"level {n} repeats a vertex id")
        bond = None
        if n > 0:
            prev = index_maps[-1]
            bond = np.empty(len(ids), dtype=np.int64)
            raw = entry.get("bond", {})
            for vid, i in where.items():
                if vid not in raw:
                    raise MalformedTower(f"level {n} vertex {vid} has no bond")
                bond[i] = prev[raw[vid]]
        edges = entry.get("edges", [])
        src = np.asarray([where[u] for u, _ in edges], dtype=np.int64)
        dst = np.asarray([where[v] for _, v in edges], dtype=np.int64)
        levels.append(Level(len(ids), bond=bond, edges=(src, dst), labels=ids))
        index_maps.append(where)
    return levels, index_maps


def _revive_meta(meta: dict) -> dict:
    out = dict(meta)
    if "position_cells" in out:
        out["position_cells"] = [np.asarray(c, dtype=np.int32)
                                 for c in out["position_cells"]]
    if "masks" in out:
        out["masks"] = [np.asarray(m, dtype=np.int64) for m in out["masks"]]
    if isinstance(out.get("mask"), dict) and "marks" in out["mask"]:
        from .constructors.shift import KMask
        out["mask"] = KMask(out["mask"]["marks"])
    for rec in out.get("refinements", []):
        if isinstance(rec.get("epsilon"), str):
            rec["epsilon"] = parse_frac(rec["epsilon"])
    return out


def fsystem_from_jsonable(data: dict) -> FSystem:
    """Rebuild a fence system from its schema dict."""
    levels, index_maps = _parse_levels(data)
    meta = _revive_meta(data.get("meta", {}))
    tower = Tower(levels, meta={k: meta[k] for k in _TOWER_META_KEYS
                                if k in meta})
    phi = data.get("phi")
    if phi is None:
        raise MalformedTower("fence-system JSON carries no phi block")
    table = ValueTable()
    lo_ids, hi_ids = [], []
    for n, where in enumerate(index_maps):
        lo = np.empty(len(where), dtype=np.int64)
        hi = np.empty(len(where), dtype=np.int64)
        for vid, i in where.items():
            pair = phi.get(vid)
            if pair is None:
                raise MalformedTower(f"phi misses vertex {vid}")
            lo[i] = table.add(parse_frac(pair["lo"]))
            hi[i] = table.add(parse_frac(pair["hi"]))
        lo_ids.append(lo)
        hi_ids.append(hi)
    return FSystem(tower, lo_ids, hi_ids, table, meta=meta)


def fsystem_equal(a: FSystem, b: FSystem) -> bool:
    """Structural equality: levels, labels, bonds, edge sets, endpoints."""
    if a.depth != b.depth:
        return False
    for n in range(a.depth + 1):
        la, lb = a.tower.levels[n], b.tower.levels[n]
        if la.nv != lb.nv:
            return False
        if any(a.tower.label(n, v) != b.tower.label(n, v)
               for v in range(la.nv)):
            return False
        if n > 0 and not np.array_equal(la.bond, lb.bond):
            return False
        ea = sorted(zip(map(int, la.edge_src), map(int, la.edge_dst)))
        eb = sorted(zip(map(int, lb.edge_src), map(int, lb.edge_dst)))
        if ea != eb:
            return False
        for v in range(la.nv):
            if a.interval(n, v) != b.interval(n, v):
                return False
    return True


def dumps(obj) -> str:
    """Deterministic JSON text: sorted keys, fixed separators."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"),
                      ensure_ascii=True) + "\n"


def report_dumps(obj) -> str:
    """Deterministic JSON for report dicts that still hold exact values."""
    return dumps(_jsonable(obj))


def dump_fsystem(fs: FSystem, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(fsystem_to_jsonable(fs)))


def load_fsystem(path: str) -> FSystem:
    with open(path, "r", encoding="utf-8") as fh:
        return fsystem_from_jsonable(json.load(fh))
