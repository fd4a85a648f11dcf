"""Command-line front end: build, verify, lift, orbit, render.

Subcommands
-----------
build   construct a fence system from a config file or flags and write
        it as deterministic JSON.
verify  run certificate checks against a fence-system file and write a
        JSON report; exits 3 if any requested certificate fails.
lift    push a file of fence points one step through the lifted map.
orbit   iterate the lifted map from a start point, with a depth budget:
        each generic step loses the determinism offset in resolution,
        so steps * offset must fit inside the built depth. Towers that
        carry a designated template orbit use the stored cell marks
        instead and keep full depth at every step.
render  draw the fence slab or the fan quotient of a level as SVG.

Configs are TOML (JSON accepted with a .json suffix); reports are
always JSON. Exit codes: 0 ok, 2 malformed input or inapplicable
request, 3 certificate failure, 4 depth budget exceeded. The
FENCE_FORGE_THREADS variable caps how many certificate checks run
concurrently in one verify call.

Certificates whose claim is categorical (classify) use an indicator
bounds pair: claimed 1, observed 1 for pass and 0 for fail.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from . import serialize as ser
from .errors import (CylinderTooDeep, FenceForgeError, ImageOutsideFiber,
                     InsufficientDepth, MalformedTower, OrbitScanExhausted)
from .fence_systems import FSystem, classify, default_rate, eta_report
from .graph_systems import Thread, thread_from_vertex
from .lifting import FencePoint, condition_gamma, lift_apply
from .rationals import format_frac, parse_frac
from .verify import (_auto_mode, certificate, check_entropy, check_factor,
                     check_isometry, check_mixing, check_periodic,
                     check_transitive, check_twosided_inheritance)

EXIT_OK = 0
EXIT_MALFORMED = 2
EXIT_CERT_FAIL = 3
EXIT_DEPTH_BUDGET = 4

ONE = Fraction(1)
ZERO = Fraction(0)

CONFIG_KEYS = ("kind", "depth", "alphabet", "periods", "masks", "out")

_EXPECTED_KIND = {
    "cantor": "cantor",
    "lelek": "lelek_fence",
    "fraisse": "fraisse_fence",
    "twosided": "twosided_scissorhand_fence",
    "minimal_fraisse": "fraisse_fence",
}

_ETA_CLAIM = {
    "lelek": ("eta_plus",),
    "fraisse": ("eta",),
    "twosided": ("eta_plus", "eta_minus"),
}

_DEFAULT_CHECKS = {
    "cantor": ["classify", "factor"],
    "lelek": ["classify", "eta", "factor"],
    "fraisse": ["classify", "eta", "factor"],
    "twosided": ["classify", "eta", "inheritance", "factor"],
    "warmup_isometry": ["gamma", "isometry", "factor"],
    "isometry_lift_fraisse": ["gamma", "isometry", "factor"],
    "isometry_lift_lelek": ["gamma", "isometry", "factor"],
    "minimal_fraisse": ["classify", "gamma", "inheritance", "factor"],
    "transitive_lift": ["transitive", "factor"],
    "chaotic_lift": ["transitive", "periodic", "factor"],
    "mixing_lift": ["gamma", "mixing", "factor"],
}
_FALLBACK_CHECKS = ["classify", "eta", "factor"]


def _threads() -> int:
    raw = os.environ.get("FENCE_FORGE_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _load_config(path: str) -> dict:
    text = Path(path).read_bytes()
    if path.endswith(".json"):
        cfg = json.loads(text)
    else:
        cfg = tomllib.loads(text.decode())
    if not isinstance(cfg, dict):
        raise MalformedTower("config must be a table of build options")
    unknown = sorted(set(cfg) - set(CONFIG_KEYS))
    if unknown:
        raise MalformedTower(f"unknown config keys: {', '.join(unknown)}")
    return cfg


def _build_from_options(opts: dict) -> FSystem:
    from .constructors.basic import (build_cantor, build_fraisse,
                                     build_lelek, build_twosided)
    from .constructors.cycles import (build_isometry_lift,
                                      build_warmup_isometry)
    from .constructors.odometer import build_minimal_fraisse_lift
    from .constructors.orbit import (build_chaotic_lift, build_mixing_lift,
                                     build_transitive_lift)

    kind = opts.get("kind")
    if not kind:
        raise MalformedTower("build needs a kind (config key or --kind)")
    depth = opts.get("depth")
    alphabet = opts.get("alphabet")
    periods = opts.get("periods")
    masks = opts.get("masks")

    if alphabet is not None and kind not in ("cantor", "mixing"):
        raise MalformedTower(f"alphabet does not apply to kind {kind!r}")
    if periods is not None and kind != "minimal_fraisse":
        raise MalformedTower("periods only apply to kind minimal_fraisse")
    if masks is not None and kind != "mixing":
        raise MalformedTower("masks only apply to kind mixing")
    if kind == "mixing" and alphabet not in (None, 2):
        raise MalformedTower(
            f"the shift tower is built over the binary alphabet; "
            f"got alphabet {alphabet}")

    table = {
        "cantor": lambda d: build_cantor(d if d is not None else 6,
                                         alphabet=alphabet or 2),
        "lelek": lambda d: build_lelek(d if d is not None else 6),
        "fraisse": lambda d: build_fraisse(d if d is not None else 5),
        "twosided": lambda d: build_twosided(d if d is not None else 5),
        "warmup": lambda d: build_warmup_isometry(d if d is not None else 5),
        "isometry_fraisse": lambda d: build_isometry_lift("fraisse", d),
        "isometry_lelek": lambda d: build_isometry_lift("lelek", d),
        "minimal_fraisse": lambda d: build_minimal_fraisse_lift(
            d if d is not None else 4,
            chain=tuple(periods) if periods else (2, 6, 30, 210)),
        "transitive": lambda d: build_transitive_lift(
            d if d is not None else 4),
        "chaotic": lambda d: build_chaotic_lift(d if d is not None else 4),
        "mixing": lambda d: build_mixing_lift(
            d if d is not None else 3,
            extra_generators=tuple(masks) if masks else ()),
    }
    if kind not in table:
        raise MalformedTower(
            f"unknown kind {kind!r}; choose from {', '.join(sorted(table))}")
    return table[kind](depth)


def _write_out(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_build(args) -> int:
    opts = dict(_load_config(args.config)) if args.config else {}
    for key in ("kind", "depth", "alphabet", "out"):
        val = getattr(args, key, None)
        if val is not None:
            opts[key] = val
    if args.periods is not None:
        opts["periods"] = [int(p) for p in args.periods.split(",")]
    fs = _build_from_options(opts)
    _write_out(ser.dumps(ser.fsystem_to_jsonable(fs)), opts.get("out"))
    return EXIT_OK


def _load_fsystem(path: str) -> FSystem:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise MalformedTower(f"not a fence-system JSON file: {exc}") from exc
    return ser.fsystem_from_jsonable(data)


def _run_classify(fs: FSystem, mode: str | None) -> dict:
    rep = classify(fs)
    expected = _EXPECTED_KIND.get(fs.meta.get("family"))
    if expected is not None:
        ok = rep["kind"] == expected
    else:
        ok = rep["kind"] != "unclassified"
    return certificate(
        "classify", "pass" if ok else "fail",
        [{"kind": rep["kind"], "expected": expected}],
        ONE, ONE if ok else ZERO, report=rep)


def _run_eta(fs: FSystem, mode: str | None) -> dict:
    names = _ETA_CLAIM.get(fs.meta.get("family"), ("eta_plus",))
    rows = []
    worst = ZERO
    witnessed = True
    for entry in eta_report(fs):
        n = entry["level"]
        rate = default_rate(n)
        row = {"level": n, "rate": rate}
        for name in names:
            val = entry.get(name)
            row[name] = val
            if val is None:
                witnessed = False
            else:
                worst = max(worst, val / rate)
        rows.append(row)
    if not witnessed:
        verdict = "unwitnessed"
    else:
        verdict = "pass" if worst <= 1 else "fail"
    return certificate("eta_rates", verdict, rows, ONE, worst,
                       claimed_etas=list(names))


def _run_gamma(fs: FSystem, mode: str | None) -> dict:
    m = mode or _auto_mode(fs)
    rep = condition_gamma(fs, m)
    claimed = rep["budget"] if rep["budget"] is not None else rep["total"]
    return certificate(
        "condition_gamma", "pass" if rep["satisfied"] else "fail",
        rep["entries"], claimed, rep["total"], mode=m,
        partial_sums=rep["partial_sums"])


_CHECKS = {
    "classify": _run_classify,
    "eta": _run_eta,
    "gamma": _run_gamma,
    "factor": lambda fs, mode: check_factor(fs, mode=mode),
    "isometry": lambda fs, mode: check_isometry(fs, mode=mode),
    "transitive": lambda fs, mode: check_transitive(fs),
    "periodic": lambda fs, mode: check_periodic(fs),
    "mixing": lambda fs, mode: check_mixing(fs),
    "entropy": lambda fs, mode: check_entropy(fs),
    "inheritance": lambda fs, mode: check_twosided_inheritance(fs),
}


def cmd_verify(args) -> int:
    fs = _load_fsystem(args.fsystem)
    if args.checks:
        names = [c.strip() for c in args.checks.split(",") if c.strip()]
    else:
        names = _DEFAULT_CHECKS.get(fs.meta.get("family"), _FALLBACK_CHECKS)
    unknown = sorted(set(names) - set(_CHECKS))
    if unknown:
        raise MalformedTower(
            f"unknown checks: {', '.join(unknown)}; "
            f"choose from {', '.join(sorted(_CHECKS))}")

    workers = min(_threads(), len(names))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futs = {name: pool.submit(_CHECKS[name], fs, args.mode)
                    for name in names}
            results = {name: fut.result() for name, fut in futs.items()}
    else:
        results = {name: _CHECKS[name](fs, args.mode) for name in names}

    report = {"fsystem": args.fsystem,
              "checks": {name: results[name] for name in names}}
    _write_out(ser.report_dumps(report), args.out)
    failed = [n for n in names if results[n]["verdict"] == "fail"]
    if failed:
        print(f"failed certificates: {', '.join(failed)}", file=sys.stderr)
        return EXIT_CERT_FAIL
    return EXIT_OK


def _label_index(fs: FSystem, n: int) -> dict:
    lv = fs.tower.levels[n]
    return {fs.tower.label(n, v): v for v in range(lv.nv)}


def _parse_thread(fs: FSystem, raw: list) -> Thread:
    verts = []
    for n, item in enumerate(raw):
        if isinstance(item, int):
            verts.append(item)
        else:
            where = _label_index(fs, n)
            if item not in where:
                raise MalformedTower(f"no vertex {item!r} at level {n}")
            verts.append(where[item])
    return Thread(fs.tower, verts)


def _point_row(fs: FSystem, point: FencePoint, **extra) -> dict:
    t = point.thread
    row = {"thread": [fs.tower.label(n, v) for n, v in enumerate(t.vertices)],
           "level": t.depth, "height": format_frac(point.height)}
    row.update(extra)
    return row


def cmd_lift(args) -> int:
    fs = _load_fsystem(args.fsystem)
    data = json.loads(Path(args.points).read_text())
    raw_points = data["points"] if isinstance(data, dict) else data
    mode = args.mode or _auto_mode(fs)
    images = []
    for rec in raw_points:
        thread = _parse_thread(fs, rec["thread"])
        if "height" in rec:
            height = parse_frac(rec["height"])
        else:
            height = fs.fiber_interval(thread)[1]
        res = lift_apply(fs, FencePoint(thread, height), mode)
        images.append(_point_row(
            fs, res["point"], level_used=res["level_used"],
            tail_bound_built=res["tail_bound_built"]))
    _write_out(ser.report_dumps({"mode": mode, "images": images}), args.out)
    return EXIT_OK


def _designated_orbit(fs: FSystem, steps: int) -> dict:
    meta = fs.meta
    for key in ("designated_vertices", "position_cells", "origin", "scan"):
        if key not in meta:
            raise MalformedTower(
                "this system carries no designated template orbit")
    origin, scan = int(meta["origin"]), meta["scan"]
    cells = meta["position_cells"]
    if origin + steps >= int(scan[1]):
        raise OrbitScanExhausted(
            f"template scan ends at {int(scan[1])}; "
            f"{steps} steps from {origin} leave it")

    def point_at(pos: int) -> FencePoint:
        verts = [int(cells[n][pos - int(scan[0])])
                 for n in range(fs.depth + 1)]
        top = fs.values.value(int(fs.hi[fs.depth][verts[-1]]))
        return FencePoint(Thread(fs.tower, verts), top)

    pts = [point_at(origin + k) for k in range(steps + 1)]
    for k in range(steps):
        res = lift_apply(fs, pts[k], "ratio")
        img = res["point"]
        want = pts[k + 1]
        if (img.height != want.height
                or list(img.thread.vertices)
                != list(want.thread.vertices[:img.thread.depth + 1])):
            raise ImageOutsideFiber(
                f"designated step {k + 1} disagrees with the lifted map")
    return {"mode": "ratio", "offset": 0, "steps": steps,
            "start": None, "points": pts}


def _parse_point(fs: FSystem, spec: str) -> FencePoint:
    height = None
    if ":" in spec:
        spec, _, frac = spec.partition(":")
        height = parse_frac(frac)
    n = fs.depth
    where = _label_index(fs, n)
    if spec in where:
        v = where[spec]
    else:
        try:
            v = int(spec)
        except ValueError:
            raise MalformedTower(
                f"no vertex {spec!r} at level {n}") from None
        if not 0 <= v < fs.tower.levels[n].nv:
            raise MalformedTower(f"vertex index {v} out of range at level {n}")
    thread = thread_from_vertex(fs.tower, n, v)
    if height is None:
        height = fs.fiber_interval(thread)[1]
    return FencePoint(thread, height)


def cmd_orbit(args) -> int:
    fs = _load_fsystem(args.fsystem)
    steps = args.steps
    if steps < 1:
        raise MalformedTower("orbit needs at least one step")
    if args.point == "designated":
        out = _designated_orbit(fs, steps)
        rows = [_point_row(fs, p, step=k)
                for k, p in enumerate(out.pop("points"))]
        out["start"] = rows[0]
        out["points"] = rows[1:]
    else:
        mode = args.mode or _auto_mode(fs)
        start = _parse_point(fs, args.point)
        first = lift_apply(fs, start, mode)
        offset = start.thread.depth - first["point"].thread.depth
        if steps * offset > fs.depth:
            raise CylinderTooDeep(
                f"{steps} steps at determinism offset {offset} exceed "
                f"depth {fs.depth}")
        pts = [first["point"]]
        for _ in range(steps - 1):
            pts.append(lift_apply(fs, pts[-1], mode)["point"])
        out = {"mode": mode, "offset": offset, "steps": steps,
               "start": _point_row(fs, start, step=0),
               "points": [_point_row(fs, p, step=k + 1)
                          for k, p in enumerate(pts)]}
    _write_out(ser.report_dumps(out), args.out)
    return EXIT_OK


def cmd_render(args) -> int:
    from . import render as rnd

    fs = _load_fsystem(args.fsystem)
    level = args.level if args.level is not None else fs.depth
    options = {"dots": args.dots}
    if args.render_mode == "fence":
        svg = rnd.render_fence(fs, level, options)
    else:
        svg = rnd.render_fan(fs, level, options)
    _write_out(svg, args.out)
    return EXIT_OK


def _make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fence-forge",
        description="Build, verify, lift, and render finite fence towers.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_build = sub.add_parser("build", help="construct a fence system")
    p_build.add_argument("config", nargs="?",
                         help="TOML config (JSON with .json suffix)")
    p_build.add_argument("--kind", help="constructor family")
    p_build.add_argument("--depth", type=int)
    p_build.add_argument("--alphabet", type=int,
                         help="letters per symbol (cantor splitting arity; "
                              "the shift tower is binary)")
    p_build.add_argument("--periods",
                         help="comma-separated cycle-length chain "
                              "(minimal_fraisse)")
    p_build.add_argument("--out")
    p_build.set_defaults(func=cmd_build)

    p_verify = sub.add_parser("verify", help="run certificate checks")
    p_verify.add_argument("fsystem")
    p_verify.add_argument("--checks",
                          help="comma-separated check names "
                               "(default chosen by family)")
    p_verify.add_argument("--mode", choices=["ratio", "affine"])
    p_verify.add_argument("--out")
    p_verify.set_defaults(func=cmd_verify)

    p_lift = sub.add_parser("lift", help="apply the lifted map to points")
    p_lift.add_argument("fsystem")
    p_lift.add_argument("points", help="JSON file of fence points")
    p_lift.add_argument("--mode", choices=["ratio", "affine"])
    p_lift.add_argument("--out")
    p_lift.set_defaults(func=cmd_lift)

    p_orbit = sub.add_parser("orbit", help="iterate the lifted map")
    p_orbit.add_argument("fsystem")
    p_orbit.add_argument("--point", default="designated",
                         help="'designated', a top-level vertex label or "
                              "index, optionally ':p/q' for the height")
    p_orbit.add_argument("--steps", type=int, required=True)
    p_orbit.add_argument("--mode", choices=["ratio", "affine"])
    p_orbit.add_argument("--out")
    p_orbit.set_defaults(func=cmd_orbit)

    p_render = sub.add_parser("render", help="draw a level as SVG")
    p_render.add_argument("fsystem")
    p_render.add_argument("--mode", dest="render_mode", required=True,
                          choices=["fence", "fan"])
    p_render.add_argument("--level", type=int)
    p_render.add_argument("--dots", action="store_true")
    p_render.add_argument("--out")
    p_render.set_defaults(func=cmd_render)
    return parser


def main(argv=None) -> int:
    args = _make_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InsufficientDepth, CylinderTooDeep, OrbitScanExhausted) as exc:
        print(f"depth budget: {exc}", file=sys.stderr)
        return EXIT_DEPTH_BUDGET
    except ImageOutsideFiber as exc:
        print(f"lift failure: {exc}", file=sys.stderr)
        return EXIT_CERT_FAIL
    except (FenceForgeError, OSError, json.JSONDecodeError,
            tomllib.TOMLDecodeError, KeyError, TypeError,
            ValueError) as exc:
        print(f"malformed input: {exc}", file=sys.stderr)
        return EXIT_MALFORMED


if __name__ == "__main__":
    sys.exit(main())
