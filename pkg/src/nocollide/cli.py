"""Command-line interface: ``nocollide {map,table,interp,bench,verify,gen}``.

Exit codes: 0 success, 1 validation failure (bad flags, inconsistent
inputs, failed certification), 2 I/O failure. Output paths default to the
directory named by ``NOCOLLIDE_OUT_DIR`` (or the working directory).
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
from pathlib import Path

from . import __version__
from .bsp import DirectionSchedule
from .cost import ALL_SPECS, DEFAULT_ORACLE_CAP, TABLE_SPECS, CostSpec, OracleCapExceeded, build_map, map_cost
from .experiments import DEFAULT_SEEDS, DEFAULT_SIZES, EXPERIMENTS, bench_hv, run_table, write_table
from .interp import frames as make_frames
from .interp import no_collision_along_path, write_frames
from .measures import (
    PointCloud,
    RigidTransform,
    apply_transform,
    gen_ellipse,
    gen_gaussian,
    gen_grid,
    read_cloud,
    write_cloud,
)
from .transport import Method, read_map, write_map
from .verify import DEFAULT_ATOL, check_half_space, check_no_collision

OUT_DIR_ENV = "NOCOLLIDE_OUT_DIR"

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2

log = logging.getLogger("nocollide")


class ConfigError(ValueError):
    """Invalid flag combination; exits with status 1."""


def _out_path(value, default_name):
    if value:
        return Path(value)
    return Path(os.environ.get(OUT_DIR_ENV, ".")) / default_name


def _int_list(text):
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers, got {text!r}") from exc


def _size_list(text):
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        if tok.startswith("2^"):
            out.append(2 ** int(tok[2:]))
        else:
            out.append(int(tok))
    if not out or any(n < 1 for n in out):
        raise argparse.ArgumentTypeError(f"sizes must be positive integers, got {text!r}")
    return out


def _cost(text):
    try:
        return CostSpec.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _load(path, header=False) -> PointCloud:
    try:
        return read_cloud(path, header=header)
    except OSError:
        raise
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _schedule(text, d):
    try:
        return DirectionSchedule.parse(text, d)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


# -- commands -------------------------------------------------------------------


def cmd_map(args):
    src = _load(args.source, args.header)
    tgt = _load(args.target, args.header)
    if src.n != tgt.n or src.d != tgt.d:
        raise ConfigError(f"source has {src.n}x{src.d} points, target {tgt.n}x{tgt.d}")
    specs = args.cost or list(ALL_SPECS)
    schedule = _schedule(args.schedule, src.d)
    t0 = time.perf_counter()
    try:
        tmap = build_map(src, tgt, args.method, specs[0], schedule, args.oracle_cap)
    except OracleCapExceeded as exc:
        raise ConfigError(str(exc)) from exc
    elapsed = time.perf_counter() - t0
    out = _out_path(args.out, f"map.{args.format}")
    write_map(tmap, out, args.format)
    print(f"n={src.n} method={tmap.method.value} time={elapsed:.6f}s out={out}")
    for spec in specs:
        print(f"  {spec.label:7s} mean_cost={map_cost(src, tmap, tgt, spec):.6g}")
    return EXIT_OK


def cmd_table(args):
    specs = args.cost or list(TABLE_SPECS)
    schedule = _schedule(args.schedule, 2)
    rows = []
    for exp in args.experiment:
        rows.extend(run_table(exp, args.n, args.seeds, specs, args.oracle_cap, schedule))
    out = _out_path(args.out, "table.csv")
    write_table(rows, out)
    for r in rows:
        ratio = "" if r["ratio"] is None else f"({r['ratio']:.2f}x)"
        print(f"{r['experiment']:12s} {r['cost_family']:7s} {r['method']:6s} n={r['n']:<5d} {r['mean_cost']:.4f} {ratio}")
    print(f"wrote {len(rows)} rows to {out}")
    return EXIT_OK


def cmd_interp(args):
    src = _load(args.source, args.header)
    tgt = _load(args.target, args.header)
    if src.n != tgt.n or src.d != tgt.d:
        raise ConfigError(f"source has {src.n}x{src.d} points, target {tgt.n}x{tgt.d}")
    if args.frames < 2:
        raise ConfigError("--frames must be >= 2")
    if args.map:
        tmap = read_map(args.map)
    else:
        tmap = build_map(src, tgt, args.method, CostSpec(), _schedule(args.schedule, src.d), args.oracle_cap)
    out_dir = _out_path(args.out, "frames")
    paths = write_frames(make_frames(src, tmap, tgt, args.frames), out_dir, args.format)
    report = no_collision_along_path(src, tmap, tgt, samples=max(2, args.frames - 1))
    print(f"wrote {len(paths)} file(s) to {out_dir}; "
          f"min pairwise distance over frames {min(report.min_distances):.6g}; "
          f"no-collision {'pass' if report.certificate.passed else 'fail'}")
    return EXIT_OK


def cmd_bench(args):
    schedule = _schedule(args.schedule, 2)
    backends = ["numba", "numpy"] if args.backend == "both" else [args.backend]
    report = {}
    for be in backends:
        rows = bench_hv(args.n, schedule, args.seed, args.repeats, backend=be)
        report[be] = rows
        print(f"backend={be}")
        for r in rows:
            ratio = "" if r["ratio"] is None else f"  ratio_to_prev={r['ratio']:.2f}"
            print(f"  n={r['n']:<8d} {r['seconds']:.6f}s{ratio}")
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=2))
    return EXIT_OK


def cmd_verify(args):
    src = _load(args.source, args.header)
    tgt = _load(args.target, args.header)
    try:
        tmap = read_map(args.map)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"{args.map}: {exc}") from exc
    if not (src.n == tgt.n == tmap.n) or src.d != tgt.d:
        raise ConfigError(f"inconsistent sizes: source {src.n}, map {tmap.n}, target {tgt.n}")
    coll = check_no_collision(src, tmap, tgt, atol=args.atol)
    schedule = _schedule(args.schedule, src.d) if args.schedule else None
    half = check_half_space(src, tmap, tgt, stol=args.stol, schedule=schedule)
    report = coll.to_dict()
    report["half_space"] = half.to_dict()
    passed = coll.passed and half.passed
    report["status"] = "pass" if passed else "fail"
    text = json.dumps(report, indent=2)
    if args.out:
        Path(args.out).write_text(text)
    print(text)
    return EXIT_OK if passed else EXIT_INVALID


def cmd_gen(args):
    if args.kind == "grid":
        side = math.isqrt(args.n)
        if side * side != args.n:
            raise ConfigError("grid clouds need a perfect-square --n")
        cloud = gen_grid(side)
    elif args.kind == "ellipse":
        cloud = gen_ellipse(args.n, args.a, args.b, exact=args.exact)
    else:
        cloud = gen_gaussian(args.n, args.seed, args.d)
    if args.angle or args.scale:
        center = args.center if args.center is not None else None
        cloud = apply_transform(cloud, RigidTransform(math.radians(args.angle), center, args.scale))
    out = _out_path(args.out, f"{args.kind}.{args.format}")
    write_cloud(cloud, out, args.format)
    print(f"wrote {cloud.n} points to {out}")
    return EXIT_OK


# -- parser ---------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="nocollide", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def io_flags(sp, need_target=True):
        sp.add_argument("--source", required=True)
        if need_target:
            sp.add_argument("--target", required=True)
        sp.add_argument("--header", action="store_true", help="CSV inputs have a header row")

    sp = sub.add_parser("map", help="build a transport map between two cloud files")
    io_flags(sp)
    sp.add_argument("--method", choices=["hv", "lex", "oracle"], default="hv")
    sp.add_argument("--schedule", default="hv", help="'hv' or 'axes:i,j,...' (0-based)")
    sp.add_argument("--cost", type=_cost, action="append", help="p:q, repeatable; the first one drives the oracle")
    sp.add_argument("--oracle-cap", type=int, default=DEFAULT_ORACLE_CAP)
    sp.add_argument("--out")
    sp.add_argument("--format", choices=["csv", "json"], default="csv")
    sp.set_defaults(func=cmd_map)

    sp = sub.add_parser("table", help="reproduce a cost-ratio table")
    sp.add_argument("--experiment", choices=EXPERIMENTS, action="append", required=True)
    sp.add_argument("--n", type=_size_list, default=list(DEFAULT_SIZES), help="comma list, e.g. 64,256 or 2^6")
    sp.add_argument("--seeds", type=_int_list, default=list(DEFAULT_SEEDS))
    sp.add_argument("--cost", type=_cost, action="append")
    sp.add_argument("--schedule", default="hv")
    sp.add_argument("--oracle-cap", type=int, default=DEFAULT_ORACLE_CAP)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_table)

    sp = sub.add_parser("interp", help="write displacement-interpolation frames")
    io_flags(sp)
    sp.add_argument("--map", help="use this map file instead of building one")
    sp.add_argument("--method", choices=["hv", "lex", "oracle"], default="hv")
    sp.add_argument("--schedule", default="hv")
    sp.add_argument("--oracle-cap", type=int, default=DEFAULT_ORACLE_CAP)
    sp.add_argument("--frames", type=int, default=11)
    sp.add_argument("--out")
    sp.add_argument("--format", choices=["csv", "json"], default="csv")
    sp.set_defaults(func=cmd_interp)

    sp = sub.add_parser("bench", help="time hv_map construction across sizes")
    sp.add_argument("--n", type=_size_list, default=[2 ** 12, 2 ** 14, 2 ** 16, 2 ** 18])
    sp.add_argument("--schedule", default="hv")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--repeats", type=int, default=3)
    sp.add_argument("--backend", choices=["numba", "numpy", "both"], default="both")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("verify", help="certify a map (no-collision and half-space checks)")
    io_flags(sp)
    sp.add_argument("--map", required=True)
    sp.add_argument("--atol", type=float, default=DEFAULT_ATOL)
    sp.add_argument("--stol", type=float, default=0.0)
    sp.add_argument("--schedule", help="enables the split-direction candidate for HV maps")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("gen", help="generate a point-cloud file")
    sp.add_argument("--kind", choices=["grid", "ellipse", "gaussian"], required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--d", type=int, default=2)
    sp.add_argument("--a", type=float, default=2.0)
    sp.add_argument("--b", type=float, default=1.0)
    sp.add_argument("--exact", action="store_true", help="trim ellipse clouds to exactly n points")
    sp.add_argument("--angle", type=float, default=0.0, help="rotation in degrees, counter-clockwise")
    sp.add_argument("--center", type=float, nargs="+", help="rotation center (default: centroid)")
    sp.add_argument("--scale", type=float, nargs="+")
    sp.add_argument("--out")
    sp.add_argument("--format", choices=["csv", "json"], default="csv")
    sp.set_defaults(func=cmd_gen)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; that code is reserved for I/O here
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
