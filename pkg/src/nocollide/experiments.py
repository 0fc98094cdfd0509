"""Cost-table experiments and the hv_map scaling benchmark."""

from __future__ import annotations

import csv
import logging
import math
import time
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from .bsp import DirectionSchedule
from .cost import DEFAULT_ORACLE_CAP, TABLE_SPECS, CostSpec, map_cost, optimal_assignment
from .measures import (
    PointCloud,
    RigidTransform,
    apply_transform,
    gen_ellipse,
    gen_gaussian,
    gen_grid,
)
from .transport import Method, hv_map, lex_map

log = logging.getLogger(__name__)

EXPERIMENTS = ("ellipse-rot", "grid-rot", "gauss-rot", "grid-gauss", "gauss-aniso")
SEEDLESS = ("ellipse-rot", "grid-rot")
DEFAULT_SIZES = tuple(2 ** (2 * k) for k in range(2, 7))
DEFAULT_SEEDS = tuple(range(10))
ELLIPSE_AXES = (2.0, 1.0)

ORIGIN = (0.0, 0.0)
ROT45 = RigidTransform(math.pi / 4, center=ORIGIN)
ANISO = RigidTransform(math.pi / 2, center=ORIGIN, scale=(3.0, 1.0))

TABLE_COLUMNS = ("experiment", "cost_family", "method", "n", "mean_cost", "ratio")


def _grid_side(n: int) -> int:
    side = math.isqrt(n)
    if side * side != n:
        raise ValueError(f"grid experiments need a perfect-square n, got {n}")
    return side


def make_instance(experiment: str, n: int, seed: int = 0):
    """Source and target clouds for one table cell.

    Rotations are about the origin. Two-sample Gaussian experiments draw
    the source with seed ``2*seed`` and the target with ``2*seed + 1``.
    """
    if experiment == "grid-rot":
        src = gen_grid(_grid_side(n))
        return src, apply_transform(src, ROT45)
    if experiment == "ellipse-rot":
        src = gen_ellipse(n, *ELLIPSE_AXES, exact=True)
        return src, apply_transform(src, ROT45)
    if experiment == "gauss-rot":
        src = gen_gaussian(n, seed)
        return src, apply_transform(src, ROT45)
    if experiment == "grid-gauss":
        return gen_grid(_grid_side(n)), gen_gaussian(n, seed)
    if experiment == "gauss-aniso":
        return gen_gaussian(n, 2 * seed), apply_transform(gen_gaussian(n, 2 * seed + 1), ANISO)
    raise ValueError(f"unknown experiment {experiment!r}; choose from {EXPERIMENTS}")


def run_table(
    experiment: str,
    sizes: Iterable[int] = DEFAULT_SIZES,
    seeds: Sequence[int] = DEFAULT_SEEDS,
    specs: Sequence[CostSpec] = TABLE_SPECS,
    cap: int = DEFAULT_ORACLE_CAP,
    schedule: Optional[DirectionSchedule] = None,
) -> List[Dict]:
    """Rows ``(experiment, cost_family, method, n, mean_cost, ratio)``.

    ``mean_cost`` averages over seeds; ``ratio`` is the mean over seeds of
    the per-instance ratio to the exact optimum, and is ``None`` when ``n``
    exceeds the oracle cap.
    """
    if experiment not in EXPERIMENTS:
        raise ValueError(f"unknown experiment {experiment!r}; choose from {EXPERIMENTS}")
    seeds = list(seeds)[:1] if experiment in SEEDLESS else list(seeds)
    rows = []
    for n in sizes:
        with_oracle = n <= cap
        if not with_oracle:
            log.warning("n=%d exceeds the oracle cap %d; ratio column omitted", n, cap)
        costs = {(s, m): [] for s in specs for m in Method if m != Method.COMPOSITE}
        ratios = {(s, m): [] for s in specs for m in (Method.HV, Method.LEX)}
        for seed in seeds:
            src, tgt = make_instance(experiment, n, seed)
            maps = {Method.HV: hv_map(src, tgt, schedule), Method.LEX: lex_map(src, tgt)}
            for spec in specs:
                best = None
                if with_oracle:
                    best = map_cost(src, optimal_assignment(src, tgt, spec, cap), tgt, spec)
                    costs[spec, Method.ORACLE].append(best)
                for method, tmap in maps.items():
                    c = map_cost(src, tmap, tgt, spec)
                    costs[spec, method].append(c)
                    if best is not None:
                        ratios[spec, method].append(c / best if best > 0 else (1.0 if c == 0 else math.inf))
        for spec in specs:
            for method in (Method.ORACLE, Method.HV, Method.LEX):
                vals = costs[spec, method]
                if not vals:
                    continue
                if method == Method.ORACLE:
                    ratio = 1.0
                else:
                    ratio = float(np.mean(ratios[spec, method])) if with_oracle else None
                rows.append({
                    "experiment": experiment,
                    "cost_family": spec.label,
                    "method": method.value,
                    "n": n,
                    "mean_cost": float(np.mean(vals)),
                    "ratio": ratio,
                })
    return rows


def write_table(rows: Sequence[Dict], path):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=TABLE_COLUMNS)
        w.writeheader()
        for row in rows:
            out = dict(row)
            out["mean_cost"] = repr(row["mean_cost"])
            out["ratio"] = "" if row["ratio"] is None else repr(row["ratio"])
            w.writerow(out)


def read_table(path) -> List[Dict]:
    with open(path, newline="") as fh:
        rows = []
        for row in csv.DictReader(fh):
            row["n"] = int(row["n"])
            row["mean_cost"] = float(row["mean_cost"])
            row["ratio"] = float(row["ratio"]) if row["ratio"] else None
            rows.append(row)
        return rows


# -- benchmark -------------------------------------------------------------------


def bench_hv(
    sizes: Sequence[int] = tuple(2 ** k for k in (12, 14, 16, 18)),
    schedule: Optional[DirectionSchedule] = None,
    seed: int = 0,
    repeats: int = 3,
    backend: Optional[str] = None,
) -> List[Dict]:
    """Best-of-``repeats`` wall time of ``hv_map`` per size.

    Each entry also carries ``ratio`` = time(n) / time(previous n), which
    for sizes spaced by 4x is the time(4n)/time(n) scaling figure.
    """
    warm_src, warm_tgt = gen_gaussian(64, seed), gen_gaussian(64, seed + 1)
    hv_map(warm_src, warm_tgt, schedule, backend=backend)  # JIT warm-up
    out = []
    prev = None
    for n in sizes:
        src, tgt = gen_gaussian(n, seed), gen_gaussian(n, seed + 1)
        best = math.inf
        for _ in range(max(1, repeats)):
            t0 = time.perf_counter()
            hv_map(src, tgt, schedule, backend=backend)
            best = min(best, time.perf_counter() - t0)
        out.append({"n": n, "seconds": best, "ratio": None if prev is None else best / prev})
        prev = best
    return out
