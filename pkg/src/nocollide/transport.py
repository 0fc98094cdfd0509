"""Transport maps between equal-size clouds: HV (BSP leaf matching) and LEX."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from .bsp import FULL, BspTree, DirectionSchedule, build_tree
from .measures import PointCloud, check_compatible


class Method(str, enum.Enum):
    HV = "HV"
    LEX = "LEX"
    ORACLE = "ORACLE"
    COMPOSITE = "COMPOSITE"


class MapStructureError(ValueError):
    """A map does not respect the cell structure it was claimed to have."""


@dataclass(frozen=True, eq=False)
class TransportMap:
    """Bijection ``sigma``: source index ``i`` goes to target index ``sigma[i]``."""

    sigma: np.ndarray
    method: Method = Method.HV
    fingerprint: Optional[str] = None

    def __post_init__(self):
        sigma = np.array(self.sigma, dtype=np.int64, copy=True).ravel()
        n = sigma.size
        if n < 1:
            raise ValueError("a map needs at least one point")
        seen = np.zeros(n, dtype=bool)
        if sigma.min() < 0 or sigma.max() >= n:
            raise ValueError("sigma entries must lie in [0, n)")
        seen[sigma] = True
        if not seen.all():
            raise ValueError("sigma is not a bijection")
        sigma.setflags(write=False)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "method", Method(self.method))

    @property
    def n(self) -> int:
        return self.sigma.size

    def inverse(self) -> "TransportMap":
        inv = np.empty_like(self.sigma)
        inv[self.sigma] = np.arange(self.n)
        return TransportMap(inv, self.method, self.fingerprint)

    def images(self, target: PointCloud) -> np.ndarray:
        """``T(x_i)`` for every source index ``i``."""
        return target.points[self.sigma]

    def is_identity(self) -> bool:
        return bool(np.array_equal(self.sigma, np.arange(self.n)))

    def same_as(self, other: "TransportMap") -> bool:
        return bool(np.array_equal(self.sigma, other.sigma))

    @classmethod
    def identity(cls, n: int, method=Method.HV, fingerprint=None) -> "TransportMap":
        return cls(np.arange(n), method, fingerprint)


@dataclass(frozen=True, eq=False)
class DualPair:
    """Source cell ``A`` and target cell ``B`` sharing the same code at ``depth``."""

    depth: int
    code: tuple
    source: np.ndarray
    target: np.ndarray

    def __post_init__(self):
        if len(self.source) != len(self.target):
            raise MapStructureError("dual cells must carry equal counts")


def match_orders(source_order, target_order, method, fingerprint=None) -> TransportMap:
    sigma = np.empty(len(source_order), dtype=np.int64)
    sigma[np.asarray(source_order)] = np.asarray(target_order)
    return TransportMap(sigma, method, fingerprint)


def hv_map(
    source: PointCloud,
    target: PointCloud,
    schedule: Optional[DirectionSchedule] = None,
    **build_kwargs,
) -> TransportMap:
    """No-collision map sending the source leaf of rank ``j`` to the target leaf of rank ``j``.

    Both clouds are bisected to singletons with the same direction schedule
    (horizontal-vertical by default). Keyword arguments go to
    :func:`nocollide.bsp.build_tree` (``backend``, ``select``).
    """
    check_compatible(source, target)
    if schedule is None:
        schedule = DirectionSchedule.hv(source.d)
    s_tree = build_tree(source, schedule, FULL, **build_kwargs)
    t_tree = build_tree(target, schedule, FULL, **build_kwargs)
    return match_orders(s_tree.order, t_tree.order, Method.HV, schedule.fingerprint)


def hv_map_with_trees(source, target, schedule=None, **build_kwargs):
    """Like :func:`hv_map` but also returns the two full trees."""
    check_compatible(source, target)
    if schedule is None:
        schedule = DirectionSchedule.hv(source.d)
    s_tree = build_tree(source, schedule, FULL, **build_kwargs)
    t_tree = build_tree(target, schedule, FULL, **build_kwargs)
    tmap = match_orders(s_tree.order, t_tree.order, Method.HV, schedule.fingerprint)
    return tmap, s_tree, t_tree


def lex_order(cloud: PointCloud, axis_order: Optional[Sequence[int]] = None) -> np.ndarray:
    """Indices sorted by the axes in ``axis_order`` (default 0, 1, ...), then index."""
    axes = list(range(cloud.d)) if axis_order is None else [int(a) for a in axis_order]
    if sorted(axes) != list(range(cloud.d)):
        raise ValueError(f"axis_order must be a permutation of range({cloud.d})")
    pts = cloud.points
    keys = [np.arange(cloud.n)] + [pts[:, c] for c in reversed(axes)]
    return np.lexsort(keys)


def lex_map(source: PointCloud, target: PointCloud, axis_order: Optional[Sequence[int]] = None) -> TransportMap:
    """Knothe-Rosenblatt-style baseline: match the k-th lexicographic points."""
    check_compatible(source, target)
    return match_orders(lex_order(source, axis_order), lex_order(target, axis_order), Method.LEX)


def dual_pairs(source_tree: BspTree, target_tree: BspTree, depth: int) -> List[DualPair]:
    """All dual cell pairs at ``depth`` (cells that stopped early carry over).

    Cell members are listed in ascending index order, so the depth-0 pair
    restricts a map to itself.
    """
    if source_tree.n != target_tree.n:
        raise MapStructureError("dual pairs need trees over equally many points")
    if source_tree.schedule.fingerprint != target_tree.schedule.fingerprint:
        raise MapStructureError("dual pairs need trees built with the same schedule")
    codes = source_tree.cell_codes(depth)
    return [
        DualPair(min(depth, source_tree.depth), code, np.sort(a), np.sort(b))
        for code, a, b in zip(codes, source_tree.cells(depth), target_tree.cells(depth))
    ]


def restrict(tmap: TransportMap, pair: DualPair) -> TransportMap:
    """The piece of ``tmap`` on cell ``A``, as a map between the sub-clouds ``A -> B``.

    Local index ``i`` refers to ``pair.source[i]`` and ``pair.target[i]``.
    """
    a = np.asarray(pair.source, dtype=np.int64)
    b = np.asarray(pair.target, dtype=np.int64)
    if a.size and (a.max() >= tmap.n or b.max() >= tmap.n):
        raise MapStructureError("cell indices exceed the map size")
    pos_in_b = np.full(tmap.n, -1, dtype=np.int64)
    pos_in_b[b] = np.arange(b.size)
    local = pos_in_b[tmap.sigma[a]]
    if np.any(local < 0):
        raise MapStructureError(f"map sends points of cell {pair.code} outside its dual cell")
    return TransportMap(local, tmap.method, tmap.fingerprint)


def synthesize(n: int, pairs: Sequence[DualPair], pieces: Sequence[TransportMap], method=Method.HV, fingerprint=None) -> TransportMap:
    """Glue per-cell maps back into one map on ``n`` points."""
    sigma = np.full(n, -1, dtype=np.int64)
    for pair, piece in zip(pairs, pieces):
        sigma[np.asarray(pair.source)] = np.asarray(pair.target)[piece.sigma]
    if np.any(sigma < 0):
        raise MapStructureError("pairs do not cover every source point")
    return TransportMap(sigma, method, fingerprint)


def compose(maps: Sequence[TransportMap]) -> TransportMap:
    """Apply ``maps[0]`` first, then ``maps[1]``, and so on."""
    if not maps:
        raise ValueError("nothing to compose")
    sigma = maps[0].sigma
    for m in maps[1:]:
        if m.n != sigma.size:
            raise ValueError(f"cannot compose maps of sizes {sigma.size} and {m.n}")
        sigma = m.sigma[sigma]
    methods = {m.method for m in maps}
    prints = {m.fingerprint for m in maps}
    method = methods.pop() if len(methods) == 1 else Method.COMPOSITE
    fingerprint = prints.pop() if len(prints) == 1 else None
    return TransportMap(sigma, method, fingerprint)


# -- map files ------------------------------------------------------------------


def write_map(tmap: TransportMap, path, fmt: Optional[str] = None):
    path = Path(path)
    fmt = fmt or ("json" if path.suffix.lower() == ".json" else "csv")
    if fmt == "json":
        path.write_text(json.dumps({
            "method": tmap.method.value,
            "schedule_fingerprint": tmap.fingerprint,
            "sigma": tmap.sigma.tolist(),
        }))
    elif fmt == "csv":
        rows = (f"{i},{j}" for i, j in enumerate(tmap.sigma))
        path.write_text("\n".join(rows) + "\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")


def read_map(path, method=Method.HV, fingerprint: Optional[str] = None) -> TransportMap:
    """Read a map file. CSV rows are ``source_index,target_index``, in any order.

    CSV carries no provenance, so ``method`` and ``fingerprint`` are taken
    from the arguments; JSON files override them.
    """
    path = Path(path)
    if path.suffix.lower() == ".json":
        data = json.loads(path.read_text())
        return TransportMap(data["sigma"], data.get("method", method), data.get("schedule_fingerprint", fingerprint))
    pairs = np.loadtxt(path, delimiter=",", dtype=np.int64, ndmin=2)
    if pairs.shape[1] != 2:
        raise ValueError(f"{path}: expected rows 'source_index,target_index'")
    n = pairs.shape[0]
    sigma = np.full(n, -1, dtype=np.int64)
    if pairs[:, 0].min() < 0 or pairs[:, 0].max() >= n:
        raise ValueError(f"{path}: source indices out of range")
    sigma[pairs[:, 0]] = pairs[:, 1]
    if np.any(sigma < 0):
        raise ValueError(f"{path}: missing source indices")
    return TransportMap(sigma, method, fingerprint)
