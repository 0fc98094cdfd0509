"""Transport costs ``c(x, y) = ||x - y||_p^q`` and the exact assignment oracle."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _backend
from ._backend import njit
from .bsp import DirectionSchedule
from .measures import DimensionError, PointCloud, check_compatible
from .transport import Method, TransportMap, hv_map, lex_map

DEFAULT_ORACLE_CAP = 4096


class OracleCapExceeded(ValueError):
    pass


@dataclass(frozen=True)
class CostSpec:
    p: float = 2
    q: int = 2

    def __post_init__(self):
        p = float(self.p)
        if p not in (1.0, 2.0, math.inf):
            raise ValueError(f"p must be 1, 2 or inf, got {self.p!r}")
        if self.q not in (1, 2):
            raise ValueError(f"q must be 1 or 2, got {self.q!r}")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", int(self.q))

    @classmethod
    def parse(cls, text: str) -> "CostSpec":
        """``"2:2"``, ``"inf:2"``, ``"1:1"``, ..."""
        try:
            p, q = text.split(":")
            return cls(math.inf if p.strip().lower() in ("inf", "oo") else float(p), int(q))
        except (TypeError, ValueError) as exc:
            raise ValueError(f"cannot parse cost spec {text!r}; expected 'p:q'") from exc

    @property
    def label(self) -> str:
        p = "inf" if self.p == math.inf else str(int(self.p))
        return f"L{p}^{self.q}"

    def __str__(self):
        p = "inf" if self.p == math.inf else str(int(self.p))
        return f"{p}:{self.q}"


ALL_SPECS = tuple(CostSpec(p, q) for p in (1, 2, math.inf) for q in (1, 2))
# cost families shown by `nocollide table` by default
TABLE_SPECS = (CostSpec(2, 2), CostSpec(2, 1), CostSpec(1, 2), CostSpec(math.inf, 2))


def _norms(diff: np.ndarray, spec: CostSpec) -> np.ndarray:
    """Row-wise ``||diff||_p^q``."""
    if spec.p == 2.0:
        sq = np.einsum("...i,...i->...", diff, diff)
        return sq if spec.q == 2 else np.sqrt(sq)
    if spec.p == 1.0:
        r = np.abs(diff).sum(axis=-1)
    else:
        r = np.abs(diff).max(axis=-1)
    return r * r if spec.q == 2 else r


def point_cost(x, y, spec: CostSpec = CostSpec()) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise DimensionError(f"points have shapes {x.shape} and {y.shape}")
    return float(_norms(x - y, spec))


def map_cost(source: PointCloud, tmap: TransportMap, target: PointCloud, spec: CostSpec = CostSpec()) -> float:
    """Mean per-point cost ``(1/n) sum_i c(x_i, y_sigma(i))``."""
    check_compatible(source, target)
    if tmap.n != source.n:
        raise ValueError(f"map has {tmap.n} entries, clouds have {source.n} points")
    return float(_norms(source.points - tmap.images(target), spec).mean())


def cost_matrix(source: PointCloud, target: PointCloud, spec: CostSpec) -> np.ndarray:
    """Dense ``C[i, j] = c(x_i, y_j)``, built one coordinate at a time."""
    x, y = source.points, target.points
    c = np.zeros((x.shape[0], y.shape[0]))
    for k in range(x.shape[1]):
        diff = x[:, k, None] - y[None, :, k]
        if spec.p == 2.0:
            c += diff * diff
        elif spec.p == 1.0:
            c += np.abs(diff)
        else:
            np.maximum(c, np.abs(diff), out=c)
    if spec.p == 2.0:
        return c if spec.q == 2 else np.sqrt(c)
    return c * c if spec.q == 2 else c


# -- shortest augmenting path assignment -----------------------------------------


@njit(cache=True)
def _assign_numba(c):
    n = c.shape[0]
    inf = np.inf
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    p = np.zeros(n + 1, dtype=np.int64)
    way = np.zeros(n + 1, dtype=np.int64)
    minv = np.empty(n + 1)
    used = np.empty(n + 1, dtype=np.bool_)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv[:] = inf
        used[:] = False
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = inf
            j1 = 0
            for j in range(1, n + 1):
                if not used[j]:
                    cur = c[i0 - 1, j - 1] - u[i0] - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0 != 0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    sigma = np.empty(n, dtype=np.int64)
    for j in range(1, n + 1):
        sigma[p[j] - 1] = j - 1
    return sigma


def _assign_numpy(c):
    n = c.shape[0]
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    p = np.zeros(n + 1, dtype=np.int64)
    way = np.zeros(n + 1, dtype=np.int64)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            free = ~used[1:]
            cur = c[i0 - 1] - u[i0] - v[1:]
            better = free & (cur < minv[1:])
            minv[1:][better] = cur[better]
            way[1:][better] = j0
            masked = np.where(free, minv[1:], np.inf)
            j1 = int(np.argmin(masked)) + 1
            delta = masked[j1 - 1]
            u[p[used]] += delta
            v[used] -= delta
            minv[~used] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0 != 0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    sigma = np.empty(n, dtype=np.int64)
    sigma[p[1:] - 1] = np.arange(n)
    return sigma


def solve_assignment(c: np.ndarray, backend: Optional[str] = None) -> np.ndarray:
    """Minimum-sum permutation for a square cost matrix (row ``i`` -> column ``sigma[i]``)."""
    c = np.ascontiguousarray(c, dtype=np.float64)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ValueError("cost matrix must be square")
    if _backend.resolve(backend) == "numba":
        return _assign_numba(c)
    return _assign_numpy(c)


def optimal_assignment(
    source: PointCloud,
    target: PointCloud,
    spec: CostSpec = CostSpec(),
    cap: int = DEFAULT_ORACLE_CAP,
    backend: Optional[str] = None,
) -> TransportMap:
    """Exact minimum-mean-cost bijection (O(n³) shortest augmenting paths)."""
    check_compatible(source, target)
    if source.n > cap:
        raise OracleCapExceeded(f"n={source.n} exceeds the oracle cap of {cap}")
    sigma = solve_assignment(cost_matrix(source, target, spec), backend=backend)
    return TransportMap(sigma, Method.ORACLE)


def build_map(source, target, method, spec: CostSpec = CostSpec(), schedule=None, cap=DEFAULT_ORACLE_CAP) -> TransportMap:
    method = Method(method.upper() if isinstance(method, str) else method)
    if method == Method.HV:
        return hv_map(source, target, schedule)
    if method == Method.LEX:
        return lex_map(source, target)
    if method == Method.ORACLE:
        return optimal_assignment(source, target, spec, cap)
    raise ValueError(f"cannot build a map with method {method}")


def cost_ratio(
    source: PointCloud,
    target: PointCloud,
    spec: CostSpec = CostSpec(),
    method=Method.HV,
    schedule: Optional[DirectionSchedule] = None,
    cap: int = DEFAULT_ORACLE_CAP,
    oracle: Optional[TransportMap] = None,
) -> float:
    """Cost of the ``method`` map divided by the exact optimum."""
    method = Method(method.upper() if isinstance(method, str) else method)
    if method == Method.ORACLE:
        return 1.0
    if oracle is None:
        oracle = optimal_assignment(source, target, spec, cap)
    best = map_cost(source, oracle, target, spec)
    mine = map_cost(source, build_map(source, target, method, spec, schedule, cap), target, spec)
    if best == 0.0:
        return 1.0 if mine == 0.0 else math.inf
    return mine / best
