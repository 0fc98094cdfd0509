"""Certify or refute the no-collision and half-space-preserving properties.

Two independent pairwise checks:

* collision: the displacement differences ``ΔT = T(x_i) - T(x_j)`` and
  ``Δx = x_i - x_j`` are antiparallel (a negative multiple ``κ``), so the
  straight-line paths meet at time ``λ = 1 / (1 - κ)``;
* half-space: some unit ``v`` has ``(x_j - x_i)·v >= 0`` and
  ``(T(x_j) - T(x_i))·v >= 0`` with one inequality strict. Candidate
  directions are ``Δx``, ``ΔT``, their bisector, and (for tree-built maps)
  the split direction at which the pair's images were separated.

Both checks are O(n²) and meant for desk-scale certification.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from . import _backend
from ._backend import njit
from .bsp import DirectionSchedule, build_tree, full_depth
from .measures import PointCloud, check_compatible
from .transport import TransportMap

DEFAULT_ATOL = 1e-9
_BISECTOR_MIN = 1e-8


@dataclass(frozen=True)
class CollisionWitness:
    i: int
    j: int
    kappa: float
    lam: float
    residual: float


@dataclass(frozen=True)
class HalfSpaceWitness:
    i: int
    j: int
    v: Tuple[float, ...]


@dataclass
class CollisionReport:
    passed: bool
    witnesses: List[CollisionWitness]
    pairs_checked: int
    duplicate_pairs: List[Tuple[int, int]]
    atol: float

    @property
    def colliding_pairs(self):
        return {(w.i, w.j) for w in self.witnesses}

    def to_dict(self):
        return {
            "status": "pass" if self.passed else "fail",
            "check": "no_collision",
            "witnesses": [asdict(w) for w in self.witnesses],
            "pairs_checked": self.pairs_checked,
            "duplicate_pairs": [list(p) for p in self.duplicate_pairs],
            "tolerance": self.atol,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


@dataclass
class HalfSpaceReport:
    passed: bool
    failures: List[Tuple[int, int]]
    pairs_checked: int
    duplicate_pairs: List[Tuple[int, int]]
    stol: float
    witnesses: List[HalfSpaceWitness] = field(default_factory=list)

    @property
    def failing_pairs(self):
        return set(self.failures)

    def to_dict(self):
        return {
            "status": "pass" if self.passed else "fail",
            "check": "half_space",
            "failures": [list(p) for p in self.failures],
            "pairs_checked": self.pairs_checked,
            "duplicate_pairs": [list(p) for p in self.duplicate_pairs],
            "tolerance": self.stol,
        }


# -- collision scan kernels ---------------------------------------------------


@njit(cache=True)
def _collisions_numba(x, y, atol):
    n, d = x.shape
    out_i = []
    out_j = []
    out_k = []
    dup_i = []
    dup_j = []
    dx = np.empty(d)
    dt = np.empty(d)
    for i in range(n):
        for j in range(i + 1, n):
            nx = 0.0
            nt = 0.0
            dot = 0.0
            for c in range(d):
                dx[c] = x[i, c] - x[j, c]
                dt[c] = y[i, c] - y[j, c]
                nx += dx[c] * dx[c]
                nt += dt[c] * dt[c]
                dot += dx[c] * dt[c]
            if nx == 0.0:
                dup_i.append(i)
                dup_j.append(j)
                continue
            if not dot < 0.0:
                continue
            worst = 0.0
            for a in range(d):
                for b in range(a + 1, d):
                    m = abs(dx[a] * dt[b] - dx[b] * dt[a])
                    if m > worst:
                        worst = m
            if worst <= atol * max(nx, nt):
                out_i.append(i)
                out_j.append(j)
                out_k.append(dot / nx)
    return (np.array(out_i, dtype=np.int64), np.array(out_j, dtype=np.int64),
            np.array(out_k, dtype=np.float64), np.array(dup_i, dtype=np.int64),
            np.array(dup_j, dtype=np.int64))


def _collisions_numpy(x, y, atol):
    n, d = x.shape
    out_i, out_j, out_k, dup_i, dup_j = [], [], [], [], []
    for i in range(n - 1):
        dx = x[i] - x[i + 1:]
        dt = y[i] - y[i + 1:]
        nx = np.einsum("ij,ij->i", dx, dx)
        nt = np.einsum("ij,ij->i", dt, dt)
        dot = np.einsum("ij,ij->i", dx, dt)
        dup = nx == 0.0
        worst = np.zeros(dx.shape[0])
        for a in range(d):
            for b in range(a + 1, d):
                np.maximum(worst, np.abs(dx[:, a] * dt[:, b] - dx[:, b] * dt[:, a]), out=worst)
        hit = ~dup & (dot < 0.0) & (worst <= atol * np.maximum(nx, nt))
        js = np.flatnonzero(hit)
        out_i.append(np.full(js.size, i))
        out_j.append(js + i + 1)
        out_k.append(dot[js] / nx[js])
        dj = np.flatnonzero(dup)
        dup_i.append(np.full(dj.size, i))
        dup_j.append(dj + i + 1)
    cat = lambda parts, dt=np.int64: np.concatenate(parts).astype(dt) if parts else np.empty(0, dt)
    return cat(out_i), cat(out_j), cat(out_k, np.float64), cat(dup_i), cat(dup_j)


def _prepare(source, tmap, target):
    check_compatible(source, target)
    if tmap.n != source.n:
        raise ValueError(f"map has {tmap.n} entries, clouds have {source.n} points")
    return np.ascontiguousarray(source.points), np.ascontiguousarray(tmap.images(target))


def check_no_collision(
    source: PointCloud,
    tmap: TransportMap,
    target: PointCloud,
    atol: float = DEFAULT_ATOL,
    backend: Optional[str] = None,
) -> CollisionReport:
    """Find every pair whose straight-line paths meet at some ``λ ∈ (0, 1)``.

    Collinearity uses a relative tolerance: every 2x2 minor of
    ``(Δx, ΔT)`` must be at most ``atol * max(|Δx|, |ΔT|)²``. Pairs of
    coincident source points are skipped and listed separately.
    """
    x, y = _prepare(source, tmap, target)
    if _backend.resolve(backend) == "numba":
        ii, jj, kk, di, dj = _collisions_numba(x, y, float(atol))
    else:
        ii, jj, kk, di, dj = _collisions_numpy(x, y, float(atol))
    witnesses = []
    for i, j, kappa in zip(ii.tolist(), jj.tolist(), kk.tolist()):
        lam = 1.0 / (1.0 - kappa)
        dx = x[i] - x[j]
        dt = y[i] - y[j]
        resid = float(np.linalg.norm((1.0 - lam) * dx + lam * dt))
        witnesses.append(CollisionWitness(i, j, kappa, lam, resid))
    n = source.n
    return CollisionReport(
        passed=not witnesses,
        witnesses=witnesses,
        pairs_checked=n * (n - 1) // 2 - len(di),
        duplicate_pairs=list(zip(di.tolist(), dj.tolist())),
        atol=float(atol),
    )


# -- half-space search --------------------------------------------------------


def _unit_rows(v):
    norm = np.linalg.norm(v, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        return v / norm[:, None], norm


def check_half_space(
    source: PointCloud,
    tmap: TransportMap,
    target: PointCloud,
    stol: float = 0.0,
    schedule: Optional[DirectionSchedule] = None,
    keep_witnesses: bool = False,
) -> HalfSpaceReport:
    """Search each pair for a direction certifying the half-space property.

    ``schedule`` enables the split-direction candidate when it matches the
    map's fingerprint. With ``keep_witnesses`` every certified pair records
    its direction (memory grows as n²).
    """
    x, y = _prepare(source, tmap, target)
    n, d = x.shape
    use_tree = schedule is not None and tmap.fingerprint == schedule.fingerprint
    if use_tree:
        t_rank = build_tree(target, schedule).rank[tmap.sigma]
        codes = _code_table(n)
        dirs = schedule.directions

    failures, dups, witnesses = [], [], []
    for i in range(n - 1):
        js = np.arange(i + 1, n)
        a = x[js] - x[i]
        b = y[js] - y[i]
        a_hat, a_norm = _unit_rows(a)
        b_hat, b_norm = _unit_rows(b)
        dup = a_norm == 0.0
        bis_hat, bis_norm = _unit_rows(a_hat + np.where(b_norm[:, None] > 0, b_hat, 0.0))
        cands = [a_hat, np.where(b_norm[:, None] > 0, b_hat, np.nan),
                 np.where(bis_norm[:, None] > _BISECTOR_MIN, bis_hat, np.nan)]
        if use_tree:
            same = codes[t_rank[js]] == codes[t_rank[i]]
            lev = np.cumprod(same, axis=1).sum(axis=1) + 1
            split = dirs[(lev - 1) % dirs.shape[0]]
            sign = np.where(np.einsum("ij,ij->i", a, split) < 0, -1.0, 1.0)
            cands.append(split * sign[:, None])

        found = np.zeros(js.size, dtype=bool)
        chosen = np.full((js.size, d), np.nan)
        for v in cands:
            av = np.einsum("ij,ij->i", a, v)
            bv = np.einsum("ij,ij->i", b, v)
            ok = (av >= 0) & (bv >= 0) & (np.maximum(av, bv) > stol) & ~found
            ok &= np.isfinite(av) & np.isfinite(bv)
            chosen[ok] = v[ok]
            found |= ok
        for k in np.flatnonzero(dup):
            dups.append((i, int(js[k])))
        for k in np.flatnonzero(~found & ~dup):
            failures.append((i, int(js[k])))
        if keep_witnesses:
            for k in np.flatnonzero(found):
                witnesses.append(HalfSpaceWitness(i, int(js[k]), tuple(chosen[k].tolist())))
    return HalfSpaceReport(
        passed=not failures,
        failures=failures,
        pairs_checked=n * (n - 1) // 2 - len(dups),
        duplicate_pairs=dups,
        stol=float(stol),
        witnesses=witnesses,
    )


def _code_table(n):
    """Leaf codes of an ``n``-point tree by rank, padded with -1."""
    depth = max(full_depth(n), 1)
    codes = np.full((n, depth), -1, dtype=np.int8)
    start = np.zeros(n, dtype=np.int64)
    size = np.full(n, n, dtype=np.int64)
    r = np.arange(n)
    for lev in range(depth):
        active = size > 1
        half = (size + 1) // 2
        right = active & (r >= start + half)
        codes[active, lev] = right[active]
        start = np.where(right, start + half, start)
        size = np.where(active, np.where(right, size - half, half), size)
    return codes
