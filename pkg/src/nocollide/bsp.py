"""Equal-count median bisection trees, binary codes and ternary encodings.

Every cell of ``m >= 2`` points is cut along the scheduled direction into
its ``ceil(m/2)`` lowest points (code bit 0) and the rest (code bit 1).
Points are ordered by the key ``(x·v, x[0], ..., x[d-1], index)``, which is
a total order, so a split is always well defined.

Cells are split breadth-synchronously, one level at a time. Because the
left share is always ``ceil(m/2)``, the cell sizes at every level depend on
``n`` alone: two clouds of equal size produce trees with identical shape,
and the leaf at rank ``j`` of one is dual to the leaf at rank ``j`` of the
other.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from . import _backend
from ._backend import njit
from .measures import DimensionError, PointCloud

BinaryCode = Tuple[int, ...]

FULL = "full"


# -- direction schedules ------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DirectionSchedule:
    """Cyclic list of unit split directions; level ``k >= 1`` uses ``v_k``.

    ``DirectionSchedule.hv(2)`` is the horizontal-vertical schedule
    ``e_1, e_2, e_1, ...``.
    """

    directions: np.ndarray
    kind: str = "explicit"

    def __post_init__(self):
        dirs = np.array(self.directions, dtype=np.float64, copy=True)
        if dirs.ndim != 2 or dirs.shape[0] < 1 or dirs.shape[1] < 1:
            raise ValueError("directions must be a non-empty (period, d) array")
        norms = np.linalg.norm(dirs, axis=1)
        if np.any(~np.isfinite(norms)) or np.any(norms == 0):
            raise ValueError("directions must be finite and non-zero")
        if self.kind == "explicit":
            dirs = dirs / norms[:, None]
        elif np.any(np.abs(norms - 1.0) > 1e-12):
            raise ValueError("axis schedules must use unit vectors")
        dirs.setflags(write=False)
        object.__setattr__(self, "directions", dirs)

    @classmethod
    def axes(cls, order: Sequence[int], d: int) -> "DirectionSchedule":
        """Cycle through the standard basis vectors listed in ``order`` (0-based)."""
        order = [int(a) for a in order]
        if not order or any(a < 0 or a >= d for a in order):
            raise ValueError(f"axis indices must lie in [0, {d})")
        return cls(np.eye(d)[order], kind="axes")

    @classmethod
    def hv(cls, d: int = 2) -> "DirectionSchedule":
        return cls.axes(range(d), d)

    @classmethod
    def parse(cls, text: str, d: int) -> "DirectionSchedule":
        """Parse ``"hv"`` or ``"axes:i,j,..."``."""
        text = text.strip().lower()
        if text == "hv":
            return cls.hv(d)
        if text.startswith("axes:"):
            return cls.axes([int(tok) for tok in text[5:].split(",") if tok.strip()], d)
        raise ValueError(f"cannot parse schedule {text!r}; use 'hv' or 'axes:i,j,...'")

    @property
    def d(self) -> int:
        return self.directions.shape[1]

    @property
    def period(self) -> int:
        return self.directions.shape[0]

    def direction(self, k: int) -> np.ndarray:
        """Split direction used at level ``k`` (1-based)."""
        if k < 1:
            raise ValueError("levels are numbered from 1")
        return self.directions[(k - 1) % self.period]

    def axis_indices(self) -> np.ndarray:
        """Per direction: the axis it equals exactly, or -1."""
        out = np.full(self.period, -1, dtype=np.int64)
        eye = np.eye(self.d)
        for i, v in enumerate(self.directions):
            hits = np.flatnonzero((eye == v).all(axis=1))
            if hits.size:
                out[i] = hits[0]
        return out

    @property
    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(f"{self.period}x{self.d}:".encode())
        h.update(np.ascontiguousarray(self.directions).tobytes())
        return h.hexdigest()[:16]


# -- single-cell median split -------------------------------------------------


def _project_one(points: np.ndarray, v: np.ndarray) -> np.ndarray:
    """``points @ v`` summed left to right, so every caller rounds identically."""
    hits = np.flatnonzero(v)
    if hits.size == 1 and v[hits[0]] == 1.0:
        return np.ascontiguousarray(points[:, hits[0]])
    acc = points[:, 0] * v[0]
    for c in range(1, points.shape[1]):
        acc = acc + points[:, c] * v[c]
    return acc


def project(points: np.ndarray, schedule: DirectionSchedule) -> np.ndarray:
    """Projections onto each schedule direction, shape ``(period, n)``."""
    return np.stack([_project_one(points, v) for v in schedule.directions])



def _key_order(points: np.ndarray, proj: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """Argsort of ``idx`` under the (projection, coordinates, index) key."""
    keys = [idx] + [points[idx, c] for c in range(points.shape[1] - 1, -1, -1)] + [proj]
    return np.lexsort(keys)


def split_median(indices, cloud: PointCloud, v) -> Tuple[np.ndarray, np.ndarray, float]:
    """Split a cell into its ``ceil(m/2)`` lowest points along ``v`` and the rest.

    Returns ``(left, right, h)`` where ``h`` is the midpoint between the
    largest left projection and the smallest right projection. ``h`` is
    ``nan`` for a single-point cell. Expected linear time: a partial
    partition finds the median projection and only the tie block around it
    is sorted.
    """
    idx = np.asarray(indices, dtype=np.int64)
    if idx.size == 0:
        raise ValueError("cannot split an empty cell")
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (cloud.d,):
        raise DimensionError(f"direction has dimension {v.size}, cloud has {cloud.d}")
    m = idx.size
    if m == 1:
        return idx.copy(), idx[:0].copy(), float("nan")

    proj = _project_one(cloud.points[idx], v)
    k = (m + 1) // 2
    t = np.partition(proj, k - 1)[k - 1]
    below = proj < t
    tied = np.flatnonzero(proj == t)
    need = k - int(below.sum())
    tied_sorted = tied[_key_order(cloud.points, proj[tied], idx[tied])]
    left_mask = below.copy()
    left_mask[tied_sorted[:need]] = True

    left, right = idx[left_mask], idx[~left_mask]
    h = 0.5 * (float(proj[left_mask].max()) + float(proj[~left_mask].min()))
    return left, right, h


# -- tree layout --------------------------------------------------------------


def _layout(n: int, max_depth: Optional[int]):
    """Cells ``(starts, sizes)`` at every depth, from the root to the leaves."""
    starts = [np.zeros(1, dtype=np.int64)]
    sizes = [np.array([n], dtype=np.int64)]
    while sizes[-1].max() > 1 and (max_depth is None or len(sizes) - 1 < max_depth):
        s, m = starts[-1], sizes[-1]
        split = m > 1
        left = (m + 1) // 2
        ns = np.empty(m.size + split.sum(), dtype=np.int64)
        nm = np.empty_like(ns)
        # each splitting cell contributes two children, others one
        pos = np.cumsum(np.where(split, 2, 1)) - np.where(split, 2, 1)
        ns[pos] = s
        nm[pos] = np.where(split, left, m)
        ns[pos[split] + 1] = s[split] + left[split]
        nm[pos[split] + 1] = m[split] - left[split]
        starts.append(ns)
        sizes.append(nm)
    return starts, sizes


def _splitting(starts, sizes, level):
    """Cells at depth ``level - 1`` that are split at ``level``."""
    s, m = starts[level - 1], sizes[level - 1]
    keep = m > 1
    return s[keep], m[keep]


# -- numba kernel -------------------------------------------------------------
#
# Selection works on a contiguous key buffer ``vals`` that moves in step
# with ``perm`` (vals[i] is the projection of point perm[i]), so the hot
# comparisons never chase an index. Coordinates are read only on ties.


@njit(cache=True)
def _less(va, a, vb, b, pts):
    if va < vb:
        return True
    if va > vb:
        return False
    for c in range(pts.shape[1]):
        if pts[a, c] < pts[b, c]:
            return True
        if pts[a, c] > pts[b, c]:
            return False
    return a < b


@njit(cache=True)
def _swap(vals, perm, i, j):
    tv = vals[i]
    vals[i] = vals[j]
    vals[j] = tv
    tp = perm[i]
    perm[i] = perm[j]
    perm[j] = tp


@njit(cache=True)
def _next_random(state):
    x = state[0]
    x ^= x << np.uint64(13)
    x ^= x >> np.uint64(7)
    x ^= x << np.uint64(17)
    state[0] = x
    return x


@njit(cache=True)
def _insertion_sort(vals, perm, lo, hi, pts):
    for i in range(lo + 1, hi):
        v = vals[i]
        item = perm[i]
        j = i - 1
        while j >= lo and _less(v, item, vals[j], perm[j], pts):
            vals[j + 1] = vals[j]
            perm[j + 1] = perm[j]
            j -= 1
        vals[j + 1] = v
        perm[j + 1] = item


@njit(cache=True)
def _partition(vals, perm, lo, hi, p, pts):
    _swap(vals, perm, p, hi - 1)
    pv = vals[hi - 1]
    pi = perm[hi - 1]
    store = lo
    for i in range(lo, hi - 1):
        if _less(vals[i], perm[i], pv, pi, pts):
            _swap(vals, perm, i, store)
            store += 1
    _swap(vals, perm, store, hi - 1)
    return store


@njit(cache=True)
def _select(vals, perm, lo, hi, k, pts, mom, state):
    """Rearrange ``[lo, hi)`` so position ``k`` holds its order statistic."""
    while hi - lo > 1:
        if hi - lo <= 16:
            _insertion_sort(vals, perm, lo, hi, pts)
            return
        if mom:
            # medians of groups of five, gathered at the front, then their median
            g = 0
            for s in range(lo, hi, 5):
                e = min(s + 5, hi)
                _insertion_sort(vals, perm, s, e, pts)
                _swap(vals, perm, lo + g, s + (e - s - 1) // 2)
                g += 1
            _select(vals, perm, lo, lo + g, lo + (g - 1) // 2, pts, mom, state)
            p = lo + (g - 1) // 2
        else:
            p = lo + np.int64(_next_random(state) % np.uint64(hi - lo))
        q = _partition(vals, perm, lo, hi, p, pts)
        if k == q:
            return
        if k < q:
            hi = q
        else:
            lo = q + 1


@njit(cache=True)
def _build_numba(pts, projs, level_ptr, split_starts, split_sizes, mom, seed):
    n = pts.shape[0]
    perm = np.arange(n)
    vals = np.empty(n)
    thresholds = np.empty(split_starts.shape[0])
    state = np.empty(1, dtype=np.uint64)
    state[0] = np.uint64(seed)
    period = projs.shape[0]
    for lev in range(level_ptr.shape[0] - 1):
        proj = projs[lev % period]
        for i in range(n):
            vals[i] = proj[perm[i]]
        for c in range(level_ptr[lev], level_ptr[lev + 1]):
            s = split_starts[c]
            m = split_sizes[c]
            k = (m + 1) // 2
            _select(vals, perm, s, s + m, s + k - 1, pts, mom, state)
            lmax = vals[s]
            for i in range(s + 1, s + k):
                if vals[i] > lmax:
                    lmax = vals[i]
            rmin = vals[s + k]
            for i in range(s + k + 1, s + m):
                if vals[i] < rmin:
                    rmin = vals[i]
            thresholds[c] = 0.5 * (lmax + rmin)
    return perm, thresholds


# -- numpy fallback -----------------------------------------------------------


def _build_numpy(pts, projs, starts, sizes, n_levels):
    """Level-wise segmented sort. O(n log n) per level, O(n log² n) total."""
    n = pts.shape[0]
    perm = np.arange(n)
    period = projs.shape[0]
    ranks = {}
    thresholds = []
    for lev in range(1, n_levels + 1):
        di = (lev - 1) % period
        if di not in ranks:
            proj = projs[di]
            order = _key_order(pts, proj, np.arange(n))
            rank = np.empty(n, dtype=np.int64)
            rank[order] = np.arange(n)
            ranks[di] = (rank, proj)
        rank, proj = ranks[di]
        cell_of = np.repeat(np.arange(sizes[lev - 1].size), sizes[lev - 1])
        perm = perm[np.argsort(cell_of * n + rank[perm], kind="stable")]
        s, m = _splitting(starts, sizes, lev)
        k = (m + 1) // 2
        thresholds.append(0.5 * (proj[perm[s + k - 1]] + proj[perm[s + k]]))
    flat = np.concatenate(thresholds) if thresholds else np.empty(0)
    return perm, flat


def leaf_order(
    cloud: PointCloud,
    schedule: DirectionSchedule,
    max_depth: Union[int, str] = FULL,
    *,
    backend: Optional[str] = None,
    select: str = "quickselect",
    seed: int = 0x9E3779B97F4A7C15,
):
    """Low-level builder: ``(perm, thresholds, starts, sizes)``.

    ``perm`` lists point indices in leaf (code) order; ``thresholds`` holds
    one split value per internal node, level by level.
    """
    if schedule.d != cloud.d:
        raise DimensionError(f"schedule has d={schedule.d}, cloud has d={cloud.d}")
    if select not in ("quickselect", "median_of_medians"):
        raise ValueError(f"unknown selection algorithm {select!r}")
    depth_cap = None if max_depth == FULL else int(max_depth)
    if depth_cap is not None and depth_cap < 0:
        raise ValueError("max_depth must be >= 0 or 'full'")
    n = cloud.n
    starts, sizes = _layout(n, depth_cap)
    n_levels = len(starts) - 1
    pts = cloud.points
    projs = project(pts, schedule)

    if _backend.resolve(backend) == "numba":
        split = [_splitting(starts, sizes, lev) for lev in range(1, n_levels + 1)]
        level_ptr = np.zeros(n_levels + 1, dtype=np.int64)
        level_ptr[1:] = np.cumsum([s.size for s, _ in split])
        split_starts = np.concatenate([s for s, _ in split]) if split else np.empty(0, np.int64)
        split_sizes = np.concatenate([m for _, m in split]) if split else np.empty(0, np.int64)
        perm, thresholds = _build_numba(
            pts, projs, level_ptr, split_starts, split_sizes,
            select == "median_of_medians", np.uint64(seed),
        )
    else:
        perm, thresholds = _build_numpy(pts, projs, starts, sizes, n_levels)

    if sizes[-1].max() > 1:
        # multi-point leaves: list payloads in index order
        for s, m in zip(starts[-1], sizes[-1]):
            if m > 1:
                perm[s:s + m] = np.sort(perm[s:s + m])
    return perm, thresholds, starts, sizes


# -- tree objects -------------------------------------------------------------


@dataclass(frozen=True)
class BspNode:
    """Read-only view of one internal node."""

    depth: int
    direction: np.ndarray
    threshold: float
    left: Union["BspNode", np.ndarray]
    right: Union["BspNode", np.ndarray]


@dataclass(frozen=True, eq=False)
class BspTree:
    cloud: PointCloud
    schedule: DirectionSchedule
    order: np.ndarray
    thresholds: np.ndarray
    starts: tuple
    sizes: tuple

    @property
    def n(self) -> int:
        return self.cloud.n

    @property
    def depth(self) -> int:
        """Number of split levels."""
        return len(self.starts) - 1

    @property
    def leaf_order(self):
        """Leaf payloads (index arrays) in code order."""
        return [self.order[s:s + m] for s, m in zip(self.starts[-1], self.sizes[-1])]

    @property
    def rank(self) -> np.ndarray:
        """``rank[i]`` is the position of point ``i`` in ``order``."""
        r = np.empty(self.n, dtype=np.int64)
        r[self.order] = np.arange(self.n)
        return r

    def cells(self, depth: int):
        """Index arrays of the cells at ``depth`` (0 = root), in code order."""
        depth = min(depth, self.depth)
        return [self.order[s:s + m] for s, m in zip(self.starts[depth], self.sizes[depth])]

    def cell_codes(self, depth: int):
        """Binary codes of the cells returned by :meth:`cells`."""
        depth = min(depth, self.depth)
        codes = [()]
        for lev in range(1, depth + 1):
            nxt = []
            for code, m in zip(codes, self.sizes[lev - 1]):
                if m > 1:
                    nxt.extend([code + (0,), code + (1,)])
                else:
                    nxt.append(code)
            codes = nxt
        return codes

    def _threshold_offsets(self):
        counts = [int((self.sizes[lev - 1] > 1).sum()) for lev in range(1, self.depth + 1)]
        return np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)

    def encode(self, point_index: int) -> BinaryCode:
        if not 0 <= point_index < self.n:
            raise IndexError(f"point index {point_index} out of range for n={self.n}")
        return code_of_rank(int(self.rank[point_index]), self.n, self.depth)

    def codes(self):
        """Codes of all points, indexed by point."""
        by_rank = [code_of_rank(r, self.n, self.depth) for r in range(self.n)]
        return [by_rank[r] for r in self.rank]

    @property
    def root(self) -> Union[BspNode, np.ndarray]:
        offsets = self._threshold_offsets()

        def build(depth, cell):
            s, m = int(self.starts[depth][cell]), int(self.sizes[depth][cell])
            if m == 1 or depth == self.depth:
                return self.order[s:s + m]
            split_rank = int((self.sizes[depth][:cell] > 1).sum())
            child = int(np.searchsorted(self.starts[depth + 1], s))
            return BspNode(
                depth=depth + 1,
                direction=self.schedule.direction(depth + 1),
                threshold=float(self.thresholds[offsets[depth] + split_rank]),
                left=build(depth + 1, child),
                right=build(depth + 1, child + 1),
            )

        return build(0, 0)

    def to_dict(self):
        """Nested ``{dir, h, left, right}`` dump; leaves are index lists."""

        def conv(node):
            if isinstance(node, BspNode):
                return {
                    "dir": node.direction.tolist(),
                    "h": node.threshold,
                    "left": conv(node.left),
                    "right": conv(node.right),
                }
            return [int(i) for i in node]

        return conv(self.root)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def build_tree(
    cloud: PointCloud,
    schedule: Optional[DirectionSchedule] = None,
    max_depth: Union[int, str] = FULL,
    **kwargs,
) -> BspTree:
    """Recursive equal-count bisection of ``cloud``; see :func:`leaf_order`."""
    if schedule is None:
        schedule = DirectionSchedule.hv(cloud.d)
    perm, thr, starts, sizes = leaf_order(cloud, schedule, max_depth, **kwargs)
    perm = np.asarray(perm, dtype=np.int64)
    perm.setflags(write=False)
    return BspTree(cloud, schedule, perm, np.asarray(thr), tuple(starts), tuple(sizes))


def code_of_rank(rank: int, n: int, depth: Optional[int] = None) -> BinaryCode:
    """Code of the leaf holding leaf-order position ``rank`` in an ``n``-point tree."""
    bits = []
    start, size = 0, n
    while size > 1 and (depth is None or len(bits) < depth):
        half = (size + 1) // 2
        if rank < start + half:
            bits.append(0)
            size = half
        else:
            bits.append(1)
            start += half
            size -= half
    return tuple(bits)


# -- ternary encodings --------------------------------------------------------


@dataclass(frozen=True, order=False)
class TernaryValue:
    """Exact ``numerator / 3**exponent``."""

    numerator: int
    exponent: int

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.numerator, 3 ** self.exponent)

    def __float__(self):
        return float(self.fraction)

    def __eq__(self, other):
        if isinstance(other, TernaryValue):
            return self.fraction == other.fraction
        return self.fraction == other

    def __hash__(self):
        return hash(self.fraction)

    def __lt__(self, other):
        return self.fraction < _as_fraction(other)

    def __le__(self, other):
        return self.fraction <= _as_fraction(other)

    def __gt__(self, other):
        return self.fraction > _as_fraction(other)

    def __ge__(self, other):
        return self.fraction >= _as_fraction(other)


def _as_fraction(x):
    return x.fraction if isinstance(x, TernaryValue) else Fraction(x)


def ternary_value(code: Sequence[int]) -> TernaryValue:
    """Read ``code`` as base-3 digits after the point: ``sum bits[i] 3^-(i+1)``."""
    num = 0
    for b in code:
        if b not in (0, 1):
            raise ValueError("codes are binary")
        num = 3 * num + b
    return TernaryValue(num, len(code))


def common_prefix(a: Sequence[int], b: Sequence[int]) -> int:
    l = 0
    for x, y in zip(a, b):
        if x != y:
            break
        l += 1
    return l


@dataclass(frozen=True)
class SeparationGap:
    gap: Fraction
    bound: Fraction
    prefix: int


def separation_gap(code_a: Sequence[int], code_b: Sequence[int]) -> SeparationGap:
    """Gap between two codes' ternary values and its guaranteed lower bound.

    For codes that first differ after a common prefix of length ``l`` the
    bound is ``1 / (2 * 3**(l+1))``. Equal codes, and codes where one is a
    prefix of the other, carry no guarantee (bound 0).
    """
    l = common_prefix(code_a, code_b)
    gap = abs(ternary_value(code_a).fraction - ternary_value(code_b).fraction)
    if l == len(code_a) or l == len(code_b):
        bound = Fraction(0)
    else:
        bound = Fraction(1, 2 * 3 ** (l + 1))
    if gap < bound:
        raise AssertionError(f"separation bound violated: {gap} < {bound}")
    return SeparationGap(gap, bound, l)


def full_depth(n: int) -> int:
    """Levels needed to reach singleton leaves: ``ceil(log2 n)``."""
    return 0 if n <= 1 else math.ceil(math.log2(n))
