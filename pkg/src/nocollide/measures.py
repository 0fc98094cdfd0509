"""Point clouds (uniform empirical measures), generators, and file I/O."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np


class DimensionError(ValueError):
    """Raised when point dimensions are inconsistent."""


@dataclass(frozen=True, eq=False)
class PointCloud:
    """An ordered set of ``n`` points in ``R^d``, each with mass ``1/n``.

    The coordinate array is copied to float64 and made read-only, so a
    cloud can be shared freely between threads and maps.
    """

    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64, copy=True)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1) if pts.size else pts.reshape(0, 1)
        if pts.ndim != 2:
            raise DimensionError(f"points must be a 2-D array, got shape {pts.shape}")
        if pts.shape[0] < 1:
            raise ValueError("a point cloud needs at least one point")
        if pts.shape[1] < 1:
            raise DimensionError("points need at least one coordinate")
        if not np.all(np.isfinite(pts)):
            raise ValueError("point coordinates must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.n

    def centroid(self) -> np.ndarray:
        return self.points.mean(axis=0)

    def translate(self, shift) -> "PointCloud":
        return PointCloud(self.points + np.asarray(shift, dtype=np.float64))

    def take(self, indices) -> "PointCloud":
        return PointCloud(self.points[np.asarray(indices, dtype=np.int64)])

    def same_as(self, other: "PointCloud") -> bool:
        """Exact equality of coordinates and order."""
        return self.points.shape == other.points.shape and bool(
            np.array_equal(self.points, other.points)
        )

    def has_duplicates(self) -> bool:
        return np.unique(self.points, axis=0).shape[0] != self.n


def check_compatible(source: PointCloud, target: PointCloud):
    if source.n != target.n:
        raise ValueError(f"size mismatch: source has {source.n} points, target {target.n}")
    if source.d != target.d:
        raise DimensionError(f"dimension mismatch: source d={source.d}, target d={target.d}")


@dataclass(frozen=True)
class RigidTransform:
    """Scale-then-rotate about a center.

    ``center=None`` means the centroid of whichever cloud the transform is
    applied to.
    """

    angle: float = 0.0
    center: Optional[Sequence[float]] = None
    scale: Optional[Sequence[float]] = None

    def __post_init__(self):
        if self.scale is not None:
            s = tuple(float(v) for v in self.scale)
            if any(not (v > 0 and math.isfinite(v)) for v in s):
                raise ValueError("scale factors must be strictly positive")
            object.__setattr__(self, "scale", s)
        if self.center is not None:
            object.__setattr__(self, "center", tuple(float(v) for v in self.center))


def rotation_matrix(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


def apply_transform(cloud: PointCloud, t: RigidTransform) -> PointCloud:
    """Translate to ``t.center``, scale per axis, rotate, translate back."""
    d = cloud.d
    center = cloud.centroid() if t.center is None else np.asarray(t.center, dtype=np.float64)
    if center.shape != (d,):
        raise DimensionError(f"transform center has dimension {center.size}, cloud has {d}")
    scale = np.ones(d) if t.scale is None else np.asarray(t.scale, dtype=np.float64)
    if scale.shape != (d,):
        raise DimensionError(f"transform has {scale.size} scale factors, cloud has d={d}")
    rel = (cloud.points - center) * scale
    if t.angle != 0.0:
        if d != 2:
            raise DimensionError("rotation is only defined for d = 2")
        rel = rel @ rotation_matrix(t.angle).T
    return PointCloud(rel + center)


# -- generators ---------------------------------------------------------------


def gen_grid(side: int) -> PointCloud:
    """``side**2`` cell centres of a regular grid on the unit square."""
    if side < 1:
        raise ValueError("side must be >= 1")
    c = (np.arange(side) + 0.5) / side
    xs, ys = np.meshgrid(c, c, indexing="ij")
    return PointCloud(np.column_stack([xs.ravel(), ys.ravel()]))


def gen_ellipse(n: int, a: float = 2.0, b: float = 1.0, exact: bool = False) -> PointCloud:
    """Quasi-uniform filling of the ellipse ``x²/a² + y²/b² <= 1``.

    Points are the nodes ``(i*h, j*h)`` of a square lattice through the
    origin. The pitch ``h`` is the largest one for which at least ``n``
    nodes fall inside the ellipse, so the result has between ``n`` and
    ``n + ceil(sqrt(n))`` points. Boundary ties that would overshoot that
    window are trimmed (outermost first). With ``exact=True`` the cloud is
    trimmed to exactly ``n`` points. Use ``len()`` on the result for the
    actual count.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not (a > 0 and b > 0):
        raise ValueError("semi-axes must be positive")
    if n == 1:
        return PointCloud(np.zeros((1, 2)))

    h0 = math.sqrt(math.pi * a * b / n)
    reach = int(math.ceil(max(a, b) / h0 * 1.5)) + 2
    while True:
        i = np.arange(-reach, reach + 1, dtype=np.float64)
        ii, jj = np.meshgrid(i, i, indexing="ij")
        ii, jj = ii.ravel(), jj.ravel()
        r2 = (ii / a) ** 2 + (jj / b) ** 2
        # node (i, j) lies inside iff h <= 1/sqrt(r2)
        with np.errstate(divide="ignore"):
            crit = np.where(r2 > 0, 1.0 / np.sqrt(r2), np.inf)
        order = np.argsort(-crit, kind="stable")
        h_star = crit[order[n - 1]]
        # the enumerated box must contain every node that survives at h_star
        if reach * h_star > 1.01 * max(a, b):
            break
        reach *= 2

    h = h_star * (1.0 - 1e-12)
    keep = crit >= h_star * (1.0 - 1e-9)
    pts = np.column_stack([ii[keep] * h, jj[keep] * h])
    rr = r2[keep]

    limit = n if exact else n + math.isqrt(n - 1) + 1
    if len(pts) > limit:
        idx = np.lexsort((np.arange(len(pts)), rr))[:limit]
        idx.sort()
        pts = pts[idx]
    return PointCloud(pts)


def gen_gaussian(n: int, seed: int, d: int = 2) -> PointCloud:
    """``n`` i.i.d. standard normal samples in ``R^d``.

    Uses ``numpy.random.Generator(PCG64(seed)).standard_normal``; the output
    is bit-reproducible for fixed ``(n, seed, d)`` under a given numpy
    release.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if d < 1:
        raise ValueError("d must be >= 1")
    rng = np.random.Generator(np.random.PCG64(seed))
    return PointCloud(rng.standard_normal((n, d)))


# -- file formats ---------------------------------------------------------------


def read_cloud(path, header: bool = False) -> PointCloud:
    """Read a cloud from CSV (one point per row) or JSON (``{"d", "points"}``)."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        data = json.loads(path.read_text())
        pts = np.asarray(data["points"], dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != int(data["d"]):
            raise DimensionError(f"{path}: points do not match declared d={data['d']}")
        return PointCloud(pts)
    pts = np.loadtxt(path, delimiter=",", skiprows=1 if header else 0, dtype=np.float64, ndmin=2)
    return PointCloud(pts)


def write_cloud(cloud: PointCloud, path, fmt: Optional[str] = None):
    """Write ``cloud`` as CSV or JSON; floats use ``repr`` so reads are exact."""
    path = Path(path)
    fmt = fmt or ("json" if path.suffix.lower() == ".json" else "csv")
    if fmt == "json":
        path.write_text(json.dumps({"d": cloud.d, "points": cloud.points.tolist()}))
    elif fmt == "csv":
        lines = (",".join(repr(float(v)) for v in row) for row in cloud.points)
        path.write_text("\n".join(lines) + "\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")
