"""Displacement interpolation along a map, and reference-anchored barycenters."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .bsp import DirectionSchedule
from .measures import PointCloud, check_compatible, write_cloud
from .transport import TransportMap, hv_map
from .verify import DEFAULT_ATOL, CollisionReport, check_no_collision


@dataclass(frozen=True)
class InterpolationFrame:
    lam: float
    points: PointCloud


def interpolate(source: PointCloud, tmap: TransportMap, target: PointCloud, lam: float) -> InterpolationFrame:
    """Move point ``i`` to ``(1 - lam) x_i + lam y_sigma(i)``."""
    check_compatible(source, target)
    lam = float(lam)
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    if lam == 0.0:
        pts = source.points
    elif lam == 1.0:
        pts = tmap.images(target)
    else:
        pts = (1.0 - lam) * source.points + lam * tmap.images(target)
    return InterpolationFrame(lam, PointCloud(pts))


def frames(source, tmap, target, count: int) -> List[InterpolationFrame]:
    """``count >= 2`` frames at ``lam = j / (count - 1)``."""
    if count < 2:
        raise ValueError("need at least two frames")
    return [interpolate(source, tmap, target, j / (count - 1)) for j in range(count)]


@dataclass(frozen=True, eq=False)
class BarycenterSpec:
    shapes: Sequence[PointCloud]
    weights: Sequence[float]
    reference: int = 0

    def __post_init__(self):
        if not self.shapes:
            raise ValueError("need at least one shape")
        w = np.asarray(self.weights, dtype=np.float64)
        if w.shape != (len(self.shapes),):
            raise ValueError("one weight per shape is required")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be non-negative and sum to 1")
        ref = self.shapes[self.reference]
        for s in self.shapes:
            check_compatible(ref, s)
        object.__setattr__(self, "weights", tuple(w.tolist()))


def barycenter_maps(spec: BarycenterSpec, schedule: Optional[DirectionSchedule] = None) -> List[TransportMap]:
    ref = spec.shapes[spec.reference]
    return [
        TransportMap.identity(ref.n) if k == spec.reference else hv_map(ref, shape, schedule)
        for k, shape in enumerate(spec.shapes)
    ]


def barycenter(spec: BarycenterSpec, schedule: Optional[DirectionSchedule] = None, maps=None) -> PointCloud:
    """Point ``i`` is ``sum_k w_k T_k(x_i)`` with HV maps ``T_k`` from the reference shape."""
    if maps is None:
        maps = barycenter_maps(spec, schedule)
    acc = np.zeros_like(spec.shapes[spec.reference].points)
    for w, shape, m in zip(spec.weights, spec.shapes, maps):
        if w:
            acc += w * m.images(shape)
    return PointCloud(acc)


def min_pairwise_distance(cloud: PointCloud) -> float:
    if cloud.n < 2:
        return float("inf")
    dist, _ = cKDTree(cloud.points).query(cloud.points, k=2)
    return float(dist[:, 1].min())


@dataclass
class PathReport:
    passed: bool
    certificate: CollisionReport
    lambdas: List[float]
    min_distances: List[float]


def no_collision_along_path(source, tmap, target, samples: int = 16, atol: float = DEFAULT_ATOL) -> PathReport:
    """Exact collision certificate plus a sampled check at ``lam = j / samples``.

    The sampled frames must all have pairwise-distinct points (endpoints
    included); the exact certificate comes from :func:`check_no_collision`.
    """
    if samples < 2:
        raise ValueError("samples must be >= 2")
    cert = check_no_collision(source, tmap, target, atol=atol)
    lams = [j / samples for j in range(samples + 1)]
    dists = [min_pairwise_distance(interpolate(source, tmap, target, l).points) for l in lams]
    return PathReport(cert.passed and min(dists) > 0.0, cert, lams, dists)


def write_frames(frame_list: Sequence[InterpolationFrame], out_dir, fmt: str = "csv") -> List[Path]:
    """One CSV per frame, or a single ``frames.json`` animation file."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        path = out_dir / "frames.json"
        path.write_text(json.dumps({
            "frames": [{"lambda": f.lam, "points": f.points.points.tolist()} for f in frame_list]
        }))
        return [path]
    paths = []
    width = max(3, len(str(len(frame_list) - 1)))
    for j, f in enumerate(frame_list):
        path = out_dir / f"frame_{j:0{width}d}.csv"
        write_cloud(f.points, path, "csv")
        paths.append(path)
    return paths
