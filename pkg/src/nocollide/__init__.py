"""No-collision transport maps between equal-size point clouds via median-split trees."""

from .bsp import BspTree, DirectionSchedule, build_tree, code_of_rank, separation_gap, ternary_value
from .cost import CostSpec, OracleCapExceeded, cost_ratio, map_cost, optimal_assignment
from .interp import BarycenterSpec, barycenter, frames, interpolate, no_collision_along_path
from .measures import (
    DimensionError,
    PointCloud,
    RigidTransform,
    apply_transform,
    gen_ellipse,
    gen_gaussian,
    gen_grid,
    read_cloud,
    write_cloud,
)
from .transport import MapStructureError, Method, TransportMap, compose, hv_map, lex_map, read_map, write_map
from .verify import check_half_space, check_no_collision

__version__ = "0.1.0"

__all__ = [
    "BarycenterSpec", "BspTree", "CostSpec", "DimensionError", "DirectionSchedule",
    "MapStructureError", "Method", "OracleCapExceeded", "PointCloud", "RigidTransform",
    "TransportMap", "apply_transform", "barycenter", "build_tree", "check_half_space",
    "check_no_collision", "code_of_rank", "compose", "cost_ratio", "frames", "gen_ellipse",
    "gen_gaussian", "gen_grid", "hv_map", "interpolate", "lex_map", "map_cost",
    "no_collision_along_path", "optimal_assignment", "read_cloud", "read_map",
    "separation_gap", "ternary_value", "write_cloud", "write_map",
]
