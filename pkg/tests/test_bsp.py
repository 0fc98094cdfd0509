import itertools
import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nocollide.bsp import (
    BspNode,
    DirectionSchedule,
    build_tree,
    code_of_rank,
    common_prefix,
    full_depth,
    separation_gap,
    split_median,
    ternary_value,
)
from nocollide.measures import DimensionError, PointCloud, gen_gaussian, gen_grid

E1 = np.array([1.0, 0.0])


def line(values):
    return PointCloud(np.column_stack([values, np.zeros(len(values))]))


def key_sorted(cloud, idx, v):
    """Reference order: full sort on (projection, coordinates, index)."""
    return sorted(idx, key=lambda i: (float(cloud.points[i] @ v), *cloud.points[i].tolist(), i))


# -- schedules ----------------------------------------------------------------


def test_hv_schedule_cycles_axes():
    s = DirectionSchedule.hv(3)
    assert [tuple(s.direction(k)) for k in (1, 2, 3, 4)] == [(1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 0, 0)]
    assert np.array_equal(s.axis_indices(), [0, 1, 2])


def test_explicit_schedule_is_normalized():
    s = DirectionSchedule([[3.0, 4.0], [1.0, 1.0]])
    assert np.allclose(np.linalg.norm(s.directions, axis=1), 1.0, atol=1e-12)
    assert np.array_equal(s.axis_indices(), [-1, -1])


def test_schedule_parse_and_errors():
    assert DirectionSchedule.parse("axes:1,0", 2).fingerprint == DirectionSchedule([[0, 1], [1, 0]], "axes").fingerprint
    assert DirectionSchedule.parse("hv", 2).fingerprint == DirectionSchedule.hv(2).fingerprint
    for bad in ("diag", "axes:2"):
        with pytest.raises(ValueError):
            DirectionSchedule.parse(bad, 2)
    with pytest.raises(ValueError):
        DirectionSchedule([[0.0, 0.0]])
    with pytest.raises(ValueError):
        DirectionSchedule.hv(2).direction(0)


def test_schedule_dimension_must_match():
    with pytest.raises(DimensionError):
        build_tree(gen_gaussian(8, 0, d=3), DirectionSchedule.hv(2))


# -- split_median -------------------------------------------------------------


def test_split_distinct_values():
    left, right, h = split_median([0, 1, 2, 3], line([1, 2, 3, 4]), E1)
    assert sorted(left) == [0, 1] and sorted(right) == [2, 3] and h == 2.5


def test_split_single_point():
    left, right, h = split_median([0], line([5]), E1)
    assert list(left) == [0] and len(right) == 0 and np.isnan(h)


def test_split_with_ties_matches_full_sort():
    cloud = line([1, 1, 1, 2])
    left, right, h = split_median([0, 1, 2, 3], cloud, E1)
    ref = key_sorted(cloud, [0, 1, 2, 3], E1)
    assert list(left) == ref[:2] and list(right) == ref[2:]
    assert h == 1.0


def test_split_rejects_empty():
    with pytest.raises(ValueError):
        split_median([], line([1.0]), E1)


@given(st.lists(st.integers(-3, 3), min_size=2, max_size=40), st.integers(0, 100))
def test_split_agrees_with_sorting_oracle(values, shift):
    rng = np.random.default_rng(shift)
    cloud = PointCloud(np.column_stack([values, rng.integers(-2, 3, len(values))]).astype(float))
    idx = list(rng.permutation(len(values)))
    left, right, h = split_median(idx, cloud, E1)
    ref = key_sorted(cloud, idx, E1)
    m = len(values)
    assert len(left) == (m + 1) // 2
    assert sorted(left) == sorted(ref[:(m + 1) // 2])
    proj = cloud.points[:, 0]
    assert proj[left].max() <= h <= proj[right].min()
    assert h == 0.5 * (proj[left].max() + proj[right].min())


# -- trees --------------------------------------------------------------------


def test_single_point_tree():
    t = build_tree(PointCloud([[1.0, 2.0]]))
    assert t.depth == 0
    assert [list(p) for p in t.leaf_order] == [[0]]
    assert t.encode(0) == ()


def test_grid2_leaf_order_and_codes():
    g = gen_grid(2)
    t = build_tree(g)
    pts = [tuple(g.points[i]) for i in t.order]
    assert pts == [(0.25, 0.25), (0.25, 0.75), (0.75, 0.25), (0.75, 0.75)]
    assert t.encode(int(np.flatnonzero((g.points == 0.25).all(axis=1))[0])) == (0, 0)
    root = t.root
    assert isinstance(root, BspNode) and root.threshold == 0.5
    assert root.left.threshold == 0.5 and root.right.threshold == 0.5


@pytest.mark.parametrize("N", [1, 2, 3, 4])
def test_power_of_four_grid_reaches_singletons_at_2N(N):
    t = build_tree(gen_grid(2 ** N))
    assert t.depth == 2 * N
    assert all(len(leaf) == 1 for leaf in t.leaf_order)


def _check_node(cloud, node, payload):
    """Recursively check counts and the threshold against the payload indices."""
    if not isinstance(node, BspNode):
        return np.asarray(node).tolist()
    left = _check_node(cloud, node.left, None)
    right = _check_node(cloud, node.right, None)
    m = len(left) + len(right)
    assert len(left) == (m + 1) // 2
    pl = cloud.points[left] @ node.direction
    pr = cloud.points[right] @ node.direction
    assert pl.max() <= node.threshold <= pr.min()
    if pl.max() < pr.min():
        assert node.threshold < pr.min()
    return left + right


@given(st.integers(1, 200), st.integers(0, 10 ** 6), st.sampled_from(["normal", "lattice"]))
def test_tree_invariants(n, seed, kind):
    rng = np.random.default_rng(seed)
    pts = rng.standard_normal((n, 2)) if kind == "normal" else rng.integers(0, 4, (n, 2)).astype(float)
    cloud = PointCloud(pts)
    t = build_tree(cloud)
    assert sorted(t.order.tolist()) == list(range(n))
    assert t.depth == full_depth(n)
    _check_node(cloud, t.root, None)
    codes = t.codes()
    assert len(set(codes)) == n


def test_node_directions_follow_schedule():
    sched = DirectionSchedule([[1.0, 1.0], [0.0, 1.0], [1.0, -2.0]])
    t = build_tree(gen_gaussian(64, 5), sched)

    def walk(node):
        if isinstance(node, BspNode):
            assert np.array_equal(node.direction, sched.direction(node.depth))
            walk(node.left)
            walk(node.right)

    walk(t.root)
    _check_node(t.cloud, t.root, None)


@pytest.mark.parametrize("n", [7, 64, 100])
def test_codes_are_prefix_consistent_across_depths(n):
    cloud = gen_gaussian(n, 11)
    full = build_tree(cloud)
    for k in range(full.depth + 1):
        part = build_tree(cloud, max_depth=k)
        assert part.depth == min(k, full.depth)
        for code, cell in zip(part.cell_codes(k), part.cells(k)):
            for i in cell:
                assert full.encode(int(i))[:len(code)] == code
        assert [sorted(c.tolist()) for c in part.cells(k)] == [sorted(c.tolist()) for c in full.cells(k)]


@given(st.integers(1, 300))
def test_code_of_rank_matches_tree(n):
    t = build_tree(gen_gaussian(n, n))
    for i in range(n):
        assert t.encode(i) == code_of_rank(int(t.rank[i]), n)


def test_tree_json_shape():
    t = build_tree(gen_grid(2))
    d = json.loads(t.to_json())
    assert d["dir"] == [1.0, 0.0] and d["h"] == 0.5
    assert d["left"]["dir"] == [0.0, 1.0] and d["left"]["left"] == [0]


def test_encode_rejects_bad_index():
    with pytest.raises(IndexError):
        build_tree(gen_grid(2)).encode(4)


# -- ternary encodings ----------------------------------------------------------


def test_ternary_values():
    assert ternary_value(()) == 0
    assert ternary_value((1,)) == Fraction(1, 3)
    assert ternary_value((1, 1)) == Fraction(4, 9)
    for k in range(1, 12):
        assert ternary_value((1,) * k) == (1 - Fraction(1, 3 ** k)) / 2
    with pytest.raises(ValueError):
        ternary_value((2,))


@given(st.lists(st.integers(0, 1), max_size=30), st.integers(0, 1))
def test_ternary_bounded_and_monotone(code, bit):
    v = ternary_value(code)
    assert 0 <= v < Fraction(1, 2)
    assert ternary_value(code + [bit]) >= v


def test_separation_examples():
    assert separation_gap((0, 1), (0, 1)).gap == 0
    g = separation_gap((1, 0), (1, 1))
    assert g.gap == Fraction(1, 9) and g.bound == Fraction(1, 18) and g.prefix == 1
    g0 = separation_gap((0,), (1,))
    assert g0.gap == Fraction(1, 3) and g0.bound == Fraction(1, 6)


def test_separation_exhaustive_short_codes():
    codes = [c for k in range(7) for c in itertools.product((0, 1), repeat=k)]
    for a in codes:
        for b in codes:
            separation_gap(a, b)  # raises on violation


def test_separation_exhaustive_length_8_integer():
    # gap * 2 * 3^8 and bound * 2 * 3^8 as integers for all equal-length pairs
    k = 8
    codes = np.array(list(itertools.product((0, 1), repeat=k)), dtype=np.int64)
    vals = codes @ (3 ** np.arange(k - 1, -1, -1))
    diff = codes[:, None, :] != codes[None, :, :]
    first = np.where(diff.any(axis=2), diff.argmax(axis=2), k)
    gap = 2 * np.abs(vals[:, None] - vals[None, :])
    bound = np.where(first < k, 3 ** (k - 1 - np.minimum(first, k - 1)), 0)
    assert np.all(gap >= bound)


def test_common_prefix():
    assert common_prefix((0, 1, 1), (0, 1, 0)) == 2
    assert common_prefix((), (1,)) == 0
