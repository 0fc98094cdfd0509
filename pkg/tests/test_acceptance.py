"""Acceptance gate: one test per criterion, each at its stated tolerance and time budget.

Every test records a ``PASS``/``FAIL`` line; the lines are printed in the
pytest terminal summary, or directly when run as ``python tests/test_acceptance.py``.
"""

import math
import sys
import time
from contextlib import contextmanager
from fractions import Fraction

import numpy as np
import pytest

from nocollide.bsp import build_tree, code_of_rank, separation_gap, ternary_value
from nocollide.cost import ALL_SPECS, TABLE_SPECS, cost_matrix, map_cost, optimal_assignment
from nocollide.experiments import bench_hv, make_instance, run_table
from nocollide.interp import BarycenterSpec, barycenter, frames, interpolate, no_collision_along_path
from nocollide.measures import (
    PointCloud,
    RigidTransform,
    apply_transform,
    gen_ellipse,
    gen_gaussian,
    gen_grid,
)
from nocollide.transport import TransportMap, compose, dual_pairs, hv_map, hv_map_with_trees, lex_map, restrict, synthesize
from nocollide.verify import check_half_space, check_no_collision

from conftest import brute_force_min, random_cloud

RESULTS = []


@contextmanager
def criterion(label, budget):
    """Run a criterion body, then check the time budget and record the outcome."""
    state = {"detail": ""}
    t0 = time.perf_counter()
    try:
        yield state
    except BaseException as exc:
        elapsed = time.perf_counter() - t0
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        RESULTS.append(f"FAIL  {label}  ({elapsed:.1f}s) {msg[:160]}")
        raise
    elapsed = time.perf_counter() - t0
    if elapsed > budget:
        RESULTS.append(f"FAIL  {label}  ({elapsed:.1f}s > {budget}s budget) {state['detail']}")
        pytest.fail(f"{label}: {elapsed:.1f}s exceeds the {budget}s budget")
    RESULTS.append(f"PASS  {label}  ({elapsed:.1f}s) {state['detail']}")


def mixed_instance(rng, n, k):
    """Instance ``k`` of a rotation through five generator families."""
    kind = k % 5
    if kind == 0:
        return random_cloud(rng, n, kind="uniform"), random_cloud(rng, n, kind="uniform")
    if kind == 1:
        return random_cloud(rng, n, kind="normal"), random_cloud(rng, n, kind="normal")
    if kind == 2:
        g = gen_grid(math.isqrt(n))
        return g, apply_transform(g, RigidTransform(rng.uniform(0, 2 * math.pi), center=(0, 0)))
    if kind == 3:
        e = gen_ellipse(n, 2, 1, exact=True)
        return e, apply_transform(random_cloud(rng, n, kind="normal"), RigidTransform(0.0, scale=(3, 1)))
    return random_cloud(rng, n, kind="lattice"), random_cloud(rng, n, kind="lattice")


# -- 1 ------------------------------------------------------------------------


def test_c1_oracle_lower_bound():
    with criterion("C1 oracle lower bound: HV, LEX >= oracle - 1e-9*scale", 120) as st:
        rng = np.random.default_rng(1)
        checks = 0
        instances = 0
        for n in (16, 64, 256):
            for k in range(70):
                src, tgt = mixed_instance(rng, n, k)
                instances += 1
                hv, lex = hv_map(src, tgt), lex_map(src, tgt)
                for spec in ALL_SPECS:
                    best = map_cost(src, optimal_assignment(src, tgt, spec), tgt, spec)
                    scale = max(1.0, best)
                    for m in (hv, lex):
                        c = map_cost(src, m, tgt, spec)
                        assert c >= best - 1e-9 * scale, f"n={n} k={k} {spec.label}: {c} < {best}"
                        checks += 1
        assert instances >= 200
        st["detail"] = f"{instances} instances, {checks} comparisons"


# -- 2 ------------------------------------------------------------------------


def test_c2_oracle_matches_brute_force():
    with criterion("C2 oracle equals n! brute force (n <= 7)", 60) as st:
        rng = np.random.default_rng(2)
        per_spec = 210
        for spec in ALL_SPECS:
            for k in range(per_spec):
                n = 1 + k % 7
                kind = ("uniform", "normal", "lattice")[k % 3]
                src, tgt = random_cloud(rng, n, kind=kind), random_cloud(rng, n, kind=kind)
                c = cost_matrix(src, tgt, spec)
                sigma = optimal_assignment(src, tgt, spec).sigma
                got = float(c[np.arange(n), sigma].sum())
                best = brute_force_min(c)
                assert got == best or abs(got - best) <= 1e-12 * max(1.0, best), f"{spec.label} n={n}: {got} vs {best}"
        st["detail"] = f"{per_spec} instances per spec x {len(ALL_SPECS)} specs"


# -- 3 ------------------------------------------------------------------------

GRID_BANDS = {"HV": (1.00, 1.10), "LEX": (1.15, 1.60)}


def grid_ratio(side, method, center):
    g = gen_grid(side)
    r = apply_transform(g, RigidTransform(math.pi / 4, center=center))
    best = map_cost(g, optimal_assignment(g, r), r)
    m = hv_map(g, r) if method == "HV" else lex_map(g, r)
    return map_cost(g, m, r) / best


@pytest.mark.parametrize("method", ["HV", "LEX"])
@pytest.mark.parametrize("side", [8, 16])
@pytest.mark.parametrize("center", ["centroid", "origin"])
def test_c3_grid_rotation_band(side, method, center):
    lo, hi = GRID_BANDS[method]
    label = f"C3 grid n={side * side} rotated about {center}: {method} ratio in [{lo:.2f}, {hi:.2f}]"
    with criterion(label, 30) as st:
        ratio = grid_ratio(side, method, None if center == "centroid" else (0.0, 0.0))
        st["detail"] = f"ratio={ratio:.4f}"
        assert lo <= ratio <= hi, f"ratio={ratio:.4f} outside [{lo}, {hi}]"


DIRECTIONAL = ("ellipse-rot", "gauss-rot", "grid-gauss", "gauss-aniso")


@pytest.mark.parametrize("experiment", DIRECTIONAL)
def test_c3_directional(experiment):
    with criterion(f"C3 {experiment}: HV ratio < LEX ratio in every (n, spec) cell", 90) as st:
        rows = run_table(experiment, sizes=(64, 256), seeds=range(10), specs=TABLE_SPECS)
        rows += run_table(experiment, sizes=(1024,), seeds=range(2), specs=TABLE_SPECS)
        cells = {}
        for r in rows:
            cells.setdefault((r["n"], r["cost_family"]), {})[r["method"]] = r["ratio"]
        bad = [(k, v["HV"], v["LEX"]) for k, v in cells.items() if not v["HV"] < v["LEX"]]
        worst = max(v["HV"] / v["LEX"] for v in cells.values())
        st["detail"] = f"{len(cells)} cells, max HV/LEX = {worst:.3f}"
        assert not bad, f"cells with HV >= LEX: {bad}"


# -- 4 ------------------------------------------------------------------------


def test_c4_no_collision_certification():
    with criterion("C4 HV maps certified; collision and half-space checkers agree pair-by-pair", 120) as st:
        rng = np.random.default_rng(4)
        instances = []
        for k in range(120):
            n = int(rng.integers(2, 257))
            kind = ("normal", "uniform", "lattice")[k % 3]
            instances.append((random_cloud(rng, n, kind=kind), random_cloud(rng, n, kind=kind)))
        for src, tgt in instances:
            rep = check_no_collision(src, hv_map(src, tgt), tgt)
            assert rep.passed and not rep.witnesses, f"HV map collides: {rep.witnesses[:3]}"
        colliding = 0
        perms = 0
        for src, tgt in instances:
            m = TransportMap(rng.permutation(src.n))
            a = check_no_collision(src, m, tgt).colliding_pairs
            b = check_half_space(src, m, tgt).failing_pairs
            assert a == b, f"checkers disagree on {sorted(a ^ b)[:5]}"
            colliding += len(a)
            perms += 1
        assert colliding > 0, "no colliding pairs sampled; equivalence check would be vacuous"
        st["detail"] = f"{len(instances)} HV maps, {perms} random permutations, {colliding} colliding pairs matched"


# -- 5 ------------------------------------------------------------------------


def test_c5_structural_properties():
    with criterion("C5 bijection, synthesis, transitivity, 1-D monotone, translation equivariance", 120) as st:
        rng = np.random.default_rng(5)
        # bijection and synthesis at every depth
        for n in (1, 2, 3, 17, 64, 255, 1024, 4096):
            src, tgt = gen_gaussian(n, n), gen_gaussian(n, n + 1)
            tmap, s, t = hv_map_with_trees(src, tgt)
            assert np.array_equal(np.sort(tmap.sigma), np.arange(n))
            assert np.array_equal(np.sort(lex_map(src, tgt).sigma), np.arange(n))
            for k in range(s.depth + 1):
                pairs = dual_pairs(s, t, k)
                assert synthesize(n, pairs, [restrict(tmap, p) for p in pairs]).same_as(tmap), f"n={n} depth={k}"
        # transitivity
        for k in range(60):
            n = int(rng.integers(1, 400))
            a, b, c = (random_cloud(rng, n, kind="normal") for _ in range(3))
            assert hv_map(a, c).same_as(compose([hv_map(a, b), hv_map(b, c)])), f"triple {k}"
        # 1-D monotone reduction
        for k in range(60):
            n = int(rng.integers(1, 400))
            x, y = PointCloud(rng.standard_normal((n, 1))), PointCloud(rng.standard_normal((n, 1)))
            images = hv_map(x, y).images(y)[np.argsort(x.points[:, 0]), 0]
            assert np.array_equal(images, np.sort(y.points[:, 0]))
        # translation equivariance (integer and dyadic shifts are exact)
        for k in range(60):
            n = int(rng.integers(1, 300))
            x = PointCloud(rng.integers(-50, 50, (n, 2)).astype(float) / 8)
            y = PointCloud(rng.integers(-50, 50, (n, 2)).astype(float) / 8)
            shift = rng.integers(-100, 100, 2) / 4
            m = hv_map(x, y)
            assert hv_map(x.translate(shift), y).same_as(m)
            assert hv_map(x, y.translate(shift)).same_as(m)
        st["detail"] = "synthesis to n=4096, 60 transitivity triples, 60 monotone, 60 translation cases"


# -- 6 ------------------------------------------------------------------------


def _leaf_code_ints(n):
    """Per leaf rank: code length and numerator scaled to a common 3**D denominator."""
    codes = [code_of_rank(r, n) for r in range(n)]
    depth = max((len(c) for c in codes), default=0)
    num = np.array([int(ternary_value(c).numerator) * 3 ** (depth - len(c)) for c in codes], dtype=np.int64)
    width = np.array([len(c) for c in codes])
    bits = np.full((n, max(depth, 1)), -1, dtype=np.int8)
    for r, c in enumerate(codes):
        bits[r, :len(c)] = c
    return num, width, bits, depth


def test_c6_encoding_invariants():
    with criterion("C6 ternary values bounded and monotone; separation gap >= 1/(2*3^(l+1))", 60) as st:
        pairs = 0
        half = Fraction(1, 2)
        for n in (2, 3, 5, 16, 100, 257, 513, 1000, 1024):
            tree = build_tree(gen_gaussian(n, n))
            for code in tree.codes():
                prev = Fraction(0)
                for k in range(len(code) + 1):
                    v = ternary_value(code[:k]).fraction
                    assert prev <= v < half
                    prev = v
            num, width, bits, depth = _leaf_code_ints(n)
            # first differing bit; leaves form a prefix-free set so it always exists
            diff = (bits[:, None, :] != bits[None, :, :])
            first = diff.argmax(axis=2)
            gap2 = 2 * np.abs(num[:, None] - num[None, :])
            need = 3 ** (depth - 1 - first.astype(np.int64))
            off = ~np.eye(n, dtype=bool)
            assert diff.any(axis=2)[off].all()
            assert np.all(gap2[off] >= need[off]), f"n={n}"
            pairs += n * (n - 1) // 2
            if n <= 100:
                codes = tree.codes()
                for i in range(n):
                    for j in range(i + 1, n):
                        separation_gap(codes[i], codes[j])
        st["detail"] = f"{pairs} leaf pairs"


# -- 7 ------------------------------------------------------------------------


def test_c7_scaling():
    with criterion("C7 hv_map scaling: time(4n)/time(n) <= 6 over n = 2^12..2^18", 120) as st:
        rows = bench_hv(sizes=[2 ** k for k in (12, 14, 16, 18)], repeats=5)
        ratios = [r["ratio"] for r in rows[1:]]
        st["detail"] = "ratios " + ", ".join(f"{x:.2f}" for x in ratios)
        assert all(x <= 6 for x in ratios), st["detail"]


# -- 8 ------------------------------------------------------------------------


def test_c8_interpolation_and_barycenter():
    with criterion("C8 interpolation endpoints, one-hot barycenters, positive frame separation", 30) as st:
        rng = np.random.default_rng(8)
        shapes = [gen_grid(8), gen_ellipse(64, exact=True), gen_gaussian(64, 0),
                  apply_transform(gen_grid(8), RigidTransform(math.pi / 4))]
        for src in shapes:
            for tgt in shapes:
                m = hv_map(src, tgt)
                assert np.array_equal(interpolate(src, m, tgt, 0.0).points.points, src.points)
                assert np.array_equal(interpolate(src, m, tgt, 1.0).points.points, tgt.points[m.sigma])
        for ref in range(4):
            for k in range(4):
                w = np.zeros(4)
                w[k] = 1.0
                b = barycenter(BarycenterSpec(shapes, w, reference=ref))
                assert sorted(map(tuple, b.points.tolist())) == sorted(map(tuple, shapes[k].points.tolist()))
        certified = 0
        for k in range(30):
            n = int(rng.integers(2, 200))
            kind = ("normal", "lattice")[k % 2]
            src, tgt = random_cloud(rng, n, kind=kind), random_cloud(rng, n, kind=kind)
            rep = no_collision_along_path(src, hv_map(src, tgt), tgt, samples=16)
            if rep.certificate.passed:
                certified += 1
                assert min(rep.min_distances) > 0
        assert certified == 30
        st["detail"] = f"16 endpoint pairs, 16 one-hot barycenters, {certified} certified paths"


if __name__ == "__main__":
    code = pytest.main([__file__, "-q", "-p", "no:cacheprovider"])
    sys.exit(code)
