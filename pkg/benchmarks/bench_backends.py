"""Compare the numba kernels against the pure-numpy fallbacks.

Usage: python benchmarks/bench_backends.py [--quick]

Times tree construction, the O(n^2) collision scan, and the assignment
oracle under both backends and checks the outputs agree.
"""

import argparse
import time

import numpy as np

from nocollide import _backend
from nocollide.bsp import DirectionSchedule, leaf_order
from nocollide.cost import CostSpec, cost_matrix, solve_assignment
from nocollide.measures import gen_gaussian
from nocollide.transport import hv_map
from nocollide.verify import check_no_collision


def best_of(fn, repeats):
    best, out = float("inf"), None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--quick", action="store_true", help="smaller sizes")
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()
    if not _backend.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    hv = DirectionSchedule.hv(2)
    tree_sizes = (2 ** 12, 2 ** 14) if args.quick else (2 ** 12, 2 ** 14, 2 ** 16, 2 ** 18)
    scan_sizes = (256, 1024) if args.quick else (256, 1024, 2048)
    oracle_sizes = (64, 256) if args.quick else (64, 256, 512)

    # compile once so timings exclude JIT
    warm = gen_gaussian(64, 0)
    leaf_order(warm, hv, backend="numba")
    check_no_collision(warm, hv_map(warm, gen_gaussian(64, 1)), gen_gaussian(64, 1), backend="numba")
    solve_assignment(cost_matrix(warm, warm, CostSpec()), backend="numba")

    print(f"{'kernel':<12}{'n':>8}{'numba s':>12}{'numpy s':>12}{'speedup':>10}  agree")
    for n in tree_sizes:
        cloud = gen_gaussian(n, 0)
        ta, a = best_of(lambda: leaf_order(cloud, hv, backend="numba")[0], args.repeats)
        tb, b = best_of(lambda: leaf_order(cloud, hv, backend="numpy")[0], args.repeats)
        print(f"{'tree':<12}{n:>8}{ta:>12.5f}{tb:>12.5f}{tb / ta:>10.1f}  {np.array_equal(a, b)}")
    for n in scan_sizes:
        src, tgt = gen_gaussian(n, 0), gen_gaussian(n, 1)
        perm = hv_map(src, tgt)
        ta, a = best_of(lambda: check_no_collision(src, perm, tgt, backend="numba"), 1)
        tb, b = best_of(lambda: check_no_collision(src, perm, tgt, backend="numpy"), 1)
        print(f"{'collisions':<12}{n:>8}{ta:>12.5f}{tb:>12.5f}{tb / ta:>10.1f}  {a.passed == b.passed}")
    for n in oracle_sizes:
        c = cost_matrix(gen_gaussian(n, 0), gen_gaussian(n, 1), CostSpec())
        ta, a = best_of(lambda: solve_assignment(c, backend="numba"), 1)
        tb, b = best_of(lambda: solve_assignment(c, backend="numpy"), 1)
        same = np.isclose(c[np.arange(n), a].sum(), c[np.arange(n), b].sum(), rtol=1e-12)
        print(f"{'assignment':<12}{n:>8}{ta:>12.5f}{tb:>12.5f}{tb / ta:>10.1f}  {same}")


if __name__ == "__main__":
    main()
