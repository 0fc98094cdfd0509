import itertools
import sys
import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from nocollide.measures import PointCloud

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


_PERMS = {}


def all_permutations(n):
    """Every permutation of range(n) as an (n!, n) int array."""
    if n not in _PERMS:
        _PERMS[n] = np.array(list(itertools.permutations(range(n))), dtype=np.int64).reshape(-1, n)
    return _PERMS[n]


def brute_force_min(c):
    """Minimum assignment sum over all n! permutations of a square matrix."""
    n = c.shape[0]
    perms = all_permutations(n)
    sums = c[np.arange(n), perms].sum(axis=1)
    return float(sums.min())


def brute_force_min_mean(source, target, spec):
    from nocollide.cost import cost_matrix

    return brute_force_min(cost_matrix(source, target, spec)) / source.n


def random_cloud(rng, n, d=2, kind="uniform"):
    if kind == "uniform":
        return PointCloud(rng.random((n, d)))
    if kind == "normal":
        return PointCloud(rng.standard_normal((n, d)))
    if kind == "lattice":
        # small integer lattice: many collinear pairs, no duplicates
        side = max(2, math.isqrt(4 * n) + 1)
        cells = rng.choice(side ** d, size=n, replace=False)
        return PointCloud(np.column_stack(np.unravel_index(cells, (side,) * d)).astype(float))
    raise ValueError(kind)


def scale_of(source, target):
    return max(1.0, float(np.abs(source.points).max()), float(np.abs(target.points).max()))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in lines:
        terminalreporter.write_line(line)
