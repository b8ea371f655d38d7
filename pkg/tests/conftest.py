import sys
import itertools

import numpy as np
import pytest
from hypothesis import strategies as st

from aoi_patrol.model import Instance, matrix_from_coords
from aoi_patrol.scenarios import counterexample_instance


def euclidean_instance(rng, n, side=100.0, speed=1.0):
    pts = rng.random((n + 1, 2)) * side
    return matrix_from_coords(pts, speed)


def metric_instance(rng, n, low=1.0, high=10.0):
    """Random symmetric weights closed under shortest paths (so metric)."""
    w = rng.uniform(low, high, size=(n + 1, n + 1))
    w = np.triu(w, 1)
    w = w + w.T
    for k in range(n + 1):
        w = np.minimum(w, w[:, k : k + 1] + w[k : k + 1, :])
    return Instance(w)


def random_instances(seed, count, n_low, n_high):
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        n = int(rng.integers(n_low, n_high + 1))
        make = euclidean_instance if i % 2 == 0 else metric_instance
        out.append(make(rng, n))
    return out


@st.composite
def instances(draw, min_n=1, max_n=7):
    n = draw(st.integers(min_n, max_n))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    if draw(st.booleans()):
        return euclidean_instance(rng, n)
    return metric_instance(rng, n)


def all_perfect_matchings(verts):
    if not verts:
        yield []
        return
    a, rest = verts[0], verts[1:]
    for i, b in enumerate(rest):
        for m in all_perfect_matchings(rest[:i] + rest[i + 1 :]):
            yield [(a, b)] + m


def brute_tsp(instance):
    t = instance.travel
    n = instance.n_data
    best = np.inf
    for p in itertools.permutations(range(1, n + 1)):
        seq = (0, *p, 0)
        best = min(best, sum(t[seq[i], seq[i + 1]] for i in range(n + 1)))
    return best


@pytest.fixture
def detour():
    return counterexample_instance(100.5)


@pytest.fixture
def unit_triangle():
    return Instance(np.ones((3, 3)) - np.eye(3))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for num in sorted(results):
            terminalreporter.write_line(results[num])
