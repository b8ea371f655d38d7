import itertools
from collections import Counter

import numpy as np
import pytest

from aoi_patrol.exact import brute_force, dp_optimal
from aoi_patrol.model import InstanceError, Route, metrics, validate
from aoi_patrol.scenarios import (
    ScenarioConfig,
    cell_of,
    counterexample_instance,
    gen_batch,
    gen_scenario,
    ham_path_reduction,
    has_hamiltonian_path,
    read_edge_list,
    tightness_instance,
)


def _cells(sc):
    return Counter(cell_of(sc.config, xy) for xy in sc.instance.coords[1:])


def test_grid_8():
    for seed in range(20):
        sc = gen_scenario(ScenarioConfig(8, "grid", seed))
        c = sc.instance.coords
        assert sc.instance.n_data == 8
        assert np.all((c >= 0) & (c <= 1000))
        assert tuple(c[0]) == (500, 500)
        assert max(_cells(sc).values()) == 1


def test_grid_20_balanced():
    sc = gen_scenario(ScenarioConfig(20, "grid", 3))
    counts = _cells(sc)
    assert len(counts) == 16
    assert set(counts.values()) <= {1, 2}


def test_cluster_cells():
    for seed in range(10):
        assert len(_cells(gen_scenario(ScenarioConfig(20, "cluster", seed)))) == 4
        assert len(_cells(gen_scenario(ScenarioConfig(8, "cluster", seed)))) == 1
        assert gen_scenario(ScenarioConfig(20, "cluster", seed)).config.area_m == 8000


def test_outlier_split():
    for n in (8, 20):
        for seed in range(10):
            counts = sorted(_cells(gen_scenario(ScenarioConfig(n, "outlier", seed))).values())
            assert counts == [1, n - 1]


def test_seed_determinism():
    a = gen_scenario(ScenarioConfig(20, "outlier", 9)).to_json()
    b = gen_scenario(ScenarioConfig(20, "outlier", 9)).to_json()
    assert a == b
    assert a != gen_scenario(ScenarioConfig(20, "outlier", 10)).to_json()


def test_unknown_distribution():
    with pytest.raises(ValueError):
        ScenarioConfig(8, "ring", 0)


def test_generated_instances_validate():
    for dist in ("grid", "cluster", "outlier"):
        for sc in gen_batch(8, dist, 10, 100) + gen_batch(20, dist, 5, 100):
            assert validate(sc.instance).ok


def test_reduction_examples():
    path = ham_path_reduction(3, [(0, 1), (1, 2)])
    assert validate(path).ok
    assert metrics(path, dp_optimal(path)).mai == 7
    empty = ham_path_reduction(3, [])
    # any lap uses at least one 2-step between data nodes
    assert metrics(empty, brute_force(empty)).mai > 7
    k4 = ham_path_reduction(4, list(itertools.combinations(range(4), 2)))
    assert metrics(k4, dp_optimal(k4)).mai == 9
    assert metrics(k4, Route([4, 2, 3, 1])).mai == 9


def test_reduction_equivalence_random():
    rng = np.random.default_rng(5)
    for _ in range(40):
        n = int(rng.integers(2, 7))
        p = rng.uniform(0.2, 0.8)
        edges = [e for e in itertools.combinations(range(n), 2) if rng.random() < p]
        inst = ham_path_reduction(n, edges)
        yes = metrics(inst, dp_optimal(inst)).mai <= 2 * n + 1
        assert yes == has_hamiltonian_path(n, edges)


def test_read_edge_list(tmp_path):
    p = tmp_path / "g.txt"
    p.write_text("0 1\n1 2\n# comment\n\n")
    assert read_edge_list(p) == (3, [(0, 1), (1, 2)])
    p.write_text("5\n0 1\n")
    assert read_edge_list(p) == (5, [(0, 1)])
    p.write_text("")
    with pytest.raises(ValueError):
        read_edge_list(p)
    p.write_text("0 1 2\n")
    with pytest.raises(ValueError):
        read_edge_list(p)


def test_tightness_instance_weights():
    eps = 0.01
    t = tightness_instance(5, eps).travel
    for i, j in [(0, 1), (0, 2), (1, 3), (2, 4), (3, 5)]:
        assert t[i, j] == 1
    for i, j in [(0, 3), (1, 2), (0, 4), (1, 5)]:
        assert t[i, j] == pytest.approx(1 + eps)
    # shortest path completions, e.g. v4 -> v5 through v0 and v1
    assert t[4, 5] == pytest.approx(3 + 2 * eps)
    assert validate(tightness_instance(11, 1e-6)).ok


def test_tightness_rejects():
    with pytest.raises(ValueError):
        tightness_instance(6, 0.1)
    with pytest.raises(ValueError):
        tightness_instance(3, 0.1)
    with pytest.raises(ValueError):
        tightness_instance(5, 0)


def test_counterexample():
    inst = counterexample_instance(100.5)
    assert validate(inst).ok
    assert metrics(inst, Route([1, 3, 2])).round_trip == 202
    assert metrics(inst, Route([1, 3, 2])).mai == 403
    assert metrics(inst, Route([3, 1, 2])).mai == 304.5
    for bad in (100, 101, 99.0, 101.5):
        with pytest.raises(InstanceError):
            counterexample_instance(bad)
