import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aoi_patrol.model import (
    Instance,
    InstanceError,
    Route,
    RouteError,
    aoi,
    matrix_from_coords,
    metrics,
    round_trip,
    segment_time,
    validate,
)

from .conftest import instances


def test_matrix_from_coords_examples():
    assert matrix_from_coords([(0, 0), (20, 0)], 20).travel[0, 1] == 1.0
    assert matrix_from_coords([(0, 0), (3, 4)], 1).travel[0, 1] == 5.0
    inst = matrix_from_coords([(0, 0), (20, 0), (0, 20)], 20)
    assert inst.travel[1, 2] == pytest.approx(math.sqrt(2), abs=1e-12)


@pytest.mark.parametrize("coords,speed", [([(0, 0), (1, 1)], 0), ([(0, 0), (1, 1)], -2), ([(0, 0)], 1)])
def test_matrix_from_coords_rejects(coords, speed):
    with pytest.raises(InstanceError):
        matrix_from_coords(coords, speed)


def test_validate_clean_on_coords():
    rng = np.random.default_rng(3)
    assert validate(matrix_from_coords(rng.random((9, 2)) * 1000, 20)).ok


def test_validate_reports_triangle_violation():
    t = np.array([[0, 1, 3], [1, 0, 1], [3, 1, 0]], dtype=float)
    report = validate(Instance(t))
    assert [(v.kind, v.nodes) for v in report] == [("triangle", (0, 2, 1))]
    assert report.violations[0].magnitude == pytest.approx(1.0)


def test_validate_reports_asymmetry_negative_and_diagonal():
    t = np.array([[0.5, 1, 1], [2, 0, 1], [1, -1, 0]], dtype=float)
    kinds = {v.kind for v in validate(Instance(t))}
    assert {"diagonal", "asymmetry", "negative"} <= kinds


def test_validate_counterexample_clean(detour):
    assert validate(detour).ok


def test_validate_flags_zero_distance_as_warning():
    inst = matrix_from_coords([(0, 0), (0, 0), (5, 0)], 1)
    report = validate(inst)
    assert report.ok
    assert [w.nodes for w in report.warnings] == [(0, 1)]


def test_route_must_be_permutation():
    with pytest.raises(RouteError):
        Route([1, 1, 2])
    with pytest.raises(RouteError):
        Route([0, 1])


def test_segment_time(unit_triangle, detour):
    r = Route([1, 2])
    assert segment_time(unit_triangle, r, 0, 2) == 2
    for k in range(4):
        assert segment_time(unit_triangle, r, k, k) == 0
    # position 4 is the server at the end of the lap
    assert segment_time(detour, Route([1, 3, 2]), 1, 4) == 201
    with pytest.raises(IndexError):
        segment_time(unit_triangle, r, 0, 4)


def test_round_trip(detour):
    assert round_trip(detour, Route([1, 3, 2])) == 202
    assert round_trip(detour, Route([3, 1, 2])) == 202.5
    assert round_trip(Instance([[0, 5], [5, 0]]), Route([1])) == 10


def test_metrics_golden(detour):
    assert metrics(detour, Route([1, 3, 2])).mai == 403
    assert metrics(detour, Route([3, 1, 2])).mai == 304.5
    assert metrics(Instance([[0, 5], [5, 0]]), Route([1])).mai == 15


def test_aoi_examples(unit_triangle):
    r = Route([1, 2])
    m = metrics(unit_triangle, r)
    assert aoi(unit_triangle, r, 1, 1.0) == 4
    # generated just as the drone leaves: the worst case for that node
    assert aoi(unit_triangle, r, 1, 0.0) == m.mai_per_node[1]
    to_server = m.round_trip - m.prefix[2]
    assert aoi(unit_triangle, r, 2, to_server) == pytest.approx(m.round_trip)
    with pytest.raises(ValueError):
        aoi(unit_triangle, r, 1, m.round_trip + 1)


def _random_route(data, n):
    perm = data.draw(st.permutations(list(range(1, n + 1))))
    return Route(perm)


@settings(max_examples=60, deadline=None)
@given(inst=instances(), data=st.data())
def test_metric_identities(inst, data):
    r = _random_route(data, inst.n_data)
    m = metrics(inst, r)
    tol = inst.tol * 10
    assert np.all(np.diff(m.prefix[1:]) >= -tol)
    assert np.allclose(m.mai_per_node[1:], m.round_trip + (m.round_trip - m.prefix[1:]), atol=tol)
    assert m.mai == m.mai_per_node[1]
    assert m.mai == pytest.approx(2 * m.round_trip - m.prefix[1], abs=tol)
    assert np.all(np.diff(m.mai_per_node[1:]) <= tol)


@settings(max_examples=40, deadline=None)
@given(inst=instances(), data=st.data())
def test_aoi_decreasing_in_delta(inst, data):
    r = _random_route(data, inst.n_data)
    m = metrics(inst, r)
    k = data.draw(st.integers(1, inst.n_data))
    deltas = np.linspace(0, m.round_trip, 7)
    values = [aoi(inst, r, k, d) for d in deltas]
    assert values[0] == pytest.approx(m.mai_per_node[k])
    if m.round_trip > 0:
        assert all(a > b for a, b in zip(values, values[1:]))


@settings(max_examples=40, deadline=None)
@given(inst=instances(), data=st.data(), c=st.floats(0.01, 100))
def test_metrics_scale_linearly(inst, data, c):
    r = _random_route(data, inst.n_data)
    a, b = metrics(inst, r), metrics(inst.scaled(c), r)
    assert b.round_trip == pytest.approx(c * a.round_trip)
    assert b.mai == pytest.approx(c * a.mai)
    assert np.allclose(b.prefix, c * a.prefix)


@settings(max_examples=40, deadline=None)
@given(inst=instances(min_n=2), data=st.data())
def test_reversal_keeps_round_trip(inst, data):
    r = _random_route(data, inst.n_data)
    fwd, bwd = metrics(inst, r), metrics(inst, r.reversed())
    assert bwd.round_trip == pytest.approx(fwd.round_trip)
    if fwd.prefix[1] == bwd.prefix[1]:
        assert bwd.mai == pytest.approx(fwd.mai)


def test_json_roundtrip_matrix(detour):
    back = Instance.from_dict(json.loads(detour.to_json()))
    assert np.array_equal(back.travel, detour.travel)
    assert back.coords is None


def test_json_roundtrip_coords():
    inst = matrix_from_coords([(0, 0), (3, 4), (6, 8)], 2.0)
    back = Instance.from_dict(json.loads(inst.to_json()))
    assert np.array_equal(back.travel, inst.travel)
    assert back.speed == 2.0


def test_json_requires_exactly_one_source():
    with pytest.raises(InstanceError):
        Instance.from_dict({"n_data": 1})
    with pytest.raises(InstanceError):
        Instance.from_dict({"n_data": 1, "travel": [0, 1, 1, 0], "coords": [[0, 0], [1, 0]], "speed_mps": 1})
    with pytest.raises(InstanceError):
        Instance.from_dict({"n_data": 2, "travel": [0, 1, 1, 0]})
