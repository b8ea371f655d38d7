"""Problem instance, routes and the AoI / MAI metrics of a patrolling route.

Node 0 is always the server. A route lists the data nodes 1..N in visiting
order; the drone leaves the server, visits them, and returns. Metric
functions index by *position* in the route: position 0 is the server at the
start of the lap, positions 1..N are the data nodes, and position N+1 is the
server again at the end of the lap.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

REL_TOL = 1e-9


def tolerance(travel: np.ndarray) -> float:
    """Absolute tolerance used for all metric comparisons on ``travel``."""
    top = float(np.max(travel)) if travel.size else 0.0
    return REL_TOL * max(1.0, top)


class InstanceError(ValueError):
    pass


class RouteError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Instance:
    travel: np.ndarray
    coords: np.ndarray | None = None
    speed: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.array(self.travel, dtype=np.float64)
        if t.ndim != 2 or t.shape[0] != t.shape[1]:
            raise InstanceError(f"travel matrix must be square, got shape {t.shape}")
        if t.shape[0] < 2:
            raise InstanceError("need a server and at least one data node")
        if not np.all(np.isfinite(t)):
            raise InstanceError("travel matrix has non-finite entries")
        t.setflags(write=False)
        object.__setattr__(self, "travel", t)
        if (self.coords is None) != (self.speed is None):
            raise InstanceError("coords and speed must be given together")
        if self.coords is not None:
            c = np.array(self.coords, dtype=np.float64)
            if c.shape != (t.shape[0], 2):
                raise InstanceError(f"coords must have shape ({t.shape[0]}, 2), got {c.shape}")
            c.setflags(write=False)
            object.__setattr__(self, "coords", c)
            object.__setattr__(self, "speed", float(self.speed))

    @property
    def n_data(self) -> int:
        return self.travel.shape[0] - 1

    @property
    def tol(self) -> float:
        return tolerance(self.travel)

    def scaled(self, factor: float) -> "Instance":
        """Same instance with every travel time multiplied by ``factor``."""
        if factor <= 0:
            raise InstanceError("scale factor must be positive")
        if self.coords is None:
            return Instance(self.travel * factor, meta=dict(self.meta))
        return Instance(self.travel * factor, self.coords, self.speed / factor, dict(self.meta))

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"n_data": self.n_data}
        if self.coords is not None:
            out["coords"] = [[float(x), float(y)] for x, y in self.coords]
            out["speed_mps"] = float(self.speed)
        else:
            out["travel"] = [float(v) for v in self.travel.ravel()]
        out["meta"] = dict(self.meta)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Instance":
        n = int(data["n_data"])
        has_coords = data.get("coords") is not None
        has_travel = data.get("travel") is not None
        if has_coords == has_travel:
            raise InstanceError("exactly one of 'coords' and 'travel' is required")
        meta = dict(data.get("meta") or {})
        if has_coords:
            if "speed_mps" not in data:
                raise InstanceError("'coords' requires 'speed_mps'")
            inst = matrix_from_coords(data["coords"], data["speed_mps"])
            inst = Instance(inst.travel, inst.coords, inst.speed, meta)
        else:
            flat = np.asarray(data["travel"], dtype=np.float64)
            if flat.size != (n + 1) ** 2:
                raise InstanceError(f"'travel' must hold {(n + 1) ** 2} values, got {flat.size}")
            inst = Instance(flat.reshape(n + 1, n + 1), meta=meta)
        if inst.n_data != n:
            raise InstanceError(f"n_data={n} disagrees with {inst.n_data} data nodes given")
        return inst

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Instance":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def matrix_from_coords(coords: Sequence[Sequence[float]], speed: float) -> Instance:
    """Travel times from planar positions (meters) and a constant speed (m/s)."""
    if not speed > 0:
        raise InstanceError(f"speed must be positive, got {speed}")
    c = np.asarray(coords, dtype=np.float64)
    if c.ndim != 2 or c.shape[1] != 2:
        raise InstanceError("coords must be a list of (x, y) pairs")
    if c.shape[0] < 2:
        raise InstanceError("need a server and at least one data node")
    diff = c[:, None, :] - c[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    return Instance(dist / speed, c, float(speed))


@dataclass(frozen=True)
class Violation:
    kind: str  # diagonal | negative | asymmetry | triangle | coords
    nodes: tuple
    magnitude: float

    def __str__(self):
        return f"{self.kind} at {self.nodes}: {self.magnitude:.6g}"


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)
    # zero-distance pairs between distinct nodes: legal, but worth surfacing
    warnings: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __len__(self):
        return len(self.violations)

    def __iter__(self):
        return iter(self.violations)


def validate(instance: Instance) -> ValidationReport:
    """Check the metric assumptions on ``instance`` and report every violation."""
    t = instance.travel
    tol = instance.tol
    n = t.shape[0]
    report = ValidationReport()

    for i in np.flatnonzero(np.abs(np.diag(t)) > tol):
        report.violations.append(Violation("diagonal", (int(i), int(i)), float(abs(t[i, i]))))
    for i, j in zip(*np.nonzero(t < -tol)):
        report.violations.append(Violation("negative", (int(i), int(j)), float(-t[i, j])))
    asym = np.abs(t - t.T)
    for i, j in zip(*np.nonzero(np.triu(asym, 1) > tol)):
        report.violations.append(Violation("asymmetry", (int(i), int(j)), float(asym[i, j])))

    # excess[i, j, k] = t[i, j] - (t[i, k] + t[k, j])
    excess = t[:, :, None] - (t[:, None, :] + t.T[None, :, :])
    for i, j, k in zip(*np.nonzero(excess > tol)):
        if i < j:
            report.violations.append(
                Violation("triangle", (int(i), int(j), int(k)), float(excess[i, j, k]))
            )

    if instance.coords is not None:
        c = instance.coords
        dist = np.hypot(c[:, None, 0] - c[None, :, 0], c[:, None, 1] - c[None, :, 1])
        err = np.abs(dist / instance.speed - t)
        for i, j in zip(*np.nonzero(np.triu(err, 1) > tol)):
            report.violations.append(Violation("coords", (int(i), int(j)), float(err[i, j])))

    off = ~np.eye(n, dtype=bool)
    for i, j in zip(*np.nonzero(np.triu((np.abs(t) <= tol) & off, 1))):
        report.warnings.append(Violation("zero_distance", (int(i), int(j)), 0.0))
    return report


@dataclass(frozen=True)
class Route:
    order: tuple

    def __post_init__(self):
        order = tuple(int(v) for v in self.order)
        if sorted(order) != list(range(1, len(order) + 1)):
            raise RouteError(f"route must be a permutation of 1..{len(order)}, got {order}")
        object.__setattr__(self, "order", order)

    def __len__(self):
        return len(self.order)

    def __iter__(self):
        return iter(self.order)

    def __getitem__(self, k):
        return self.order[k]

    @property
    def first(self) -> int:
        return self.order[0]

    def nodes(self) -> tuple:
        """Closed node sequence: server, data nodes, server."""
        return (0, *self.order, 0)

    def reversed(self) -> "Route":
        return Route(self.order[::-1])


def check_route(instance: Instance, route: Route) -> None:
    if len(route) != instance.n_data:
        raise RouteError(f"route has {len(route)} nodes, instance has {instance.n_data}")


def _leg_times(instance: Instance, route: Route) -> np.ndarray:
    seq = np.asarray(route.nodes())
    return instance.travel[seq[:-1], seq[1:]]


def segment_time(instance: Instance, route: Route, i: int, j: int) -> float:
    """Travel time along the route from position ``i`` to position ``j`` (i <= j)."""
    check_route(instance, route)
    last = instance.n_data + 1
    if not (0 <= i <= last and 0 <= j <= last):
        raise IndexError(f"positions must lie in 0..{last}, got ({i}, {j})")
    if i > j:
        raise IndexError(f"segment start {i} after end {j}")
    return float(np.sum(_leg_times(instance, route)[i:j]))


def round_trip(instance: Instance, route: Route) -> float:
    check_route(instance, route)
    return float(np.sum(_leg_times(instance, route)))


def mai_of(instance: Instance, route: Route) -> float:
    """Route MAI, ``2 * round_trip - t(0, first)``."""
    return metrics(instance, route).mai


@dataclass(frozen=True, eq=False)
class RouteMetrics:
    round_trip: float
    prefix: np.ndarray  # prefix[k] = time from the server to position k; prefix[0] = 0
    mai_per_node: np.ndarray  # mai_per_node[k] for positions 1..N; index 0 unused (nan)
    mai: float

    @property
    def suffix(self) -> np.ndarray:
        """Time from position k back to the server."""
        return self.round_trip - self.prefix

    def as_dict(self) -> dict:
        return {
            "round_trip_s": self.round_trip,
            "mai_s": self.mai,
            "mai_per_node_s": [float(v) for v in self.mai_per_node[1:]],
        }


def metrics(instance: Instance, route: Route) -> RouteMetrics:
    check_route(instance, route)
    legs = _leg_times(instance, route)
    prefix = np.concatenate(([0.0], np.cumsum(legs[:-1])))
    total = float(np.sum(legs))
    per_node = np.full(len(route) + 1, np.nan)
    per_node[1:] = total + (total - prefix[1:])
    return RouteMetrics(total, prefix, per_node, float(np.max(per_node[1:])))


def aoi(instance: Instance, route: Route, k: int, delta: float) -> float:
    """Age of a packet generated ``delta`` seconds after the drone left position ``k``."""
    n = instance.n_data
    if not 1 <= k <= n:
        raise IndexError(f"position must lie in 1..{n}, got {k}")
    m = metrics(instance, route)
    if not (0 <= delta <= m.round_trip):
        raise ValueError(f"delta must lie in [0, {m.round_trip}], got {delta}")
    to_server = m.round_trip - m.prefix[k]
    return (to_server - delta) + m.prefix[k] + to_server
