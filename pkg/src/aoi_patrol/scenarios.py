"""Synthetic scenarios and hand-built instances.

Random scenarios put the server at the centre of a square area and scatter the
data nodes over grid cells according to one of three layouts (grid, cluster,
outlier). All randomness comes from ``numpy.random.default_rng(seed)``, i.e.
PCG64, so a config always produces the same scenario.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy.sparse.csgraph import csgraph_from_dense, floyd_warshall

from .model import Instance, InstanceError, matrix_from_coords

DISTRIBUTIONS = ("grid", "cluster", "outlier")
DEFAULT_SPEED = 20.0


def default_area(n_data: int) -> float:
    return 1000.0 if n_data <= 8 else 8000.0


@dataclass(frozen=True)
class ScenarioConfig:
    n_data: int
    distribution: str
    seed: int
    area_m: float | None = None
    speed_mps: float = DEFAULT_SPEED

    def __post_init__(self):
        if self.n_data < 1:
            raise ValueError("need at least one data node")
        if self.distribution not in DISTRIBUTIONS:
            raise ValueError(f"unknown distribution {self.distribution!r}; pick one of {DISTRIBUTIONS}")
        if self.distribution == "outlier" and self.n_data < 2:
            raise ValueError("outlier layout needs at least two data nodes")
        if self.area_m is None:
            object.__setattr__(self, "area_m", default_area(self.n_data))
        if not self.area_m > 0:
            raise ValueError("area must be positive")
        if not self.speed_mps > 0:
            raise ValueError("speed must be positive")


@dataclass(frozen=True, eq=False)
class Scenario:
    config: ScenarioConfig
    instance: Instance

    @property
    def scenario_id(self) -> str:
        c = self.config
        return f"{c.distribution}_{c.n_data}_{c.seed}"

    @property
    def filename(self) -> str:
        return f"scenario_{self.scenario_id}.json"

    def to_json(self) -> str:
        return self.instance.to_json()

    def save(self, directory) -> Path:
        path = Path(directory) / self.filename
        path.write_text(self.to_json() + "\n", encoding="utf-8")
        return path


def _cell_counts(n: int, n_cells: int) -> list:
    return [n // n_cells + (1 if i < n % n_cells else 0) for i in range(n_cells)]


def gen_scenario(config: ScenarioConfig) -> Scenario:
    rng = np.random.default_rng(config.seed)
    n = config.n_data
    side = 4
    if config.distribution == "grid":
        cells = rng.permutation(16)
        counts = _cell_counts(n, 16)
    elif config.distribution == "cluster":
        k = 1 if n <= 8 else 4
        cells = rng.choice(16, size=k, replace=False)
        counts = _cell_counts(n, k)
    else:
        side = 2
        cells = rng.choice(4, size=2, replace=False)
        counts = [1, n - 1]

    cell = config.area_m / side
    coords = [(config.area_m / 2, config.area_m / 2)]
    for c, count in zip(cells, counts):
        cx, cy = int(c) % side, int(c) // side
        for u, v in rng.random((count, 2)):
            coords.append(((cx + u) * cell, (cy + v) * cell))
    # data nodes 1..n are listed cell by cell; shuffle so ids carry no layout
    perm = rng.permutation(n)
    coords = [coords[0]] + [coords[1 + p] for p in perm]

    base = matrix_from_coords(coords, config.speed_mps)
    meta = asdict(config)
    return Scenario(config, Instance(base.travel, base.coords, base.speed, meta))


def gen_batch(n_data: int, distribution: str, count: int = 100, base_seed: int = 0,
              area_m: float | None = None, speed_mps: float = DEFAULT_SPEED) -> list:
    return [
        gen_scenario(ScenarioConfig(n_data, distribution, base_seed + i, area_m, speed_mps))
        for i in range(count)
    ]


def cell_of(config: ScenarioConfig, xy) -> tuple:
    """Grid cell (column, row) holding point ``xy`` under the layout's grid."""
    side = 2 if config.distribution == "outlier" else 4
    cell = config.area_m / side
    return tuple(int(min(side - 1, max(0, np.floor(v / cell)))) for v in xy)


def ham_path_reduction(n_vertices: int, edges) -> Instance:
    """Instance whose optimal MAI is ``2N + 1`` iff the graph has a Hamiltonian path.

    Graph vertex ``v`` (0-based) becomes data node ``v + 1``; the server is
    one step from everyone, graph edges cost 1 and non-edges 2.
    """
    if n_vertices < 2:
        raise ValueError("reduction needs at least two vertices")
    t = np.full((n_vertices + 1, n_vertices + 1), 2.0)
    t[0, :] = t[:, 0] = 1.0
    for u, v in edges:
        if not (0 <= u < n_vertices and 0 <= v < n_vertices):
            raise ValueError(f"edge ({u}, {v}) outside 0..{n_vertices - 1}")
        if u != v:
            t[u + 1, v + 1] = t[v + 1, u + 1] = 1.0
    np.fill_diagonal(t, 0.0)
    return Instance(t, meta={"reduction": "hamiltonian-path", "n_vertices": n_vertices})


def read_edge_list(path) -> tuple:
    """Parse ``u v`` lines (0-based). A line holding a single integer sets the
    vertex count; otherwise it is one more than the largest index."""
    n = None
    edges = []
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            nums = [int(p) for p in parts]
        except ValueError:
            raise ValueError(f"{path}:{lineno}: expected integers, got {raw!r}") from None
        if len(nums) == 1:
            n = nums[0]
        elif len(nums) == 2:
            if min(nums) < 0:
                raise ValueError(f"{path}:{lineno}: negative vertex index")
            edges.append(tuple(nums))
        else:
            raise ValueError(f"{path}:{lineno}: expected 'u v', got {raw!r}")
    if n is None:
        if not edges:
            raise ValueError(f"{path}: no edges")
        n = max(max(e) for e in edges) + 1
    return n, edges


def has_hamiltonian_path(n_vertices: int, edges) -> bool:
    """Plain permutation search, used to check the reduction."""
    adj = {(u, v) for u, v in edges} | {(v, u) for u, v in edges}
    return any(
        all((p[i], p[i + 1]) in adj for i in range(n_vertices - 1))
        for p in itertools.permutations(range(n_vertices))
    )


def tightness_instance(n_data: int, eps: float) -> Instance:
    """Family on which SRTT's MAI ratio tends to 3/2.

    Unit edges (0,1) and (i,i+2); edges of weight 1+eps at (0,3), (1,2) and
    (i,i+4); every other pair takes its shortest-path distance.
    """
    if n_data < 5 or n_data % 2 == 0:
        raise ValueError(f"tightness instance needs an odd node count >= 5, got {n_data}")
    if not eps > 0:
        raise ValueError("eps must be positive")
    size = n_data + 1
    w = np.full((size, size), np.inf)

    def put(i, j, value):
        w[i, j] = w[j, i] = value

    put(0, 1, 1.0)
    for i in range(n_data - 1):
        put(i, i + 2, 1.0)
    put(0, 3, 1.0 + eps)
    put(1, 2, 1.0 + eps)
    for i in range(n_data - 3):
        put(i, i + 4, 1.0 + eps)
    dist = floyd_warshall(csgraph_from_dense(w, null_value=np.inf), directed=False)
    return Instance(dist, meta={"family": "tightness", "n_data": n_data, "eps": eps})


def counterexample_instance(t03: float = 100.5) -> Instance:
    """Four-node instance where the shortest lap is not the freshest one."""
    if not 100 < t03 < 101:
        raise InstanceError(f"t03 must lie strictly between 100 and 101, got {t03}")
    t = np.array(
        [
            [0.0, 1.0, 1.0, t03],
            [1.0, 0.0, 1.0, 100.0],
            [1.0, 1.0, 0.0, 100.0],
            [t03, 100.0, 100.0, 0.0],
        ]
    )
    return Instance(t, meta={"family": "counterexample", "t03": t03})


def load_scenario(path) -> Instance:
    return Instance.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
