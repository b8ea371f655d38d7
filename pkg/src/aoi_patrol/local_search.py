"""Round-trip tour improvement (2-opt, Or-opt) and TSPLIB interop.

This stands in for an external TSP solver such as LKH. ``export_tsplib`` /
``import_tour`` / ``solve_external`` let a real solver binary be used instead.
"""
from __future__ import annotations

import math
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .construction import nearest_neighbor, orient
from .model import Instance, Route, round_trip, tolerance

SCALE_CAP = 10**6


@dataclass(frozen=True)
class ImproverConfig:
    max_passes: int = 1000
    seed: int = 0
    restarts: int = 4

    def __post_init__(self):
        if self.max_passes < 1:
            raise ValueError("max_passes must be >= 1")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")


def _two_opt_move(t, tour, eps):
    # tour is closed: tour[0] == tour[-1] == 0; reversing tour[i+1..j]
    # replaces edges (a,b),(c,d) with (a,c),(b,d)
    m = len(tour) - 1
    a = tour[:-1]
    b = tour[1:]
    delta = t[a[:, None], a[None, :]] + t[b[:, None], b[None, :]] - t[a, b][:, None] - t[a, b][None, :]
    i_idx, j_idx = np.triu_indices(m, 2)
    keep = ~((i_idx == 0) & (j_idx == m - 1))
    i_idx, j_idx = i_idx[keep], j_idx[keep]
    d = delta[i_idx, j_idx]
    hit = np.flatnonzero(d < -eps)
    if hit.size == 0:
        return None
    i, j = i_idx[hit[0]], j_idx[hit[0]]
    out = tour.copy()
    out[i + 1 : j + 1] = tour[i + 1 : j + 1][::-1]
    return out


def _or_opt_move(t, tour, eps):
    # move segment tour[s..s+L-1] (data nodes only) between tour[p] and tour[p+1],
    # optionally reversed
    n = len(tour) - 2
    for seg in (1, 2, 3):
        if seg >= n:
            break
        for s in range(1, n - seg + 2):
            e = s + seg - 1
            prev, nxt = tour[s - 1], tour[e + 1]
            head, tail = tour[s], tour[e]
            removed = t[prev, head] + t[tail, nxt] - t[prev, nxt]
            rest = np.concatenate((tour[:s], tour[e + 1 :]))
            p = rest[:-1]
            q = rest[1:]
            base = t[p, q]
            fwd = t[p, head] + t[tail, q] - base
            bwd = t[p, tail] + t[head, q] - base
            # reinserting at the old gap is a no-op (or a pure reversal)
            gap = s - 1
            fwd[gap] = np.inf
            gain_f = fwd - removed
            gain_b = bwd - removed
            best = np.flatnonzero(np.minimum(gain_f, gain_b) < -eps)
            if best.size == 0:
                continue
            k = best[0]
            segment = tour[s : e + 1]
            if gain_f[k] >= -eps:
                segment = segment[::-1]
            return np.concatenate((rest[: k + 1], segment, rest[k + 1 :]))
    return None


def improve(instance: Instance, start: Route, config: ImproverConfig = ImproverConfig()) -> Route:
    """First-improvement 2-opt / Or-opt descent on the round trip.

    Each pass scans the full neighbourhood and applies the first improving
    move found; the descent stops at a local optimum or after ``max_passes``.
    """
    t = instance.travel
    eps = tolerance(t)
    tour = np.array(start.nodes(), dtype=np.intp)
    if instance.n_data >= 3:
        for _ in range(config.max_passes):
            nxt = _two_opt_move(t, tour, eps)
            if nxt is None:
                nxt = _or_opt_move(t, tour, eps)
            if nxt is None:
                break
            tour = nxt
    return orient(instance, Route(tour[1:-1]))


def ls_route(instance: Instance, config: ImproverConfig = ImproverConfig()) -> Route:
    """Best round trip over restarts: nearest neighbour, then random orders."""
    rng = np.random.default_rng(config.seed)
    n = instance.n_data
    starts = [nearest_neighbor(instance)]
    for _ in range(config.restarts - 1):
        starts.append(Route(rng.permutation(n) + 1))
    best, best_len = None, math.inf
    for s in starts:
        r = improve(instance, s, config)
        length = round_trip(instance, r)
        if length < best_len:
            best, best_len = r, length
    return best


def tsplib_scale(travel: np.ndarray) -> int:
    """Smallest power of ten making every weight integral, capped at 1e6."""
    tol = tolerance(travel)
    scale = 1
    while scale < SCALE_CAP:
        scaled = travel * scale
        if np.all(np.abs(scaled - np.round(scaled)) <= tol * scale):
            break
        scale *= 10
    return scale


def export_tsplib(instance: Instance, path, name: str = "aoi_patrol") -> Path:
    """Write a TSPLIB ``.tsp`` file; TSPLIB node ``k + 1`` is node ``k`` here."""
    path = Path(path)
    dim = instance.n_data + 1
    lines = [f"NAME: {name}", "TYPE: TSP"]
    if instance.coords is not None:
        lines += [
            f"COMMENT: coordinates in meters, drone speed {instance.speed!r} m/s",
            f"DIMENSION: {dim}",
            "EDGE_WEIGHT_TYPE: EUC_2D",
            "NODE_COORD_SECTION",
        ]
        lines += [f"{k + 1} {float(x)!r} {float(y)!r}" for k, (x, y) in enumerate(instance.coords)]
    else:
        scale = tsplib_scale(instance.travel)
        weights = np.round(instance.travel * scale).astype(np.int64)
        lines += [
            f"COMMENT: travel times in seconds scaled by {scale}",
            f"DIMENSION: {dim}",
            "EDGE_WEIGHT_TYPE: EXPLICIT",
            "EDGE_WEIGHT_FORMAT: FULL_MATRIX",
            "EDGE_WEIGHT_SECTION",
        ]
        lines += [" ".join(str(int(w)) for w in row) for row in weights]
    lines.append("EOF")
    path.write_text("\n".join(lines) + "\n", encoding="ascii")
    return path


def read_tsplib(path) -> tuple:
    """Parse a ``.tsp`` file written by ``export_tsplib``.

    Returns ``(weights, scale)`` for explicit matrices or ``(coords, None)``
    for EUC_2D files.
    """
    text = Path(path).read_text(encoding="ascii").splitlines()
    header = {}
    body = []
    section = None
    for line in text:
        s = line.strip()
        if not s or s == "EOF":
            continue
        if s in ("NODE_COORD_SECTION", "EDGE_WEIGHT_SECTION"):
            section = s
            continue
        if section is None:
            key, _, value = s.partition(":")
            header[key.strip()] = value.strip()
        else:
            body.extend(s.split())
    dim = int(header["DIMENSION"])
    if header["EDGE_WEIGHT_TYPE"] == "EUC_2D":
        rows = np.array(body, dtype=float).reshape(dim, 3)
        return rows[:, 1:], None
    scale = int(header.get("COMMENT", "").rsplit(" ", 1)[-1])
    return np.array(body, dtype=np.int64).reshape(dim, dim), scale


class TourFormatError(ValueError):
    pass


def import_tour(instance: Instance, path) -> Route:
    """Read a TSPLIB ``.tour`` file and orient it for the smaller MAI."""
    ids = []
    in_section = False
    for line in Path(path).read_text(encoding="ascii").splitlines():
        s = line.strip()
        if s == "TOUR_SECTION":
            in_section = True
            continue
        if not in_section or not s:
            continue
        if s == "EOF":
            break
        for tok in s.split():
            try:
                v = int(tok)
            except ValueError:
                raise TourFormatError(f"bad token {tok!r} in tour section") from None
            if v == -1:
                in_section = False
                break
            ids.append(v - 1)
    if not ids:
        raise TourFormatError(f"{path}: no TOUR_SECTION entries")
    if sorted(ids) != list(range(instance.n_data + 1)):
        raise TourFormatError(
            f"tour node set does not match the instance's {instance.n_data + 1} nodes"
        )
    k = ids.index(0)
    cyc = ids[k + 1 :] + ids[:k]
    return orient(instance, Route(cyc))


def write_tour(route: Route, path, name: str = "aoi_patrol") -> Path:
    path = Path(path)
    nodes = [0, *route.order]
    lines = [f"NAME: {name}", "TYPE: TOUR", f"DIMENSION: {len(nodes)}", "TOUR_SECTION"]
    lines += [str(v + 1) for v in nodes]
    lines += ["-1", "EOF"]
    path.write_text("\n".join(lines) + "\n", encoding="ascii")
    return path


def solve_external(instance: Instance, solver, workdir=None, seed: int = 1, runs: int = 1,
                   timeout: float | None = None) -> Route:
    """Run an LKH-style solver as ``<solver> <parfile>`` and import its tour."""
    with tempfile.TemporaryDirectory() as tmp:
        wd = Path(workdir) if workdir is not None else Path(tmp)
        wd.mkdir(parents=True, exist_ok=True)
        problem = export_tsplib(instance, wd / "problem.tsp")
        tour = wd / "problem.tour"
        par = wd / "problem.par"
        par.write_text(
            f"PROBLEM_FILE = {problem}\nTOUR_FILE = {tour}\nRUNS = {runs}\nSEED = {seed}\n",
            encoding="ascii",
        )
        subprocess.run([str(solver), str(par)], check=True, capture_output=True, timeout=timeout)
        return import_tour(instance, tour)
