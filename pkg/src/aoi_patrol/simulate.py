"""Event-driven replay of a patrol route.

The drone loops the route at constant pace with zero hover time. Each packet
waits at its node until the drone's next arrival there and is delivered at the
next server arrival. Simultaneous events resolve as delivery, then pickup,
then generation, so a packet created at the very instant the drone arrives
misses that visit.
"""
from __future__ import annotations

import csv
import heapq
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .model import Instance, Route, metrics

DELIVERY, PICKUP, GENERATION = 0, 1, 2

CSV_COLUMNS = ("node", "gen_time_s", "pickup_time_s", "delivery_time_s", "aoi_s", "cycle", "steady_state")


@dataclass(frozen=True)
class GenerationProcess:
    kind: str  # worst_case | periodic | poisson
    delta: float = 0.0
    interval: float = 1.0
    phase: float | dict = 0.0
    rate: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("worst_case", "periodic", "poisson"):
            raise ValueError(f"unknown generation process {self.kind!r}")
        if self.delta < 0:
            raise ValueError("delta must be >= 0")
        if not self.interval > 0:
            raise ValueError("interval must be > 0")
        if not self.rate > 0:
            raise ValueError("rate must be > 0")

    @classmethod
    def worst_case(cls, delta: float = 0.0):
        return cls("worst_case", delta=delta)

    @classmethod
    def periodic(cls, interval: float, phase=0.0):
        return cls("periodic", interval=interval, phase=phase)

    @classmethod
    def poisson(cls, rate: float, seed: int = 0):
        return cls("poisson", rate=rate, seed=seed)


def _generation_times(process, node, first_visit, lap, horizon):
    """Yield packet generation times at ``node`` in increasing order, < horizon."""
    if process.kind == "worst_case":
        c = 0
        while True:
            g = (c * lap + first_visit) + process.delta
            if g >= horizon:
                return
            yield g
            c += 1
    elif process.kind == "periodic":
        phase = process.phase.get(node, 0.0) if isinstance(process.phase, dict) else process.phase
        m = max(0, math.ceil(-phase / process.interval))
        while True:
            g = phase + m * process.interval
            if g >= horizon:
                return
            yield g
            m += 1
    else:
        rng = np.random.default_rng([process.seed, node])
        g = 0.0
        while True:
            g += rng.exponential(1.0 / process.rate)
            if g >= horizon:
                return
            yield g


@dataclass(frozen=True, eq=False)
class AoiTrace:
    node: np.ndarray
    gen: np.ndarray
    pickup: np.ndarray
    delivery: np.ndarray
    cycle: np.ndarray
    steady: np.ndarray

    @property
    def aoi(self) -> np.ndarray:
        return self.delivery - self.gen

    def __len__(self):
        return len(self.node)

    def max_per_node(self, steady_only: bool = True) -> dict:
        keep = self.steady if steady_only else np.ones(len(self), dtype=bool)
        out = {}
        for v in np.unique(self.node[keep]):
            sel = keep & (self.node == v)
            out[int(v)] = float(self.aoi[sel].max())
        return out

    @classmethod
    def concat(cls, *traces: "AoiTrace") -> "AoiTrace":
        cols = [np.concatenate([getattr(t, f) for t in traces]) for f in
                ("node", "gen", "pickup", "delivery", "cycle", "steady")]
        return cls(*cols)

    def to_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            for row in zip(self.node, self.gen, self.pickup, self.delivery, self.aoi, self.cycle, self.steady):
                v, g, p, d, a, c, s = row
                w.writerow([int(v), repr(float(g)), repr(float(p)), repr(float(d)), repr(float(a)),
                            int(c), "true" if s else "false"])
        return path

    @classmethod
    def from_csv(cls, path) -> "AoiTrace":
        with Path(path).open(newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        return cls(
            np.array([int(r["node"]) for r in rows], dtype=np.int64),
            np.array([float(r["gen_time_s"]) for r in rows]),
            np.array([float(r["pickup_time_s"]) for r in rows]),
            np.array([float(r["delivery_time_s"]) for r in rows]),
            np.array([int(r["cycle"]) for r in rows], dtype=np.int64),
            np.array([r["steady_state"] == "true" for r in rows], dtype=bool),
        )


def run(instance: Instance, route: Route, process: GenerationProcess, cycles: int) -> AoiTrace:
    """Replay ``route`` for ``cycles`` laps and record every delivered packet.

    Packets generated before the drone's first visit to their node are kept
    but marked ``steady = False``. Use ``cycles >= 2`` for steady-state data.
    """
    if cycles < 1:
        raise ValueError("cycles must be >= 1")
    m = metrics(instance, route)
    lap = m.round_trip
    horizon = cycles * lap
    first_visit = {v: float(m.prefix[k]) for k, v in enumerate(route.order, 1)}

    events = []
    seq = 0
    for c in range(cycles):
        for k, v in enumerate(route.order, 1):
            events.append((c * lap + m.prefix[k], PICKUP, seq, v, c))
            seq += 1
        events.append(((c + 1) * lap, DELIVERY, seq, 0, c))
        seq += 1
    sources = {}
    for v in route.order:
        sources[v] = _generation_times(process, v, first_visit[v], lap, horizon)
        g = next(sources[v], None)
        if g is not None:
            events.append((g, GENERATION, seq, v, -1))
            seq += 1
    heapq.heapify(events)

    waiting = {v: [] for v in route.order}
    onboard = []
    rows = []
    while events:
        time, kind, _, v, c = heapq.heappop(events)
        if kind == GENERATION:
            waiting[v].append(time)
            g = next(sources[v], None)
            if g is not None:
                heapq.heappush(events, (g, GENERATION, seq, v, -1))
                seq += 1
        elif kind == PICKUP:
            onboard.extend((v, g, time, c) for g in waiting[v])
            waiting[v].clear()
        else:
            rows.extend((v_, g, p, time, c_) for v_, g, p, c_ in onboard)
            onboard.clear()

    if not rows:
        empty = np.array([], dtype=np.int64)
        return AoiTrace(empty, np.array([]), np.array([]), np.array([]), empty, np.array([], dtype=bool))
    rows.sort(key=lambda r: (r[1], r[0]))
    node = np.array([r[0] for r in rows], dtype=np.int64)
    gen = np.array([r[1] for r in rows])
    steady = np.array([r[1] >= first_visit[r[0]] for r in rows], dtype=bool)
    return AoiTrace(
        node,
        gen,
        np.array([r[2] for r in rows]),
        np.array([r[3] for r in rows]),
        np.array([r[4] for r in rows], dtype=np.int64),
        steady,
    )


@dataclass
class TraceSummary:
    per_node: dict = field(default_factory=dict)  # node -> {"max": s, "mean": s}
    route_max: float | None = None
    packets: int = 0
    steady_packets: int = 0


def summarize(trace: AoiTrace) -> TraceSummary:
    """Per-node max/mean AoI and the route-level max, over steady-state packets."""
    if len(trace) == 0:
        raise ValueError("empty trace")
    out = TraceSummary(packets=len(trace), steady_packets=int(trace.steady.sum()))
    aoi = trace.aoi
    for v in np.unique(trace.node[trace.steady]):
        sel = trace.steady & (trace.node == v)
        out.per_node[int(v)] = {"max": float(aoi[sel].max()), "mean": float(aoi[sel].mean())}
    if out.steady_packets:
        out.route_max = float(aoi[trace.steady].max())
    return out
