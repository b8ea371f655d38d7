"""Exact MAI-optimal routes.

The MAI of a route starting with data node i is ``t(0, i) + 2 * L`` where L
is the length of the rest of the lap, a Hamiltonian path from i back to the
server. One Held-Karp sweep from the server gives the shortest such path for
every i at once (travel times are symmetric, so paths can be read backwards).
"""
from __future__ import annotations

import itertools
import os
from dataclasses import dataclass

import numpy as np
from numba import njit

from .model import Instance, Route

HK_LIMIT = 24
BRUTE_FORCE_LIMIT = 10


class InfeasibleError(RuntimeError):
    """Instance too large for an exact method."""


@njit(cache=True)
def _held_karp_fill(t):
    n = t.shape[0] - 1
    size = 1 << n
    dp = np.full((size, n), np.inf)
    parent = np.full((size, n), -1, dtype=np.int8)
    for j in range(n):
        dp[1 << j, j] = t[0, j + 1]
    members = np.empty(n, dtype=np.int64)
    for mask in range(1, size):
        if mask & (mask - 1) == 0:
            continue
        cnt = 0
        for b in range(n):
            if (mask >> b) & 1:
                members[cnt] = b
                cnt += 1
        for a in range(cnt):
            j = members[a]
            prev = mask ^ (1 << j)
            best = np.inf
            arg = -1
            # members is ascending, so ties keep the lowest predecessor
            for c in range(cnt):
                k = members[c]
                if k == j:
                    continue
                v = dp[prev, k] + t[k + 1, j + 1]
                if v < best:
                    best = v
                    arg = k
            dp[mask, j] = best
            parent[mask, j] = arg
    return dp, parent


def memory_estimate(n_data: int) -> int:
    """Bytes needed for the Held-Karp table over ``n_data`` data nodes."""
    return (1 << n_data) * n_data * (8 + 1)


def _available_memory() -> int:
    try:
        import psutil

        return int(psutil.virtual_memory().available)
    except ImportError:  # pragma: no cover
        return os.sysconf("SC_PAGE_SIZE") * os.sysconf("SC_AVPHYS_PAGES")


@dataclass(frozen=True, eq=False)
class PathTable:
    """``dp[S, j]``: shortest path from the server through exactly the data
    nodes in bitmask S, ending at data node ``j + 1``. Bit ``b`` of S stands
    for data node ``b + 1``.
    """

    dp: np.ndarray
    parent: np.ndarray

    @property
    def n_data(self) -> int:
        return self.dp.shape[1]

    @property
    def full(self) -> int:
        return (1 << self.n_data) - 1

    def value(self, subset, end: int) -> float:
        """Shortest path length for a set of data-node ids ending at ``end``."""
        mask = sum(1 << (v - 1) for v in subset)
        return float(self.dp[mask, end - 1])

    def path_to(self, end: int, mask: int | None = None) -> list:
        """Data nodes of the optimal path ending at ``end``, listed from ``end`` backwards."""
        mask = self.full if mask is None else mask
        j = end - 1
        out = []
        while True:
            out.append(j + 1)
            k = int(self.parent[mask, j])
            mask ^= 1 << j
            if k < 0:
                break
            j = k
        return out


def held_karp(instance: Instance) -> PathTable:
    n = instance.n_data
    if n > HK_LIMIT:
        raise InfeasibleError(f"Held-Karp limited to {HK_LIMIT} data nodes, got {n}")
    need = memory_estimate(n)
    avail = _available_memory()
    if need > 0.8 * avail:
        raise InfeasibleError(
            f"Held-Karp over {n} data nodes needs ~{need / 2**30:.1f} GiB, "
            f"only {avail / 2**30:.1f} GiB available"
        )
    dp, parent = _held_karp_fill(np.ascontiguousarray(instance.travel))
    return PathTable(dp, parent)


def dp_optimal(instance: Instance, table: PathTable | None = None) -> Route:
    """MAI-optimal route. Ties go to the lowest first node."""
    table = held_karp(instance) if table is None else table
    values = instance.travel[0, 1:] + 2.0 * table.dp[table.full]
    first = int(np.argmin(values)) + 1
    return Route(table.path_to(first))


def shortest_tour(instance: Instance, table: PathTable | None = None) -> tuple:
    """Optimal closed-tour length and one tour achieving it (unoriented)."""
    table = held_karp(instance) if table is None else table
    closing = table.dp[table.full] + instance.travel[1:, 0]
    last = int(np.argmin(closing))
    return float(closing[last]), Route(table.path_to(last + 1)[::-1])


def brute_force(instance: Instance, chunk: int = 50_000) -> Route:
    """Exhaustive search over all visiting orders; ties go to the
    lexicographically smallest order."""
    n = instance.n_data
    if n > BRUTE_FORCE_LIMIT:
        raise InfeasibleError(f"brute force limited to {BRUTE_FORCE_LIMIT} data nodes, got {n}")
    t = instance.travel
    perms = itertools.permutations(range(1, n + 1))
    best_order, best_mai = None, np.inf
    while True:
        block = np.array(list(itertools.islice(perms, chunk)), dtype=np.intp)
        if block.size == 0:
            break
        seq = np.zeros((block.shape[0], n + 2), dtype=np.intp)
        seq[:, 1:-1] = block
        legs = t[seq[:, :-1], seq[:, 1:]]
        arrive = np.cumsum(legs, axis=1)
        total = arrive[:, -1]
        # age bound of the node at position k: full lap plus the remaining way home
        per_node = total[:, None] + (total[:, None] - arrive[:, :-1])
        mai = per_node.max(axis=1)
        k = int(np.argmin(mai))
        if mai[k] < best_mai:
            best_mai, best_order = mai[k], block[k]
    return Route(best_order)
