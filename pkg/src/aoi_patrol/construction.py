"""Route builders: nearest neighbour, SRTT (Christofides), Edge Enforcement, Hybrid.

Ties are always broken towards the lowest node index, then lexicographic
edge order, so every builder is deterministic.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np
from numba import njit

from .model import Instance, Route, metrics

MATCH_EXACT_LIMIT = 20


def _edge(u: int, v: int) -> tuple:
    return (u, v) if u <= v else (v, u)


def nearest_neighbor(instance: Instance) -> Route:
    t = instance.travel
    unvisited = list(range(1, instance.n_data + 1))
    order = []
    cur = 0
    while unvisited:
        # unvisited stays sorted, so argmin picks the lowest index on ties
        k = int(np.argmin(t[cur, unvisited]))
        cur = unvisited.pop(k)
        order.append(cur)
    return Route(order)


@dataclass(frozen=True)
class SpanningTree:
    n_nodes: int
    edges: tuple
    total_weight: float

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n_nodes, dtype=int)
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg


def prim_mst(instance: Instance, seed_edge: tuple | None = None) -> SpanningTree:
    """Prim's algorithm from the server.

    With ``seed_edge = (0, i)`` the tree is grown from {v0, vi} with that edge
    fixed, giving the lightest spanning tree that contains it.
    """
    t = instance.travel
    n = t.shape[0]
    edges = []
    in_tree = np.zeros(n, dtype=bool)
    in_tree[0] = True
    added = [0]
    if seed_edge is not None:
        a, b = seed_edge
        if 0 not in (a, b) or a == b:
            raise ValueError(f"seed edge {seed_edge} must join the server to a data node")
        i = a or b
        if not 1 <= i < n:
            raise ValueError(f"seed edge {seed_edge} references a missing node")
        in_tree[i] = True
        added.append(i)
        edges.append((0, i))

    # best[v] = lightest known (weight, lo, hi) edge from the tree to v
    best = [None] * n
    for u in added:
        _relax(t, u, in_tree, best)
    while len(edges) < n - 1:
        v = min((best[w] + (w,) for w in range(n) if not in_tree[w]))[3]
        w, lo, hi = best[v]
        edges.append((lo, hi))
        in_tree[v] = True
        _relax(t, v, in_tree, best)
    total = float(sum(t[u, v] for u, v in edges))
    return SpanningTree(n, tuple(edges), total)


def _relax(t, u, in_tree, best):
    for v in range(len(best)):
        if in_tree[v]:
            continue
        cand = (t[u, v], *_edge(u, v))
        if best[v] is None or cand < best[v]:
            best[v] = cand


def odd_vertices(tree: SpanningTree) -> tuple:
    return tuple(int(v) for v in np.flatnonzero(tree.degrees() % 2 == 1))


@dataclass(frozen=True)
class Matching:
    pairs: tuple
    total_weight: float
    exact: bool = True


@njit(cache=True)
def _matching_dp(w):
    # cost[mask] = cheapest perfect matching of the vertex subset ``mask``;
    # the lowest vertex of the subset is always the one being paired
    k = w.shape[0]
    size = 1 << k
    cost = np.full(size, np.inf)
    mate = np.full(size, -1, dtype=np.int8)
    cost[0] = 0.0
    for mask in range(1, size):
        m = mask
        bits = 0
        while m:
            m &= m - 1
            bits += 1
        if bits % 2:
            continue
        low = 0
        while not (mask >> low) & 1:
            low += 1
        rest = mask ^ (1 << low)
        for j in range(low + 1, k):
            if (rest >> j) & 1:
                c = cost[rest ^ (1 << j)] + w[low, j]
                if c < cost[mask]:
                    cost[mask] = c
                    mate[mask] = j
    return cost, mate


def min_weight_perfect_matching(instance: Instance, verts: Sequence[int]) -> Matching:
    """Minimum-weight perfect matching on ``verts`` under the travel weights.

    Exact (subset dynamic programming) up to ``MATCH_EXACT_LIMIT`` vertices;
    above that a greedy matching improved by pair swaps, flagged non-exact.
    """
    verts = sorted(int(v) for v in verts)
    if len(verts) % 2:
        raise ValueError(f"perfect matching needs an even vertex count, got {len(verts)}")
    if not verts:
        return Matching((), 0.0, True)
    t = instance.travel
    if len(verts) > MATCH_EXACT_LIMIT:
        return _greedy_matching(t, verts)
    w = np.ascontiguousarray(t[np.ix_(verts, verts)])
    cost, mate = _matching_dp(w)
    pairs = []
    mask = (1 << len(verts)) - 1
    while mask:
        low = (mask & -mask).bit_length() - 1
        j = int(mate[mask])
        pairs.append((verts[low], verts[j]))
        mask ^= (1 << low) | (1 << j)
    total = float(sum(t[a, b] for a, b in pairs))
    return Matching(tuple(pairs), total, True)


def _greedy_matching(t, verts):
    cand = sorted((t[a, b], a, b) for i, a in enumerate(verts) for b in verts[i + 1:])
    used = set()
    pairs = []
    for _, a, b in cand:
        if a not in used and b not in used:
            pairs.append([a, b])
            used.update((a, b))
    improved = True
    while improved:
        improved = False
        for p in range(len(pairs)):
            for q in range(p + 1, len(pairs)):
                a, b = pairs[p]
                c, d = pairs[q]
                now = t[a, b] + t[c, d]
                for x, y in (((a, c), (b, d)), ((a, d), (b, c))):
                    if t[x] + t[y] < now - 1e-12 * max(1.0, now):
                        pairs[p], pairs[q] = sorted(x), sorted(y)
                        now = t[x] + t[y]
                        improved = True
                        a, b = pairs[p]
                        c, d = pairs[q]
    pairs = tuple(sorted(tuple(p) for p in pairs))
    return Matching(pairs, float(sum(t[a, b] for a, b in pairs)), False)


@dataclass(frozen=True)
class EulerMultigraph:
    n_nodes: int
    edges: tuple

    @classmethod
    def combine(cls, tree: SpanningTree, matching: Matching) -> "EulerMultigraph":
        return cls(tree.n_nodes, tuple(tree.edges) + tuple(matching.pairs))

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n_nodes, dtype=int)
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg


def euler_circuit(graph: EulerMultigraph, start: int = 0, first_edge: tuple | None = None) -> list:
    """Hierholzer's algorithm; returns the closed walk as a node list.

    When ``first_edge`` is given the walk leaves ``start`` along it.
    """
    odd = np.flatnonzero(graph.degrees() % 2)
    if odd.size:
        raise ValueError(f"odd-degree vertices {odd.tolist()} in Euler multigraph")
    adj = [[] for _ in range(graph.n_nodes)]
    for eid, (u, v) in enumerate(graph.edges):
        adj[u].append((v, eid))
        if u != v:
            adj[v].append((u, eid))
    for lst in adj:
        lst.sort()
    used = [False] * len(graph.edges)
    ptr = [0] * graph.n_nodes

    head = [start]
    origin = start
    if first_edge is not None:
        if start not in first_edge:
            raise ValueError(f"first edge {first_edge} is not incident to {start}")
        other = first_edge[1] if first_edge[0] == start else first_edge[0]
        eid = next((e for v, e in adj[start] if v == other), None)
        if eid is None:
            raise ValueError(f"first edge {first_edge} is not in the multigraph")
        used[eid] = True
        head.append(other)
        origin = other

    stack = [origin]
    trail = []
    while stack:
        u = stack[-1]
        lst = adj[u]
        while ptr[u] < len(lst) and used[lst[ptr[u]][1]]:
            ptr[u] += 1
        if ptr[u] == len(lst):
            trail.append(stack.pop())
        else:
            v, eid = lst[ptr[u]]
            used[eid] = True
            stack.append(v)
    trail.reverse()
    walk = head[:-1] + trail
    if len(walk) != len(graph.edges) + 1 or walk[-1] != start:
        raise ValueError("Euler multigraph is disconnected")
    return walk


def shortcut(walk: Sequence[int], pin_first: bool = False) -> Route:
    """Drop repeated visits from a closed walk through the server."""
    if len(walk) < 2 or walk[0] != 0 or walk[-1] != 0:
        raise ValueError("walk must start and end at the server")
    seen = {0}
    order = []
    for v in walk:
        if v not in seen:
            seen.add(v)
            order.append(int(v))
    route = Route(order)
    if pin_first:
        assert route.first == walk[1], "first data node lost while shortcutting"
    return route


def orient(instance: Instance, tour: Route | Sequence[int]) -> Route:
    """Direction of an undirected tour whose first leg from the server is longer."""
    fwd = tour if isinstance(tour, Route) else Route(tour)
    rev = fwd.reversed()
    t0 = instance.travel[0]
    a, b = t0[fwd.first], t0[rev.first]
    if a > b or (a == b and fwd.first <= rev.first):
        return fwd
    return rev


def _christofides_walk(instance, tree, matchings, first_edge=None):
    odd = odd_vertices(tree)
    if odd not in matchings:
        matchings[odd] = min_weight_perfect_matching(instance, odd)
    graph = EulerMultigraph.combine(tree, matchings[odd])
    return euler_circuit(graph, 0, first_edge)


def srtt(instance: Instance) -> Route:
    """Christofides tour from the plain MST, oriented for the smaller MAI."""
    walk = _christofides_walk(instance, prim_mst(instance), {})
    return orient(instance, shortcut(walk))


def enforced_candidates(instance: Instance) -> Iterator[tuple]:
    """Yield ``(label, route)`` in the order Edge Enforcement compares them.

    For every server edge (0, i): the tour grown from the seeded tree that
    starts along that edge, then the same tour reversed. The plain SRTT route
    comes last.
    """
    matchings: dict = {}
    for i in range(1, instance.n_data + 1):
        tree = prim_mst(instance, (0, i))
        walk = _christofides_walk(instance, tree, matchings, (0, i))
        route = shortcut(walk, pin_first=True)
        yield (f"enforce-{i}", route)
        if len(route) > 1:
            yield (f"enforce-{i}-reversed", route.reversed())
    yield ("srtt", srtt(instance))


def _pick_min_mai(instance, candidates):
    best = None
    best_mai = np.inf
    for _, route in candidates:
        m = metrics(instance, route).mai
        if m < best_mai:
            best, best_mai = route, m
    return best


def enforced(instance: Instance) -> Route:
    return _pick_min_mai(instance, enforced_candidates(instance))


def hybrid(instance: Instance, improver_budget: int | None = None, config=None) -> Route:
    """Smaller-MAI route of Edge Enforcement and the local-search tour."""
    from .local_search import ImproverConfig, ls_route

    if config is None:
        config = ImproverConfig()
    if improver_budget is not None:
        config = ImproverConfig(max_passes=improver_budget, seed=config.seed, restarts=config.restarts)
    return _pick_min_mai(
        instance, [("enforced", enforced(instance)), ("ls", ls_route(instance, config))]
    )


def walk_weight(instance: Instance, walk: Sequence[int]) -> float:
    w = np.asarray(walk)
    return float(np.sum(instance.travel[w[:-1], w[1:]]))

