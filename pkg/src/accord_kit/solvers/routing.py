"""TSP and VRP solvers over truncated Euclidean distances."""
from __future__ import annotations

import numpy as np

from ..errors import InfeasibleInstance, KindMismatch, TooLarge
from ..problems import Kind, RoutingInstance, Routes, Tour, route_length, tour_length
from .base import SolveResult, stopwatch

HELD_KARP_LIMIT = 15


def tsp_exact(instance: RoutingInstance) -> SolveResult:
    """Held-Karp dynamic program, vectorised over the last-visited node."""
    if instance.n > HELD_KARP_LIMIT:
        raise TooLarge(f"Held-Karp is limited to {HELD_KARP_LIMIT} nodes, got {instance.n}")
    with stopwatch() as sw:
        D = np.array(instance.distance_matrix(), dtype=np.int64)
        k = instance.n - 1
        inf = np.int64(1) << 50
        dp = np.full((1 << k, k), inf, dtype=np.int64)
        parent = np.full((1 << k, k), -1, dtype=np.int64)
        inner = D[1:, 1:]
        for j in range(k):
            dp[1 << j, j] = D[0, j + 1]
        for mask in range(1, 1 << k):
            if mask & (mask - 1) == 0:
                continue
            bits = np.array([b for b in range(k) if mask >> b & 1])
            prev = mask ^ (1 << bits)
            cand = dp[prev] + inner[:, bits].T
            dp[mask, bits] = cand.min(axis=1)
            parent[mask, bits] = cand.argmin(axis=1)
        full = (1 << k) - 1
        closing = dp[full] + D[1:, 0]
        last = int(closing.argmin())
        order = []
        mask = full
        while last >= 0:
            order.append(last + 1)
            last, mask = int(parent[mask, last]), mask ^ (1 << last)
        order = (0, *reversed(order))
    return SolveResult(Tour(order, tour_length(instance, order)), "held_karp", sw["elapsed"], True)


def _nearest_neighbor(D, start, nodes) -> list[int]:
    path = [start]
    left = sorted(nodes)
    while left:
        here = path[-1]
        nxt = min(left, key=lambda c: (D[here][c], c))
        left.remove(nxt)
        path.append(nxt)
    return path


def two_opt(D, walk: list[int]) -> list[int]:
    """First-improvement 2-opt on a closed walk whose first node stays fixed.

    ``walk`` lists nodes without the closing return. Every accepted move
    strictly shortens the walk, so the loop terminates.
    """
    walk = list(walk)
    n = len(walk)
    improved = True
    while improved:
        improved = False
        for i in range(1, n - 1):
            a, b = walk[i - 1], walk[i]
            for j in range(i + 1, n):
                c, d = walk[j], walk[(j + 1) % n]
                if D[a][c] + D[b][d] < D[a][b] + D[c][d]:
                    walk[i : j + 1] = reversed(walk[i : j + 1])
                    improved = True
                    a, b = walk[i - 1], walk[i]
    return walk


def tsp_heuristic(instance: RoutingInstance) -> SolveResult:
    """Cheapest-arc construction from the depot followed by 2-opt."""
    with stopwatch() as sw:
        D = instance.distance_matrix()
        order = two_opt(D, _nearest_neighbor(D, 0, range(1, instance.n)))
        order = tuple(order)
    return SolveResult(Tour(order, tour_length(instance, order)), "cheapest_arc+2opt", sw["elapsed"], False)


def _insertion_routes(inst: RoutingInstance, D) -> list[list[int]] | None:
    V, Q, dem = inst.vehicle_count, inst.capacity, inst.demands
    routes: list[list[int]] = [[] for _ in range(V)]
    loads = [0] * V
    left = set(range(1, inst.n))
    while left:
        best = None
        for c in sorted(left):
            for r in range(V):
                if loads[r] + dem[c] > Q:
                    continue
                route = routes[r]
                for pos in range(len(route) + 1):
                    a = route[pos - 1] if pos else 0
                    b = route[pos] if pos < len(route) else 0
                    cost = D[a][c] + D[c][b] - D[a][b]
                    if best is None or cost < best[0]:
                        best = (cost, c, r, pos)
        if best is None:
            return None
        _, c, r, pos = best
        routes[r].insert(pos, c)
        loads[r] += dem[c]
        left.remove(c)
    return routes


def _ffd_routes(inst: RoutingInstance, D) -> list[list[int]] | None:
    V, Q, dem = inst.vehicle_count, inst.capacity, inst.demands
    groups: list[list[int]] = [[] for _ in range(V)]
    loads = [0] * V
    for c in sorted(range(1, inst.n), key=lambda c: (-dem[c], c)):
        r = next((r for r in range(V) if loads[r] + dem[c] <= Q), None)
        if r is None:
            return None
        groups[r].append(c)
        loads[r] += dem[c]
    return [_nearest_neighbor(D, 0, g)[1:] for g in groups]


def vrp_heuristic(instance: RoutingInstance) -> SolveResult:
    """Cheapest feasible insertion respecting capacity, then 2-opt per route.

    Falls back to a first-fit-decreasing assignment when greedy insertion
    strands a customer. Unused vehicles keep depot-only routes.
    """
    if instance.kind is not Kind.VRP:
        raise KindMismatch("vrp_heuristic needs a VRP instance")
    dem, Q, V = instance.demands, instance.capacity, instance.vehicle_count
    if max(dem) > Q or sum(dem) > V * Q:
        raise InfeasibleInstance("demands cannot fit the fleet")
    with stopwatch() as sw:
        D = instance.distance_matrix()
        routes = _insertion_routes(instance, D) or _ffd_routes(instance, D)
        if routes is None:
            raise InfeasibleInstance("no capacity-feasible assignment found")
        improved = []
        for r in routes:
            improved.append(tuple(two_opt(D, [0, *r])[1:]) if r else ())
        improved.sort(key=lambda r: not r)  # used routes first, order otherwise kept
        solution = Routes(tuple(improved), sum(route_length(instance, r) for r in improved))
    return SolveResult(solution, "cheapest_insertion+2opt", sw["elapsed"], False)
