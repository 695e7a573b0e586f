"""Knapsack dynamic program and bin packing (first-fit decreasing + exact B&B)."""
from __future__ import annotations

import math

import numpy as np

from ..errors import WorkBoundExceeded
from ..problems import BinPackInstance, KnapsackInstance, Packing, Picks
from .base import Deadline, SolveResult, stopwatch

DEFAULT_WORK_BOUND = 10**8
EXACT_BINPACK_LIMIT = 15


def knapsack_exact(instance: KnapsackInstance, work_bound: int = DEFAULT_WORK_BOUND) -> SolveResult:
    W, n = instance.capacity, instance.n
    if n * (W + 1) > work_bound:
        raise WorkBoundExceeded(f"{n} x {W + 1} table exceeds {work_bound} cells")
    with stopwatch() as sw:
        best = np.zeros(W + 1, dtype=np.int64)
        take = np.zeros((n, W + 1), dtype=bool)
        for i, (v, w) in enumerate(instance.items):
            if w > W:
                continue
            cand = best[: W + 1 - w] + v
            better = cand > best[w:]  # strict: ties keep the item out
            take[i, w:] = better
            best[w:] = np.where(better, cand, best[w:])
        picks = []
        c = W
        for i in range(n - 1, -1, -1):
            if take[i, c]:
                picks.append(i)
                c -= instance.items[i][1]
        picks = tuple(sorted(picks))
        value = sum(instance.items[i][0] for i in picks)
    return SolveResult(Picks(picks, value), "dp", sw["elapsed"], True)


def first_fit_decreasing(instance: BinPackInstance) -> list[list[int]]:
    order = sorted(range(instance.n), key=lambda i: (-instance.weights[i], i))
    bins: list[list[int]] = []
    loads: list[int] = []
    for i in order:
        w = instance.weights[i]
        k = next((k for k, load in enumerate(loads) if load + w <= instance.capacity), None)
        if k is None:
            bins.append([i])
            loads.append(w)
        else:
            bins[k].append(i)
            loads[k] += w
    return bins


def _exact_bins(instance: BinPackInstance, upper: list[list[int]], deadline: Deadline) -> list[list[int]]:
    cap = instance.capacity
    order = sorted(range(instance.n), key=lambda i: (-instance.weights[i], i))
    weights = [instance.weights[i] for i in order]
    suffix = [0] * (len(order) + 1)
    for t in range(len(order) - 1, -1, -1):
        suffix[t] = suffix[t + 1] + weights[t]
    lower = math.ceil(suffix[0] / cap)
    best = {"bins": [list(b) for b in upper]}
    loads: list[int] = []
    members: list[list[int]] = []

    def dfs(t: int) -> bool:
        deadline.check()
        if len(loads) >= len(best["bins"]):
            return False
        if t == len(order):
            best["bins"] = [list(m) for m in members]
            return len(loads) == lower
        free = sum(cap - load for load in loads)
        if len(loads) + math.ceil(max(0, suffix[t] - free) / cap) >= len(best["bins"]):
            return False
        w = weights[t]
        tried = set()
        for k in range(len(loads)):
            if loads[k] + w <= cap and loads[k] not in tried:
                tried.add(loads[k])
                loads[k] += w
                members[k].append(order[t])
                if dfs(t + 1):
                    return True
                loads[k] -= w
                members[k].pop()
        loads.append(w)
        members.append([order[t]])
        done = dfs(t + 1)
        loads.pop()
        members.pop()
        return done

    if len(upper) > lower:
        dfs(0)
    return best["bins"]


def _canonical(bins) -> tuple[tuple[int, ...], ...]:
    return tuple(sorted(tuple(sorted(b)) for b in bins if b))


def binpack_solve(instance: BinPackInstance, time_limit: float | None = None) -> SolveResult:
    """First-fit decreasing; exact branch and bound refines it for n <= 15."""
    with stopwatch() as sw:
        bins = first_fit_decreasing(instance)
        lower = math.ceil(sum(instance.weights) / instance.capacity) if instance.n else 0
        optimal = len(bins) == lower
        method = "ffd"
        if instance.n <= EXACT_BINPACK_LIMIT:
            bins = _exact_bins(instance, bins, Deadline(time_limit))
            optimal = True
            method = "ffd+branch_and_bound"
        packed = _canonical(bins)
    return SolveResult(Packing(packed, len(packed)), method, sw["elapsed"], optimal)
