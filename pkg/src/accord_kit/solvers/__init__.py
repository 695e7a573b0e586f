"""Reference solvers: exact oracles for small instances, named heuristics beyond."""
from __future__ import annotations

from ..problems import Kind, ProblemInstance
from .base import SolveResult
from .packing import binpack_solve, first_fit_decreasing, knapsack_exact
from .routing import HELD_KARP_LIMIT, tsp_exact, tsp_heuristic, two_opt, vrp_heuristic
from .shop import (
    RULES,
    TINY_JSSP_OPS,
    fssp_johnson,
    fssp_neh,
    jssp_dispatch,
    jssp_exact_tiny,
    neh_order,
)

AUTO_TSP_EXACT = 12

__all__ = [
    "SolveResult",
    "binpack_solve",
    "first_fit_decreasing",
    "fssp_johnson",
    "fssp_neh",
    "jssp_dispatch",
    "jssp_exact_tiny",
    "knapsack_exact",
    "neh_order",
    "solve",
    "tsp_exact",
    "tsp_heuristic",
    "two_opt",
    "vrp_heuristic",
]


def _best_dispatch(instance) -> SolveResult:
    results = [jssp_dispatch(instance, rule) for rule in RULES]
    return min(results, key=lambda r: r.objective)


def solve(instance: ProblemInstance, method: str = "auto", time_limit: float | None = None) -> SolveResult:
    """Pick a solver for the instance.

    ``auto`` uses an exact method where it is cheap and the named heuristic
    otherwise; ``exact`` and ``heuristic`` force one side.
    """
    kind = instance.kind
    if method not in ("auto", "exact", "heuristic"):
        raise ValueError(f"unknown solver choice {method!r}")
    if kind is Kind.KNAPSACK:
        return knapsack_exact(instance)
    if kind is Kind.BINPACK:
        return binpack_solve(instance, time_limit=time_limit)
    if kind is Kind.VRP:
        return vrp_heuristic(instance)
    if kind is Kind.FSSP:
        if method == "exact" and instance.machines == 2:
            return fssp_johnson(instance)
        return fssp_neh(instance)
    if kind is Kind.TSP:
        exact = method == "exact" or (method == "auto" and instance.n <= AUTO_TSP_EXACT)
        return tsp_exact(instance) if exact else tsp_heuristic(instance)
    exact = method == "exact" or (method == "auto" and instance.n_ops <= TINY_JSSP_OPS)
    return jssp_exact_tiny(instance, time_limit=time_limit) if exact else _best_dispatch(instance)
