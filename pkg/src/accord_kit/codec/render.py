"""Render solutions as ACCORD text or as list-of-lists text.

Spacing is fixed and canonical, so rendered fixtures
compare byte for byte.
"""
from __future__ import annotations

from ..problems import (
    BinPackInstance,
    Kind,
    KnapsackInstance,
    Packing,
    Permutation,
    Picks,
    ProblemInstance,
    RoutingInstance,
    Routes,
    Schedule,
    ShopInstance,
    Tour,
    _check_kind,
    permutation_schedule,
    truncated_euclidean,
)

MAKESPAN_LABEL = "Maximum end completion time or Makespan"


def _walks(instance: RoutingInstance, solution) -> list[list[int]]:
    """Node walks including the depot at both ends."""
    if isinstance(solution, Tour):
        return [[*solution.order, solution.order[0] if solution.order else 0]]
    return [[0, *route, 0] for route in solution.routes]


def _node(instance: RoutingInstance, i: int) -> str:
    p = instance.points[i]
    return f"({i}): ({p.x}, {p.y})"


def _sorted_ops(solution: Schedule):
    return sorted(solution.ops, key=lambda o: (o.start, o.job, o.machine))


def _flow_rows(instance: ShopInstance, solution: Permutation):
    starts = permutation_schedule(instance, solution)
    p = instance.durations
    return [(j, [(k, starts[j][k], p[j][k]) for k in range(instance.machines)]) for j in solution.order]


def render_accord(instance: ProblemInstance, solution) -> str:
    _check_kind(instance, solution)
    if isinstance(instance, KnapsackInstance):
        return _knapsack_accord(instance, solution)
    if isinstance(instance, BinPackInstance):
        return _binpack_accord(instance, solution)
    if isinstance(instance, RoutingInstance):
        return _routing_accord(instance, solution)
    if instance.kind is Kind.JSSP:
        return _jssp_accord(solution)
    return _fssp_accord(instance, solution)


def _knapsack_accord(inst: KnapsackInstance, sol: Picks) -> str:
    W = inst.capacity
    value = weight = 0
    steps = []
    for i in sol.items:
        v, w = inst.items[i]
        steps.append(f"[[{v}, {w}] -> value:{value}+{v}={value + v}, weight:{weight}+{w}={weight + w}<={W}]")
        value += v
        weight += w
    return "\n".join(["Solution:", ",\n".join(steps), "", f"Total Value: {value}", f"Total Weight: {weight}<={W}"])


def _binpack_accord(inst: BinPackInstance, sol: Packing) -> str:
    lines = []
    bins = [b for b in sol.bins if b]
    for k, b in enumerate(bins, start=1):
        load = 0
        cells = []
        for i in b:
            load += inst.weights[i]
            cells.append(f"({i}, {inst.weights[i]})->{load}")
        cells[-1] += f"<={inst.capacity}"
        lines.append(f"Bin {k}:")
        lines.append(" ".join(cells))
    lines.append(f"Total bins required: {len(bins)}")
    return "\n".join(lines)


def _routing_accord(inst: RoutingInstance, sol) -> str:
    lines = []
    total = 0
    for walk in _walks(inst, sol):
        parts = [_node(inst, walk[0])]
        for a, b in zip(walk, walk[1:]):
            d = truncated_euclidean(inst.points[a], inst.points[b])
            total += d
            parts.append(f"{_node(inst, b)} + {d}")
        lines.append("Vehicle Route: " + " -> ".join(parts))
    lines.append(f"Overall Total Distance: {total}")
    return "\n".join(lines)


def _jssp_accord(sol: Schedule) -> str:
    ops = _sorted_ops(sol)
    lines = ["Solution:"]
    lines += [f"J{o.job}-M{o.machine}: {o.start}+{o.duration} -> {o.end}," for o in ops]
    lines.append(f"{MAKESPAN_LABEL}: {max((o.end for o in ops), default=0)}")
    return "\n".join(lines)


def _fssp_accord(inst: ShopInstance, sol: Permutation) -> str:
    lines = []
    makespan = 0
    for j, cells in _flow_rows(inst, sol):
        chain = " -> ".join(f"M{k + 1}({s}+{p}={s + p})" for k, s, p in cells)
        lines.append(f"J{j + 1}: {chain}")
        makespan = max([makespan] + [s + p for _, s, p in cells])
    lines += ["", f"{MAKESPAN_LABEL}: {makespan}"]
    return "\n".join(lines)


def render_list(instance: ProblemInstance, solution) -> str:
    _check_kind(instance, solution)
    if isinstance(instance, KnapsackInstance):
        picked = [instance.items[i] for i in solution.items]
        pairs = ", ".join(f"({v}, {w})" for v, w in picked)
        values = [v for v, _ in picked] or [0]
        weights = [w for _, w in picked] or [0]
        return (
            f"Solution: [{pairs}]\n"
            f"  Value: {'+'.join(map(str, values))}={sum(values)}\n"
            f"  Weight: {'+'.join(map(str, weights))}={sum(weights)}<={instance.capacity}"
        )
    if isinstance(instance, BinPackInstance):
        bins = [b for b in solution.bins if b]
        body = ", ".join("[" + ", ".join(map(str, b)) + "]" for b in bins)
        return f"The minimum number of bins required is {len(bins)}. The bin assignments are: [{body}]."
    if isinstance(instance, RoutingInstance):
        lines = []
        total = 0
        for walk in _walks(instance, solution):
            total += sum(instance.distance(a, b) for a, b in zip(walk, walk[1:]))
            lines.append("[" + ", ".join(_node(instance, i) for i in walk) + "]")
        lines.append(f"Overall Total Distance: {total}")
        return "\n".join(lines)
    if instance.kind is Kind.JSSP:
        ops = _sorted_ops(solution)
        quads = [(o.job, o.machine, o.start, o.duration) for o in ops]
        makespan = max((o.end for o in ops), default=0)
    else:
        quads = [(j + 1, k + 1, s, p) for j, cells in _flow_rows(instance, solution) for k, s, p in cells]
        # stable sort keeps permutation order among equal start times
        quads.sort(key=lambda q: q[2])
        makespan = max((q[2] + q[3] for q in quads), default=0)
    body = ", ".join("[" + ", ".join(map(str, q)) + "]" for q in quads)
    return f"[{body}]\n{MAKESPAN_LABEL}: {makespan}"


def render(instance: ProblemInstance, solution, fmt: str = "accord") -> str:
    if fmt == "accord":
        return render_accord(instance, solution)
    if fmt == "list":
        return render_list(instance, solution)
    raise ValueError(f"unknown format {fmt!r}")
