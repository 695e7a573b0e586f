"""Instance and solution data model for the six problem families.

Every objective is an exact integer. Routing distances use the truncated
Euclidean metric, so rendered texts round-trip without float drift.
"""
from __future__ import annotations

import enum
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Union

from .errors import KindMismatch


class Kind(str, enum.Enum):
    TSP = "tsp"
    VRP = "vrp"
    KNAPSACK = "knapsack"
    BINPACK = "binpack"
    JSSP = "jssp"
    FSSP = "fssp"

    @property
    def maximize(self) -> bool:
        return self is Kind.KNAPSACK

    @property
    def sense(self) -> str:
        return "max" if self.maximize else "min"


@dataclass(frozen=True)
class Point:
    x: int
    y: int


@dataclass(frozen=True)
class RoutingInstance:
    kind: Kind
    points: tuple[Point, ...]
    demands: tuple[int, ...]
    vehicle_count: int = 1
    capacity: int | None = None  # None = unbounded (TSP)

    def __post_init__(self):
        if self.kind not in (Kind.TSP, Kind.VRP):
            raise KindMismatch(f"routing instance cannot have kind {self.kind}")
        if len(self.points) < 2:
            raise ValueError("routing instance needs a depot and at least one customer")
        if len(self.demands) != len(self.points):
            raise ValueError("one demand per point required")
        if self.demands[0] != 0:
            raise ValueError("depot demand must be 0")
        if any(d < 0 for d in self.demands):
            raise ValueError("demands must be non-negative")
        if self.vehicle_count < 1:
            raise ValueError("vehicle_count must be positive")
        if (self.kind is Kind.TSP) != (self.vehicle_count == 1):
            raise ValueError("TSP instances have exactly one vehicle, VRP instances more")
        if self.kind is Kind.VRP:
            if self.capacity is None or self.capacity <= 0:
                raise ValueError("VRP needs a positive capacity")
            if max(self.demands) > self.capacity:
                raise ValueError("a single demand exceeds vehicle capacity")

    @property
    def n(self) -> int:
        return len(self.points)

    def distance(self, i: int, j: int) -> int:
        return truncated_euclidean(self.points[i], self.points[j])

    def distance_matrix(self) -> list[list[int]]:
        return [[self.distance(i, j) for j in range(self.n)] for i in range(self.n)]


@dataclass(frozen=True)
class KnapsackInstance:
    items: tuple[tuple[int, int], ...]  # (value, weight)
    capacity: int
    kind: Kind = field(default=Kind.KNAPSACK, init=False)

    def __post_init__(self):
        if self.capacity < 0 or any(v < 0 or w < 0 for v, w in self.items):
            raise ValueError("knapsack values, weights and capacity must be non-negative")

    @property
    def n(self) -> int:
        return len(self.items)


@dataclass(frozen=True)
class BinPackInstance:
    weights: tuple[int, ...]  # item id = position
    capacity: int
    kind: Kind = field(default=Kind.BINPACK, init=False)

    def __post_init__(self):
        if self.capacity <= 0:
            raise ValueError("bin capacity must be positive")
        if any(w < 0 or w > self.capacity for w in self.weights):
            raise ValueError("every item weight must lie in [0, capacity]")

    @property
    def n(self) -> int:
        return len(self.weights)

    @property
    def items(self) -> list[tuple[int, int]]:
        return list(enumerate(self.weights))


@dataclass(frozen=True)
class ShopInstance:
    """Job shop or permutation flow shop.

    ``ops[j]`` is job j's ordered list of ``(machine, duration)``. For FSSP the
    machine order is always ``0..m-1``.
    """

    kind: Kind
    jobs: int
    machines: int
    ops: tuple[tuple[tuple[int, int], ...], ...]

    def __post_init__(self):
        if self.kind not in (Kind.JSSP, Kind.FSSP):
            raise KindMismatch(f"shop instance cannot have kind {self.kind}")
        if self.jobs < 1 or self.machines < 1 or len(self.ops) != self.jobs:
            raise ValueError("shape mismatch between jobs and ops")
        for j, route in enumerate(self.ops):
            machines = [m for m, _ in route]
            if len(set(machines)) != len(machines):
                raise ValueError(f"job {j} repeats a machine")
            if any(not 0 <= m < self.machines for m in machines):
                raise ValueError(f"job {j} uses an unknown machine")
            if any(p < 1 for _, p in route):
                raise ValueError("durations must be >= 1")
            if self.kind is Kind.FSSP and machines != list(range(self.machines)):
                raise ValueError("flow shop jobs visit every machine in order")

    @classmethod
    def flow_shop(cls, durations) -> ShopInstance:
        rows = tuple(tuple(int(p) for p in row) for row in durations)
        m = len(rows[0]) if rows else 0
        return cls(Kind.FSSP, len(rows), m, tuple(tuple(enumerate(r)) for r in rows))

    @property
    def durations(self) -> list[list[int]]:
        """Duration matrix indexed [job][machine] (0 where a job skips a machine)."""
        out = [[0] * self.machines for _ in range(self.jobs)]
        for j, route in enumerate(self.ops):
            for m, p in route:
                out[j][m] = p
        return out

    @property
    def n_ops(self) -> int:
        return sum(len(r) for r in self.ops)


ProblemInstance = Union[RoutingInstance, KnapsackInstance, BinPackInstance, ShopInstance]


# --- solutions -------------------------------------------------------------


@dataclass(frozen=True)
class Tour:
    order: tuple[int, ...]  # starts at the depot, closing edge implicit
    objective: int | None = None


@dataclass(frozen=True)
class Routes:
    routes: tuple[tuple[int, ...], ...]  # customer ids only, depot implicit at both ends
    objective: int | None = None


@dataclass(frozen=True)
class Picks:
    items: tuple[int, ...]
    objective: int | None = None


@dataclass(frozen=True)
class Packing:
    bins: tuple[tuple[int, ...], ...]
    objective: int | None = None


@dataclass(frozen=True, order=True)
class ScheduledOp:
    job: int
    machine: int
    start: int
    duration: int

    @property
    def end(self) -> int:
        return self.start + self.duration


@dataclass(frozen=True)
class Schedule:
    ops: tuple[ScheduledOp, ...]
    objective: int | None = None


@dataclass(frozen=True)
class Permutation:
    """Flow shop job order; ``starts[j][k]`` is job j's start on machine k."""

    order: tuple[int, ...]
    starts: tuple[tuple[int, ...], ...] | None = None
    objective: int | None = None


Solution = Union[Tour, Routes, Picks, Packing, Schedule, Permutation]

_SOLUTION_TYPES = {
    Kind.TSP: (Tour, Routes),
    Kind.VRP: (Routes,),
    Kind.KNAPSACK: (Picks,),
    Kind.BINPACK: (Packing,),
    Kind.JSSP: (Schedule,),
    Kind.FSSP: (Permutation,),
}


@dataclass(frozen=True)
class FeasibilityVerdict:
    violations: tuple[tuple[str, str], ...] = ()

    @property
    def feasible(self) -> bool:
        return not self.violations


def truncated_euclidean(a: Point, b: Point) -> int:
    return math.isqrt((a.x - b.x) ** 2 + (a.y - b.y) ** 2)


def _check_kind(instance, solution) -> None:
    allowed = _SOLUTION_TYPES[instance.kind]
    if not isinstance(solution, allowed):
        raise KindMismatch(f"{type(solution).__name__} is not a {instance.kind.value} solution")


def route_length(instance: RoutingInstance, nodes) -> int:
    """Closed-walk length depot -> nodes... -> depot."""
    walk = [0, *nodes, 0]
    return sum(instance.distance(a, b) for a, b in zip(walk, walk[1:]))


def tour_length(instance: RoutingInstance, order) -> int:
    if not order:
        return 0
    closed = [*order, order[0]]
    return sum(instance.distance(a, b) for a, b in zip(closed, closed[1:]))


def flow_shop_starts(instance: ShopInstance, order) -> tuple[tuple[int, ...], ...]:
    """Earliest start times for a job order (both flow shop recurrences tight)."""
    p = instance.durations
    m = instance.machines
    starts = [[0] * m for _ in range(instance.jobs)]
    machine_free = [0] * m
    for j in order:
        ready = 0
        for k in range(m):
            s = max(ready, machine_free[k])
            starts[j][k] = s
            ready = machine_free[k] = s + p[j][k]
    return tuple(tuple(row) for row in starts)


def flow_shop_makespan(instance: ShopInstance, order) -> int:
    p = instance.durations
    free = [0] * instance.machines
    for j in order:
        ready = 0
        for k in range(instance.machines):
            ready = free[k] = max(ready, free[k]) + p[j][k]
    return free[-1] if order else 0


def permutation_schedule(instance: ShopInstance, solution: Permutation) -> tuple[tuple[int, ...], ...]:
    if solution.starts is not None:
        return solution.starts
    return flow_shop_starts(instance, solution.order)


def objective_value(instance: ProblemInstance, solution: Solution) -> int:
    """Recompute the objective from the solution's structure (stored value ignored)."""
    _check_kind(instance, solution)
    if isinstance(solution, Tour):
        return tour_length(instance, solution.order)
    if isinstance(solution, Routes):
        return sum(route_length(instance, r) for r in solution.routes)
    if isinstance(solution, Picks):
        return sum(instance.items[i][0] for i in solution.items if 0 <= i < instance.n)
    if isinstance(solution, Packing):
        return sum(1 for b in solution.bins if b)
    if isinstance(solution, Schedule):
        return max((op.end for op in solution.ops), default=0)
    starts = permutation_schedule(instance, solution)
    p = instance.durations
    return max(
        (starts[j][k] + p[j][k] for j in solution.order if 0 <= j < instance.jobs for k in range(instance.machines)),
        default=0,
    )


def check_feasible(instance: ProblemInstance, solution: Solution) -> FeasibilityVerdict:
    _check_kind(instance, solution)
    if isinstance(solution, Tour):
        found = _tour_violations(instance, solution)
    elif isinstance(solution, Routes):
        found = _routes_violations(instance, solution)
    elif isinstance(solution, Picks):
        found = _picks_violations(instance, solution)
    elif isinstance(solution, Packing):
        found = _packing_violations(instance, solution)
    elif isinstance(solution, Schedule):
        found = _schedule_violations(instance, solution)
    else:
        found = _permutation_violations(instance, solution)
    if not found and solution.objective is not None:
        actual = objective_value(instance, solution)
        if actual != solution.objective:
            found.append(("objective", f"declared {solution.objective}, recomputed {actual}"))
    return FeasibilityVerdict(tuple(found))


def _tour_violations(inst: RoutingInstance, sol: Tour) -> list:
    out = []
    if not sol.order or sol.order[0] != 0:
        out.append(("depot", "tour must start at the depot (node 0)"))
    if sorted(sol.order) != list(range(inst.n)):
        out.append(("coverage", "tour is not a permutation of all nodes"))
    return out


def _routes_violations(inst: RoutingInstance, sol: Routes) -> list:
    out = []
    if len(sol.routes) > inst.vehicle_count:
        out.append(("vehicles", f"{len(sol.routes)} routes for {inst.vehicle_count} vehicles"))
    seen = Counter()
    for k, route in enumerate(sol.routes):
        for c in route:
            if c == 0:
                out.append(("depot", f"route {k} passes through the depot mid-route"))
            elif not 0 < c < inst.n:
                out.append(("node", f"route {k} visits unknown node {c}"))
            else:
                seen[c] += 1
        if inst.capacity is not None:
            load = sum(inst.demands[c] for c in route if 0 <= c < inst.n)
            if load > inst.capacity:
                out.append(("capacity", f"route {k} load {load} > {inst.capacity}"))
    for c in range(1, inst.n):
        if seen[c] != 1:
            out.append(("coverage", f"customer {c} visited {seen[c]} times"))
    return out


def _picks_violations(inst: KnapsackInstance, sol: Picks) -> list:
    out = []
    counts = Counter(sol.items)
    for i, c in sorted(counts.items()):
        if not 0 <= i < inst.n:
            out.append(("item", f"unknown item {i}"))
        elif c > 1:
            out.append(("duplicate", f"item {i} picked {c} times"))
    weight = sum(inst.items[i][1] for i in counts if 0 <= i < inst.n)
    if weight > inst.capacity:
        out.append(("capacity", f"total weight {weight} > {inst.capacity}"))
    return out


def _packing_violations(inst: BinPackInstance, sol: Packing) -> list:
    out = []
    seen = Counter()
    for k, b in enumerate(sol.bins):
        load = 0
        for i in b:
            if not 0 <= i < inst.n:
                out.append(("item", f"bin {k} holds unknown item {i}"))
                continue
            seen[i] += 1
            load += inst.weights[i]
        if load > inst.capacity:
            out.append(("capacity", f"bin {k} load {load} > {inst.capacity}"))
    for i in range(inst.n):
        if seen[i] != 1:
            out.append(("coverage", f"item {i} assigned {seen[i]} times"))
    return out


def _schedule_violations(inst: ShopInstance, sol: Schedule) -> list:
    out = []
    by_key: dict[tuple[int, int], list[ScheduledOp]] = {}
    for op in sol.ops:
        by_key.setdefault((op.job, op.machine), []).append(op)
        if op.start < 0:
            out.append(("start", f"J{op.job}-M{op.machine} starts before 0"))
    for (j, m), ops in sorted(by_key.items()):
        if not 0 <= j < inst.jobs or m not in dict(inst.ops[j]):
            out.append(("operation", f"J{j}-M{m} is not an operation of the instance"))
        elif len(ops) > 1:
            out.append(("duplicate", f"J{j}-M{m} scheduled {len(ops)} times"))
    for j, route in enumerate(inst.ops):
        ready = 0
        for m, p in route:
            ops = by_key.get((j, m))
            if not ops:
                out.append(("coverage", f"J{j}-M{m} never scheduled"))
                continue
            op = ops[0]
            if op.duration != p:
                out.append(("duration", f"J{j}-M{m} lasts {op.duration}, expected {p}"))
            if op.start < ready:
                out.append(("precedence", f"J{j}-M{m} starts at {op.start} before job ready {ready}"))
            ready = op.start + op.duration
    by_machine: dict[int, list[ScheduledOp]] = {}
    for ops in by_key.values():
        by_machine.setdefault(ops[0].machine, []).append(ops[0])
    for m, ops in sorted(by_machine.items()):
        ops.sort(key=lambda o: (o.start, o.job))
        for a, b in zip(ops, ops[1:]):
            if b.start < a.end:
                out.append(("machine_conflict", f"M{m}: J{a.job} and J{b.job} overlap"))
    return out


def _permutation_violations(inst: ShopInstance, sol: Permutation) -> list:
    out = []
    if sorted(sol.order) != list(range(inst.jobs)):
        return [("coverage", "order is not a permutation of all jobs")]
    starts = permutation_schedule(inst, sol)
    if len(starts) != inst.jobs or any(len(r) != inst.machines for r in starts):
        return [("shape", "start table does not match jobs x machines")]
    p = inst.durations
    prev = None
    for j in sol.order:
        for k in range(inst.machines):
            s = starts[j][k]
            if s < 0:
                out.append(("start", f"job {j} machine {k} starts before 0"))
            if k > 0 and s < starts[j][k - 1] + p[j][k - 1]:
                out.append(("machine_order", f"job {j} starts machine {k} before finishing machine {k - 1}"))
            if prev is not None and s < starts[prev][k] + p[prev][k]:
                out.append(("job_sequence", f"job {j} starts machine {k} before job {prev} leaves it"))
        prev = j
    return out


# --- canonical JSON --------------------------------------------------------


def instance_to_json(instance: ProblemInstance) -> dict:
    kind = instance.kind
    if isinstance(instance, RoutingInstance):
        return {
            "problem": kind.value,
            "points": [[p.x, p.y] for p in instance.points],
            "demands": list(instance.demands),
            "vehicle_count": instance.vehicle_count,
            "capacity": instance.capacity,
        }
    if isinstance(instance, KnapsackInstance):
        return {"problem": kind.value, "items": [list(it) for it in instance.items], "capacity": instance.capacity}
    if isinstance(instance, BinPackInstance):
        return {"problem": kind.value, "items": [list(it) for it in instance.items], "capacity": instance.capacity}
    if kind is Kind.FSSP:
        return {"problem": kind.value, "jobs": instance.jobs, "machines": instance.machines, "durations": instance.durations}
    return {
        "problem": kind.value,
        "jobs": instance.jobs,
        "machines": instance.machines,
        "ops": [[[m, p] for m, p in route] for route in instance.ops],
    }


def instance_from_json(data: dict) -> ProblemInstance:
    kind = Kind(data["problem"])
    if kind in (Kind.TSP, Kind.VRP):
        return RoutingInstance(
            kind,
            tuple(Point(int(x), int(y)) for x, y in data["points"]),
            tuple(int(d) for d in data.get("demands") or [0] * len(data["points"])),
            int(data.get("vehicle_count", 1)),
            None if data.get("capacity") is None else int(data["capacity"]),
        )
    if kind is Kind.KNAPSACK:
        return KnapsackInstance(tuple((int(v), int(w)) for v, w in data["items"]), int(data["capacity"]))
    if kind is Kind.BINPACK:
        items = sorted((int(i), int(w)) for i, w in data["items"])
        if [i for i, _ in items] != list(range(len(items))):
            raise ValueError("bin packing item ids must be 0..n-1")
        return BinPackInstance(tuple(w for _, w in items), int(data["capacity"]))
    if kind is Kind.FSSP:
        return ShopInstance.flow_shop(data["durations"])
    ops = tuple(tuple((int(m), int(p)) for m, p in route) for route in data["ops"])
    machines = int(data.get("machines") or 1 + max(m for route in ops for m, _ in route))
    return ShopInstance(Kind.JSSP, len(ops), machines, ops)


def solution_to_json(solution: Solution) -> dict:
    if isinstance(solution, Tour):
        body = {"tour": list(solution.order)}
    elif isinstance(solution, Routes):
        body = {"routes": [list(r) for r in solution.routes]}
    elif isinstance(solution, Picks):
        body = {"picks": list(solution.items)}
    elif isinstance(solution, Packing):
        body = {"bins": [list(b) for b in solution.bins]}
    elif isinstance(solution, Schedule):
        body = {"schedule": [[o.job, o.machine, o.start, o.duration] for o in solution.ops]}
    else:
        body = {"permutation": list(solution.order)}
        if solution.starts is not None:
            body["starts"] = [list(r) for r in solution.starts]
    return {"solution": body, "objective": solution.objective}


def solution_from_json(data: dict) -> Solution:
    body, obj = data["solution"], data.get("objective")
    if "tour" in body:
        return Tour(tuple(body["tour"]), obj)
    if "routes" in body:
        return Routes(tuple(tuple(r) for r in body["routes"]), obj)
    if "picks" in body:
        return Picks(tuple(body["picks"]), obj)
    if "bins" in body:
        return Packing(tuple(tuple(b) for b in body["bins"]), obj)
    if "schedule" in body:
        return Schedule(tuple(ScheduledOp(*map(int, row)) for row in body["schedule"]), obj)
    starts = body.get("starts")
    return Permutation(
        tuple(body["permutation"]),
        None if starts is None else tuple(tuple(r) for r in starts),
        obj,
    )


def size_label(instance: ProblemInstance) -> str:
    """Size key used when aggregating results per problem and size."""
    if isinstance(instance, ShopInstance):
        return f"{instance.jobs}x{instance.machines}"
    return str(instance.n)
