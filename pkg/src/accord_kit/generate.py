"""Seeded synthetic instances and JSONL dataset emission.

Randomness comes from numpy's PCG64 bit generator. A record's seed is
derived from ``(spec seed, record index)`` through ``SeedSequence`` so any
single record can be regenerated on its own.
"""
from __future__ import annotations

import json
import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterator

import numpy as np

from .codec import render_accord, render_list, validate_accord, validate_list
from .errors import InfeasibleSpec, SolverTimeout, ValidationFailure
from .problems import (
    BinPackInstance,
    Kind,
    KnapsackInstance,
    Point,
    RoutingInstance,
    ShopInstance,
    instance_to_json,
    solution_to_json,
)
from .solvers import solve

log = logging.getLogger(__name__)

ROUTING_SIZES = (5, 8, 10, 12, 15, 20, 50, 75, 100)
VEHICLE_COUNTS = tuple(range(1, 11))
KNAPSACK_SIZES = (5, 8, 10, 12, 15, 20, 25, 30, 50, 100)
BINPACK_SIZES = (5, 8, 12, 15, 20, 50, 100)
BINPACK_WEIGHT_MAX = (10, 20, 50, 100)
TARGET_BINS = tuple(range(1, 11))
DIFFICULTIES = ("easy", "medium", "hard")
JSSP_SHAPES = ((2, 2), (2, 6), (3, 4), (5, 5), (10, 10), (20, 20), (50, 20), (100, 20))
FSSP_SHAPES = ((5, 1), (5, 2), (10, 2), (20, 2), (50, 2), (2, 10), (2, 50))

COORD_MAX = 100
DEMAND_RANGE = (1, 10)
JSSP_DURATION_RANGE = (5, 300)
FSSP_DURATION_RANGE = (1, 100)


def rng_for(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def record_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1, np.uint64)[0])


def _ints(rng, low: int, high: int, size=None):
    """Uniform integers on the closed range [low, high]."""
    return rng.integers(low, high, size=size, endpoint=True)


def _ceil_frac(total: int, num: int, den: int) -> int:
    return -(-total * num // den)


def gen_routing(n: int, v: int, seed: int) -> RoutingInstance:
    if n < 2 or v < 1:
        raise InfeasibleSpec("routing needs n >= 2 and v >= 1")
    rng = rng_for(seed)
    xy = _ints(rng, 0, COORD_MAX, size=(n, 2))
    demands = [0] + [int(d) for d in _ints(rng, *DEMAND_RANGE, size=n - 1)]
    points = tuple(Point(int(x), int(y)) for x, y in xy)
    if v == 1:
        return RoutingInstance(Kind.TSP, points, tuple(demands), 1, None)
    q = max(max(demands), _ceil_frac(sum(demands), 6, 5 * v))
    while not _fits(demands[1:], v, q):
        q += 1
    return RoutingInstance(Kind.VRP, points, tuple(demands), v, q)


def _fits(demands, v: int, q: int) -> bool:
    loads = [0] * v
    for d in sorted(demands, reverse=True):
        k = next((k for k in range(v) if loads[k] + d <= q), None)
        if k is None:
            return False
        loads[k] += d
    return True


def gen_knapsack(n: int, difficulty: str, seed: int) -> KnapsackInstance:
    if n < 1:
        raise InfeasibleSpec("knapsack needs at least one item")
    rng = rng_for(seed)
    if difficulty == "easy":
        values, weights = _ints(rng, 1, 20, size=n), _ints(rng, 1, 20, size=n)
        num, den = 4, 5
    elif difficulty == "medium":
        values, weights = _ints(rng, 1, 100, size=n), _ints(rng, 1, 100, size=n)
        num, den = 1, 2
    elif difficulty == "hard":
        weights = _ints(rng, 1, 100, size=n)
        values = np.maximum(weights + _ints(rng, -5, 5, size=n), 1)
        num, den = 3, 10
    else:
        raise InfeasibleSpec(f"unknown difficulty {difficulty!r}")
    items = tuple((int(v), int(w)) for v, w in zip(values, weights))
    return KnapsackInstance(items, _ceil_frac(int(weights.sum()), num, den))


def gen_binpack(n: int, weight_max: int, target_bins: int, seed: int) -> BinPackInstance:
    if target_bins < 1 or target_bins > n:
        raise InfeasibleSpec(f"target bins {target_bins} must lie in [1, n={n}]")
    rng = rng_for(seed)
    weights = tuple(int(w) for w in _ints(rng, 1, weight_max, size=n))
    return BinPackInstance(weights, -(-sum(weights) // target_bins) + weight_max)


def gen_shop(kind: Kind | str, jobs: int, machines: int, seed: int) -> ShopInstance:
    kind = Kind(kind)
    if jobs < 1 or machines < 1:
        raise InfeasibleSpec("shop needs at least one job and one machine")
    rng = rng_for(seed)
    if kind is Kind.FSSP:
        return ShopInstance.flow_shop(_ints(rng, *FSSP_DURATION_RANGE, size=(jobs, machines)).tolist())
    routes = []
    for _ in range(jobs):
        order = rng.permutation(machines)
        durations = _ints(rng, *JSSP_DURATION_RANGE, size=machines)
        routes.append(tuple((int(m), int(p)) for m, p in zip(order, durations)))
    return ShopInstance(Kind.JSSP, jobs, machines, tuple(routes))


# --- prompt texts ----------------------------------------------------------

INSTRUCTIONS = {
    Kind.KNAPSACK: (
        "You are given a paired representation (value, weight): Find a set of items to pack into a container "
        "with a maximum weight capacity = {capacity} that maximizes total value of packed items.",
        "Each item below is listed as (value, weight). Choose which items to put in a knapsack that holds at "
        "most {capacity} units of weight so that the total value is as large as possible.",
        "Select a subset of the (value, weight) items whose combined weight does not exceed the capacity of "
        "{capacity}, maximizing the summed value.",
    ),
    Kind.BINPACK: (
        "Given a list of items (id, weight), determine the minimum number of bins (capacity={capacity}) needed "
        "to pack all items without exceeding the capacity.",
        "Pack every item (id, weight) into bins of capacity {capacity}. Use as few bins as possible and never "
        "exceed a bin's capacity.",
        "Assign the items (id, weight) to containers that each hold {capacity} units so that the number of "
        "containers used is minimal.",
    ),
    Kind.VRP: (
        "Given customers with coordinates and a depot, and multiple vehicles of capacity {capacity}, find the "
        "minimum-length routes serving all customers.",
        "A fleet of {vehicles} vehicles, each carrying at most {capacity} units, starts and ends at the depot. "
        "Plan routes that serve every customer's demand with the shortest total distance.",
        "Route {vehicles} capacitated vehicles (capacity {capacity}) from the depot so that each customer is "
        "visited exactly once and the overall travel distance is minimized.",
    ),
    Kind.TSP: (
        "Given customers with coordinates and a depot, and 1 vehicle, find the minimum-length route serving "
        "all customers.",
        "Find the shortest closed tour that starts at the depot, visits each of the {customers} cities exactly "
        "once, and returns to the depot.",
        "A single traveler leaves the depot and must see every city once before coming back. Give the tour with "
        "the smallest total distance.",
    ),
    Kind.JSSP: (
        "Optimize schedule for {jobs} Jobs (J) across {machines} Machines (M) to minimize makespan. Each M can "
        "process only one J at a time, and once started, J cannot be interrupted.",
        "Schedule {jobs} jobs, each with its own machine order over {machines} machines, so that the last job "
        "finishes as early as possible. A machine handles one operation at a time.",
        "Job shop problem with {jobs} Jobs and {machines} Machines: every J follows its own sequence of "
        "operations. Minimize the makespan without overlapping operations on any M.",
    ),
    Kind.FSSP: (
        "Optimize schedule for {jobs} Jobs (J) across {machines} Machines (M) in a permutation flow shop to "
        "minimize makespan. Every J visits the machines in the same order M1 to M{machines}, and all M process "
        "the jobs in the same sequence.",
        "Find one job sequence for a flow shop with {jobs} jobs and {machines} machines that minimizes the "
        "completion time of the last job on the final machine.",
        "Permutation flowshop: {jobs} Jobs pass through {machines} Machines in identical order. Choose the job "
        "permutation with the smallest makespan.",
    ),
}


def instruction_text(instance, template: int = 0) -> str:
    kind = instance.kind
    fields = {}
    if isinstance(instance, RoutingInstance):
        fields = {"capacity": instance.capacity, "vehicles": instance.vehicle_count, "customers": instance.n - 1}
    elif isinstance(instance, (KnapsackInstance, BinPackInstance)):
        fields = {"capacity": instance.capacity}
    else:
        fields = {"jobs": instance.jobs, "machines": instance.machines}
    return INSTRUCTIONS[kind][template].format(**fields)


def input_text(instance) -> str:
    if isinstance(instance, KnapsackInstance):
        return "[" + ", ".join(f"[{v}, {w}]" for v, w in instance.items) + "]"
    if isinstance(instance, BinPackInstance):
        return "[" + ", ".join(f"({i}, {w})" for i, w in instance.items) + "]"
    if isinstance(instance, RoutingInstance):
        coords = "Coords: " + ", ".join(f"{i}:({p.x}, {p.y})" for i, p in enumerate(instance.points))
        if instance.kind is Kind.TSP:
            return coords
        demands = "Demands: " + ", ".join(f"{i}:{d}" for i, d in enumerate(instance.demands))
        return f"{coords}\n{demands}\nVehicles: {instance.vehicle_count}, Capacity: {instance.capacity}"
    lines = []
    offset = 1 if instance.kind is Kind.FSSP else 0
    for j, route in enumerate(instance.ops):
        lines.append(f"J{j + offset}:")
        lines.append(" ".join(f"M{m + offset}:{p}" for m, p in route))
    return "\n".join(lines)


# --- dataset emission ------------------------------------------------------


@dataclass(frozen=True)
class GenSpec:
    """What to generate. Size fields left as None are drawn per record from the grids."""

    problem: Kind
    count: int = 1
    seed: int = 0
    n: int | None = None
    v: int | None = None
    difficulty: str | None = None
    weight_max: int | None = None
    target_bins: int | None = None
    jobs: int | None = None
    machines: int | None = None
    strict: bool = True

    def __post_init__(self):
        object.__setattr__(self, "problem", Kind(self.problem))
        if self.count < 0:
            raise InfeasibleSpec("count must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise InfeasibleSpec("seed must be a 64-bit unsigned integer")
        for name, value, grid in self._grid_checks():
            if value is not None and value not in grid:
                msg = f"{self.problem.value} {name}={value} is outside the standard grid {grid}"
                if self.strict:
                    raise InfeasibleSpec(msg + " (permissive mode allows it)")
                warnings.warn(msg, stacklevel=3)
        if self.difficulty is not None and self.difficulty not in DIFFICULTIES:
            raise InfeasibleSpec(f"difficulty must be one of {DIFFICULTIES}")
        if self.problem is Kind.TSP and self.v not in (None, 1):
            raise InfeasibleSpec("TSP uses exactly one vehicle")
        if self.problem is Kind.VRP and self.v == 1:
            raise InfeasibleSpec("VRP uses more than one vehicle")

    def _grid_checks(self):
        if self.problem in (Kind.TSP, Kind.VRP):
            return [("n", self.n, ROUTING_SIZES), ("v", self.v, VEHICLE_COUNTS)]
        if self.problem is Kind.KNAPSACK:
            return [("n", self.n, KNAPSACK_SIZES)]
        if self.problem is Kind.BINPACK:
            return [
                ("n", self.n, BINPACK_SIZES),
                ("weight_max", self.weight_max, BINPACK_WEIGHT_MAX),
                ("target_bins", self.target_bins, TARGET_BINS),
            ]
        return []


def _pick(rng, grid):
    return grid[int(rng.integers(len(grid)))]


def build_instance(spec: GenSpec, index: int):
    """Instance, per-record seed, size parameters and template index for record ``index``."""
    seed = record_seed(spec.seed, index)
    rng = np.random.Generator(np.random.PCG64([seed, 1]))
    kind = spec.problem
    if kind in (Kind.TSP, Kind.VRP):
        n = spec.n or _pick(rng, ROUTING_SIZES)
        v = 1 if kind is Kind.TSP else (spec.v or _pick(rng, VEHICLE_COUNTS[1:]))
        instance, size = gen_routing(n, v, seed), {"n": n, "v": v}
    elif kind is Kind.KNAPSACK:
        n = spec.n or _pick(rng, KNAPSACK_SIZES)
        difficulty = spec.difficulty or _pick(rng, DIFFICULTIES)
        instance, size = gen_knapsack(n, difficulty, seed), {"n": n, "difficulty": difficulty}
    elif kind is Kind.BINPACK:
        n = spec.n or _pick(rng, BINPACK_SIZES)
        wmax = spec.weight_max or _pick(rng, BINPACK_WEIGHT_MAX)
        bins = spec.target_bins or _pick(rng, tuple(b for b in TARGET_BINS if b <= n))
        instance, size = gen_binpack(n, wmax, bins, seed), {"n": n, "weight_max": wmax, "target_bins": bins}
    else:
        shapes = JSSP_SHAPES if kind is Kind.JSSP else FSSP_SHAPES
        jobs, machines = _pick(rng, shapes)
        jobs, machines = spec.jobs or jobs, spec.machines or machines
        instance, size = gen_shop(kind, jobs, machines, seed), {"jobs": jobs, "machines": machines}
    template = int(rng.integers(len(INSTRUCTIONS[kind])))
    return instance, seed, size, template


@dataclass
class DatasetRecord:
    id: str
    problem: str
    seed: int
    instruction: str
    input: str
    output_accord: str
    output_list: str
    oracle_objective: int
    size: dict
    instance: dict
    oracle: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return asdict(self)


def make_record(spec: GenSpec, index: int, solver_choice: str = "auto", time_limit: float | None = None):
    instance, seed, size, template = build_instance(spec, index)
    result = solve(instance, solver_choice, time_limit=time_limit)
    accord = render_accord(instance, result.solution)
    listed = render_list(instance, result.solution)
    for fmt, report in (("accord", validate_accord(accord, instance)), ("list", validate_list(listed, instance.kind, instance))):
        if not report.feasible or report.objective != result.objective:
            raise ValidationFailure(f"record {index}: {fmt} output failed self-validation: {report.to_json()}")
    return DatasetRecord(
        id=f"{spec.problem.value}-{spec.seed}-{index:06d}",
        problem=spec.problem.value,
        seed=seed,
        instruction=instruction_text(instance, template),
        input=input_text(instance),
        output_accord=accord,
        output_list=listed,
        oracle_objective=result.objective,
        size=size,
        instance=instance_to_json(instance),
        oracle={"method": result.method, "optimal": result.optimal, **solution_to_json(result.solution)},
    )


def _record_or_skip(args):
    spec, index, solver_choice, time_limit = args
    try:
        return make_record(spec, index, solver_choice, time_limit)
    except SolverTimeout:
        log.warning("record %d of %s timed out in the solver; skipped", index, spec.problem.value)
        return None


def emit_dataset(
    spec: GenSpec,
    solver_choice: str = "auto",
    time_limit: float | None = None,
    workers: int = 1,
) -> Iterator[DatasetRecord]:
    """Yield validated records in index order. Timed-out instances are skipped."""
    jobs = [(spec, i, solver_choice, time_limit) for i in range(spec.count)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = pool.map(_record_or_skip, jobs, chunksize=8)
            for rec in results:
                if rec is not None:
                    yield rec
        return
    for args in jobs:
        rec = _record_or_skip(args)
        if rec is not None:
            yield rec


def write_jsonl(records, stream) -> int:
    count = 0
    for rec in records:
        data = rec.to_json() if hasattr(rec, "to_json") else rec
        stream.write(json.dumps(data, ensure_ascii=False, sort_keys=True) + "\n")
        count += 1
    return count


def read_jsonl(path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def instruction_corpus(per_class: int, seed: int) -> list[tuple[str, Kind]]:
    """Labelled instruction texts for router training, without solving anything."""
    out = []
    for k, kind in enumerate(Kind):
        spec = GenSpec(kind, count=per_class, seed=seed * 7 + k)
        for i in range(per_class):
            instance, _, _, template = build_instance(spec, i)
            out.append((instruction_text(instance, template), kind))
    return out
