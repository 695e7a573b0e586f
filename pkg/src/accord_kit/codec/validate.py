"""Replay parsed traces against an instance and report every violation.

The ACCORD validator is a state machine: each step's declared arithmetic is
checked, chained against the replayed running state, and the step's
constraint is checked before moving on. Findings carry the 1-based number of
the step where they were detected; end-of-trace findings use
``len(steps) + 1``. List-format findings have no step (``None``).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

from ..errors import KindMismatch, Malformed
from ..problems import (
    BinPackInstance,
    Kind,
    KnapsackInstance,
    Packing,
    Permutation,
    Picks,
    Point,
    ProblemInstance,
    RoutingInstance,
    Routes,
    Schedule,
    ScheduledOp,
    ShopInstance,
    Tour,
    check_feasible,
    objective_value,
    truncated_euclidean,
)
from .parse import AccordTrace, ListParse, parse_accord, parse_list


class Status(str, enum.Enum):
    FEASIBLE = "Feasible"
    INFEASIBLE = "Infeasible"
    MALFORMED = "Malformed"


@dataclass(frozen=True)
class Finding:
    step: int | None
    code: str
    detail: str


@dataclass
class ValidationReport:
    status: Status
    errors: list[Finding] = field(default_factory=list)
    objective: int | None = None
    location: tuple[int, int] | None = None  # set when Malformed

    @property
    def feasible(self) -> bool:
        return self.status is Status.FEASIBLE

    @property
    def first_error_step(self) -> int | None:
        steps = [e.step for e in self.errors if e.step is not None]
        return min(steps) if steps else None

    def to_json(self) -> dict:
        out = {
            "status": self.status.value,
            "objective": self.objective,
            "errors": [{"step": e.step, "code": e.code, "detail": e.detail} for e in self.errors],
        }
        if self.location is not None:
            out["location"] = {"line": self.location[0], "column": self.location[1]}
        return out


def malformed_report(exc: Malformed) -> ValidationReport:
    return ValidationReport(
        Status.MALFORMED,
        [Finding(None, "Malformed", str(exc))],
        None,
        (exc.line, exc.column),
    )


class _Log:
    def __init__(self):
        self.findings: list[Finding] = []

    def __call__(self, step, code, detail):
        self.findings.append(Finding(step, code, detail))

    def report(self, objective) -> ValidationReport:
        status = Status.INFEASIBLE if self.findings else Status.FEASIBLE
        return ValidationReport(status, self.findings, objective)


def _kinds_match(trace_kind: Kind, instance: ProblemInstance) -> None:
    if trace_kind is not instance.kind:
        raise KindMismatch(f"{trace_kind.value} trace against {instance.kind.value} instance")


def validate_trace(trace: AccordTrace, instance: ProblemInstance) -> ValidationReport:
    _kinds_match(trace.kind, instance)
    log = _Log()
    if isinstance(instance, KnapsackInstance):
        obj = _replay_knapsack(trace, instance, log)
    elif isinstance(instance, BinPackInstance):
        obj = _replay_binpack(trace, instance, log)
    elif isinstance(instance, RoutingInstance):
        obj = _replay_routing(trace, instance, log)
    elif instance.kind is Kind.JSSP:
        obj = _replay_jssp(trace, instance, log)
    else:
        obj = _replay_fssp(trace, instance, log)
    return log.report(obj)


def _replay_knapsack(trace, inst: KnapsackInstance, log) -> int:
    W = inst.capacity
    free: dict[tuple[int, int], list[int]] = {}
    for idx, item in enumerate(inst.items):
        free.setdefault(item, []).append(idx)
    value = weight = 0
    for i, st in enumerate(trace.steps, 1):
        pair = (st.value, st.weight)
        if pair not in free:
            log(i, "UnknownItem", f"no item with (value, weight) = {pair}")
        elif not free[pair]:
            log(i, "DuplicateItem", f"item {pair} packed more often than it exists")
        else:
            free[pair].pop(0)
        if st.add_value != st.value or st.add_weight != st.weight:
            log(i, "OperandMismatch", "step operands differ from the item's value/weight")
        if st.prev_value != value:
            log(i, "ChainMismatch", f"running value declared {st.prev_value}, replayed {value}")
        if st.prev_weight != weight:
            log(i, "ChainMismatch", f"running weight declared {st.prev_weight}, replayed {weight}")
        if st.prev_value + st.add_value != st.new_value:
            log(i, "ArithmeticMismatch", f"{st.prev_value}+{st.add_value}!={st.new_value}")
        if st.prev_weight + st.add_weight != st.new_weight:
            log(i, "ArithmeticMismatch", f"{st.prev_weight}+{st.add_weight}!={st.new_weight}")
        if st.bound != W:
            log(i, "BoundMismatch", f"declared bound {st.bound}, capacity is {W}")
        value += st.value
        weight += st.weight
        if weight > W:
            log(i, "CapacityViolation", f"running weight {weight} > {W}")
    end = len(trace.steps) + 1
    if trace.totals["value"] != value:
        log(end, "DeclaredTotalMismatch", f"total value declared {trace.totals['value']}, replayed {value}")
    if trace.totals["weight"] != weight:
        log(end, "DeclaredTotalMismatch", f"total weight declared {trace.totals['weight']}, replayed {weight}")
    if trace.totals["bound"] != W:
        log(end, "BoundMismatch", f"declared bound {trace.totals['bound']}, capacity is {W}")
    return value


def _replay_binpack(trace, inst: BinPackInstance, log) -> int:
    cap = inst.capacity
    seen: set[int] = set()
    bins = 0
    load = 0
    for i, st in enumerate(trace.steps, 1):
        if st.bin_index == bins:
            bins += 1
            load = 0
            if st.bin_label != bins:
                log(i, "LabelMismatch", f"bin number {bins} is labelled {st.bin_label}")
        if not 0 <= st.item < inst.n:
            log(i, "UnknownItem", f"no item {st.item}")
        else:
            if st.item in seen:
                log(i, "DuplicateItem", f"item {st.item} packed twice")
            seen.add(st.item)
            if inst.weights[st.item] != st.weight:
                log(i, "OperandMismatch", f"item {st.item} weighs {inst.weights[st.item]}, declared {st.weight}")
        if load + st.weight != st.cumulative:
            log(i, "ArithmeticMismatch", f"{load}+{st.weight}!={st.cumulative}")
        load += st.weight
        if st.bound is not None and st.bound != cap:
            log(i, "BoundMismatch", f"declared bound {st.bound}, capacity is {cap}")
        if load > cap:
            log(i, "CapacityViolation", f"bin {st.bin_label} load {load} > {cap}")
    end = len(trace.steps) + 1
    missing = sorted(set(range(inst.n)) - seen)
    if missing:
        log(end, "Incomplete", f"items never packed: {missing}")
    if trace.totals["bins"] != bins:
        log(end, "DeclaredTotalMismatch", f"declared {trace.totals['bins']} bins, trace uses {bins}")
    return bins


def _replay_routing(trace, inst: RoutingInstance, log) -> int:
    visited: set[int] = set()
    total = 0
    prev = None
    load = 0
    last_route = -1
    steps = trace.steps
    for i, st in enumerate(steps, 1):
        if st.route != last_route:
            if prev is not None and prev.node != 0:
                log(i - 1, "RouteNotClosed", f"route {prev.route} does not return to the depot")
            last_route = st.route
            load = 0
            if st.route >= inst.vehicle_count:
                log(i, "TooManyRoutes", f"route {st.route + 1} exceeds {inst.vehicle_count} vehicles")
            if st.node != 0:
                log(i, "RouteStart", f"route {st.route} starts at node {st.node}, not the depot")
        if not 0 <= st.node < inst.n:
            log(i, "UnknownNode", f"no node {st.node}")
        else:
            p = inst.points[st.node]
            if (p.x, p.y) != (st.x, st.y):
                log(i, "CoordinateMismatch", f"node {st.node} is at ({p.x}, {p.y}), declared ({st.x}, {st.y})")
            if st.node != 0:
                if st.node in visited:
                    log(i, "DuplicateVisit", f"customer {st.node} visited again")
                visited.add(st.node)
                load += inst.demands[st.node]
                if inst.capacity is not None and load > inst.capacity:
                    log(i, "CapacityViolation", f"route {st.route} load {load} > {inst.capacity}")
        if st.leg is not None:
            declared = truncated_euclidean(Point(prev.x, prev.y), Point(st.x, st.y))
            if st.leg != declared:
                log(i, "DistanceMismatch", f"leg declared {st.leg}, distance is {declared}")
            if 0 <= prev.node < inst.n and 0 <= st.node < inst.n:
                total += inst.distance(prev.node, st.node)
            else:
                total += st.leg
        prev = st
    end = len(steps) + 1
    if prev is not None and prev.node != 0:
        log(end - 1, "RouteNotClosed", f"route {prev.route} does not return to the depot")
    missing = sorted(set(range(1, inst.n)) - visited)
    if missing:
        log(end, "Incomplete", f"customers never visited: {missing}")
    if trace.totals["distance"] != total:
        log(end, "DeclaredTotalMismatch", f"total distance declared {trace.totals['distance']}, replayed {total}")
    return total


def _replay_jssp(trace, inst: ShopInstance, log) -> int:
    position = {(j, m): (k, p) for j, route in enumerate(inst.ops) for k, (m, p) in enumerate(route)}
    next_op = [0] * inst.jobs
    job_ready = [0] * inst.jobs
    machine_ready = [0] * inst.machines
    done: set[tuple[int, int]] = set()
    makespan = 0
    for i, st in enumerate(trace.steps, 1):
        key = (st.job, st.machine)
        if st.start + st.duration != st.end:
            log(i, "ArithmeticMismatch", f"{st.start}+{st.duration}!={st.end}")
        if key not in position:
            log(i, "UnknownOperation", f"J{st.job}-M{st.machine} is not an operation of this instance")
            continue
        if key in done:
            log(i, "DuplicateOperation", f"J{st.job}-M{st.machine} scheduled twice")
            continue
        k, p = position[key]
        if st.duration != p:
            log(i, "DurationMismatch", f"J{st.job}-M{st.machine} lasts {p}, declared {st.duration}")
        if k != next_op[st.job]:
            log(i, "PrecedenceViolation", f"J{st.job}-M{st.machine} is operation {k}, job is at operation {next_op[st.job]}")
        if st.start < job_ready[st.job]:
            log(i, "PrecedenceViolation", f"J{st.job} starts at {st.start} before ready time {job_ready[st.job]}")
        if st.start < machine_ready[st.machine]:
            log(i, "MachineConflict", f"M{st.machine} busy until {machine_ready[st.machine]}, J{st.job} starts {st.start}")
        end = st.start + p
        done.add(key)
        next_op[st.job] = max(next_op[st.job], k + 1)
        job_ready[st.job] = end
        machine_ready[st.machine] = max(machine_ready[st.machine], end)
        makespan = max(makespan, end)
    n = len(trace.steps) + 1
    missing = len(position) - len(done)
    if missing:
        log(n, "Incomplete", f"{missing} operations never scheduled")
    if trace.totals["makespan"] != makespan:
        log(n, "DeclaredTotalMismatch", f"makespan declared {trace.totals['makespan']}, replayed {makespan}")
    return makespan


def _replay_fssp(trace, inst: ShopInstance, log) -> int:
    p = inst.durations
    m = inst.machines
    machine_ready = [0] * m
    done: set[int] = set()
    makespan = 0
    for i, st in enumerate(trace.steps, 1):
        j = st.job_label - 1
        if not 0 <= j < inst.jobs:
            log(i, "UnknownJob", f"no job J{st.job_label}")
            continue
        if j in done:
            log(i, "DuplicateJob", f"J{st.job_label} appears twice")
            continue
        done.add(j)
        if len(st.cells) != m:
            log(i, "Incomplete", f"J{st.job_label} lists {len(st.cells)} machines, instance has {m}")
        ready = 0
        for k, cell in enumerate(st.cells[:m]):
            if cell.machine_label != k + 1:
                log(i, "LabelMismatch", f"expected M{k + 1}, found M{cell.machine_label}")
            if cell.duration != p[j][k]:
                log(i, "DurationMismatch", f"J{st.job_label} on M{k + 1} lasts {p[j][k]}, declared {cell.duration}")
            if cell.start + cell.duration != cell.end:
                log(i, "ArithmeticMismatch", f"{cell.start}+{cell.duration}!={cell.end}")
            if cell.start < ready:
                log(i, "MachineOrderViolation", f"J{st.job_label} starts M{k + 1} at {cell.start} before leaving M{k} at {ready}")
            if cell.start < machine_ready[k]:
                log(i, "JobSequenceViolation", f"M{k + 1} busy until {machine_ready[k]}, J{st.job_label} starts {cell.start}")
            ready = machine_ready[k] = cell.start + p[j][k]
            makespan = max(makespan, ready)
    n = len(trace.steps) + 1
    missing = sorted(set(range(inst.jobs)) - done)
    if missing:
        log(n, "Incomplete", f"jobs never scheduled: {[j + 1 for j in missing]}")
    if trace.totals["makespan"] != makespan:
        log(n, "DeclaredTotalMismatch", f"makespan declared {trace.totals['makespan']}, replayed {makespan}")
    return makespan


# --- list-of-lists validation ----------------------------------------------

_VIOLATION_CODES = {
    "capacity": "CapacityViolation",
    "coverage": "Incomplete",
    "duplicate": "DuplicateItem",
    "item": "UnknownItem",
    "node": "UnknownNode",
    "depot": "RouteStart",
    "vehicles": "TooManyRoutes",
    "operation": "UnknownOperation",
    "duration": "DurationMismatch",
    "precedence": "PrecedenceViolation",
    "machine_conflict": "MachineConflict",
    "machine_order": "MachineOrderViolation",
    "job_sequence": "JobSequenceViolation",
    "start": "NegativeStart",
    "shape": "Incomplete",
    "objective": "DeclaredTotalMismatch",
}


def _solution_from_list(parsed: ListParse, inst: ProblemInstance, log):
    kind = parsed.kind
    if isinstance(inst, KnapsackInstance):
        free: dict[tuple[int, int], list[int]] = {}
        for idx, item in enumerate(inst.items):
            free.setdefault(item, []).append(idx)
        picks = []
        for v, w in parsed.groups:
            if (v, w) not in free:
                log(None, "UnknownItem", f"no item with (value, weight) = {(v, w)}")
            elif not free[(v, w)]:
                log(None, "DuplicateItem", f"item {(v, w)} packed more often than it exists")
            else:
                picks.append(free[(v, w)].pop(0))
        t = parsed.totals
        values = [v for v, _ in parsed.groups] or [0]
        weights = [w for _, w in parsed.groups] or [0]
        if t["value_terms"] != values or t["weight_terms"] != weights:
            log(None, "OperandMismatch", "sum terms differ from the listed items")
        if sum(t["value_terms"]) != t["value"] or sum(t["weight_terms"]) != t["weight"]:
            log(None, "ArithmeticMismatch", "declared sum does not add up")
        if t["bound"] != inst.capacity:
            log(None, "BoundMismatch", f"declared bound {t['bound']}, capacity is {inst.capacity}")
        if sum(weights) != t["weight"]:
            log(None, "DeclaredTotalMismatch", f"declared weight {t['weight']}, actual {sum(weights)}")
        return Picks(tuple(picks)), t["value"]
    if isinstance(inst, BinPackInstance):
        return Packing(tuple(tuple(b) for b in parsed.groups)), parsed.totals["bins"]
    if isinstance(inst, RoutingInstance):
        walks = []
        for walk in parsed.groups:
            nodes = []
            for i, x, y in walk:
                if not 0 <= i < inst.n:
                    log(None, "UnknownNode", f"no node {i}")
                    continue
                p = inst.points[i]
                if (p.x, p.y) != (x, y):
                    log(None, "CoordinateMismatch", f"node {i} is at ({p.x}, {p.y}), declared ({x}, {y})")
                nodes.append(i)
            if len(nodes) < 2 or nodes[0] != 0 or nodes[-1] != 0:
                log(None, "RouteNotClosed", "route must start and end at the depot")
                nodes = [n for n in nodes if n != 0]
            else:
                nodes = nodes[1:-1]
            walks.append(tuple(nodes))
        if kind is Kind.TSP:
            if len(walks) != 1:
                log(None, "TooManyRoutes" if walks else "Incomplete", f"TSP needs exactly one route, got {len(walks)}")
            return Tour((0, *walks[0]) if walks else ()), parsed.totals["distance"]
        return Routes(tuple(walks)), parsed.totals["distance"]
    if kind is Kind.JSSP:
        ops = tuple(ScheduledOp(j, m, s, p) for j, m, s, p in parsed.groups)
        return Schedule(ops), parsed.totals["makespan"]
    starts: dict[int, dict[int, int]] = {}
    p = inst.durations
    for jl, ml, s, d in parsed.groups:
        j, k = jl - 1, ml - 1
        if not (0 <= j < inst.jobs and 0 <= k < inst.machines):
            log(None, "UnknownOperation", f"no operation J{jl}-M{ml}")
            continue
        if k in starts.setdefault(j, {}):
            log(None, "DuplicateOperation", f"J{jl}-M{ml} listed twice")
        starts[j][k] = s
        if d != p[j][k]:
            log(None, "DurationMismatch", f"J{jl} on M{ml} lasts {p[j][k]}, declared {d}")
    complete = all(len(starts.get(j, {})) == inst.machines for j in range(inst.jobs))
    if not complete:
        log(None, "Incomplete", "some flow shop operations are missing")
        return None, parsed.totals["makespan"]
    order = sorted(range(inst.jobs), key=lambda j: starts[j][0])
    table = tuple(tuple(starts[j][k] for k in range(inst.machines)) for j in range(inst.jobs))
    return Permutation(tuple(order), table), parsed.totals["makespan"]


def validate_list(text: str, kind: Kind | str, instance: ProblemInstance) -> ValidationReport:
    kind = Kind(kind)
    _kinds_match(kind, instance)
    try:
        parsed = parse_list(text, kind)
    except Malformed as exc:
        return malformed_report(exc)
    log = _Log()
    solution, declared = _solution_from_list(parsed, instance, log)
    if solution is None:
        return log.report(None)
    for name, detail in check_feasible(instance, solution).violations:
        log(None, _VIOLATION_CODES.get(name, "ConstraintViolation"), detail)
    actual = objective_value(instance, solution)
    if declared != actual:
        log(None, "DeclaredTotalMismatch", f"declared objective {declared}, recomputed {actual}")
    return log.report(actual)


def validate_accord(text: str, instance: ProblemInstance) -> ValidationReport:
    try:
        trace = parse_accord(text, instance.kind)
    except Malformed as exc:
        return malformed_report(exc)
    return validate_trace(trace, instance)


def validate_text(text: str, instance: ProblemInstance, fmt: str = "auto") -> ValidationReport:
    """Validate either grammar. ``auto`` tries ACCORD first, then the list format."""
    if fmt == "accord":
        return validate_accord(text, instance)
    if fmt == "list":
        return validate_list(text, instance.kind, instance)
    if fmt != "auto":
        raise ValueError(f"unknown format {fmt!r}")
    report = validate_accord(text, instance)
    if report.status is not Status.MALFORMED:
        return report
    fallback = validate_list(text, instance.kind, instance)
    return report if fallback.status is Status.MALFORMED else fallback
