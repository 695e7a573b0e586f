"""Flow shop (NEH, Johnson) and job shop (dispatch rules, tiny exact) solvers."""
from __future__ import annotations

from ..errors import KindMismatch, NotTwoMachines, TooLarge
from ..problems import (
    Kind,
    Permutation,
    Schedule,
    ScheduledOp,
    ShopInstance,
    flow_shop_makespan,
    flow_shop_starts,
)
from .base import Deadline, SolveResult, stopwatch

TINY_JSSP_OPS = 12
RULES = ("SPT", "MWR", "MOR")


def _need(instance: ShopInstance, kind: Kind) -> None:
    if instance.kind is not kind:
        raise KindMismatch(f"expected a {kind.value} instance, got {instance.kind.value}")


def _permutation(instance: ShopInstance, order) -> Permutation:
    order = tuple(order)
    return Permutation(order, flow_shop_starts(instance, order), flow_shop_makespan(instance, order))


def neh_order(instance: ShopInstance, history: list | None = None) -> list[int]:
    """NEH insertion. Appends ``(partial order, makespans per position)`` to history."""
    p = instance.durations
    jobs = sorted(range(instance.jobs), key=lambda j: (-sum(p[j]), j))
    seq = jobs[:1]
    for j in jobs[1:]:
        spans = [flow_shop_makespan(instance, seq[:pos] + [j] + seq[pos:]) for pos in range(len(seq) + 1)]
        pos = spans.index(min(spans))
        seq.insert(pos, j)
        if history is not None:
            history.append((tuple(seq), spans))
    return seq


def fssp_neh(instance: ShopInstance) -> SolveResult:
    _need(instance, Kind.FSSP)
    with stopwatch() as sw:
        sol = _permutation(instance, neh_order(instance))
    return SolveResult(sol, "neh", sw["elapsed"], False)


def fssp_johnson(instance: ShopInstance) -> SolveResult:
    _need(instance, Kind.FSSP)
    if instance.machines != 2:
        raise NotTwoMachines(f"Johnson's rule needs 2 machines, got {instance.machines}")
    with stopwatch() as sw:
        p = instance.durations
        first = sorted((j for j in range(instance.jobs) if p[j][0] < p[j][1]), key=lambda j: (p[j][0], j))
        last = sorted((j for j in range(instance.jobs) if p[j][0] >= p[j][1]), key=lambda j: (-p[j][1], j))
        sol = _permutation(instance, first + last)
    return SolveResult(sol, "johnson", sw["elapsed"], True)


def _dispatch(instance: ShopInstance, rule: str) -> list[ScheduledOp]:
    ops = instance.ops
    nxt = [0] * instance.jobs
    job_ready = [0] * instance.jobs
    machine_ready = [0] * instance.machines
    work_left = [sum(p for _, p in route) for route in ops]
    out = []
    for _ in range(instance.n_ops):
        candidates = []
        for j in range(instance.jobs):
            if nxt[j] < len(ops[j]):
                m, p = ops[j][nxt[j]]
                candidates.append((max(job_ready[j], machine_ready[m]), j, m, p))
        t = min(c[0] for c in candidates)
        ready = [c for c in candidates if c[0] == t]
        if rule == "SPT":
            key = lambda c: (c[3], c[1])
        elif rule == "MWR":
            key = lambda c: (-work_left[c[1]], c[1])
        else:
            key = lambda c: (-(len(ops[c[1]]) - nxt[c[1]]), c[1])
        start, j, m, p = min(ready, key=key)
        out.append(ScheduledOp(j, m, start, p))
        nxt[j] += 1
        job_ready[j] = machine_ready[m] = start + p
        work_left[j] -= p
    return out


def jssp_dispatch(instance: ShopInstance, rule: str = "SPT") -> SolveResult:
    """Non-delay dispatching: among operations that can start earliest, pick by rule."""
    _need(instance, Kind.JSSP)
    rule = rule.upper()
    if rule not in RULES:
        raise ValueError(f"unknown dispatch rule {rule!r}; choose from {RULES}")
    with stopwatch() as sw:
        ops = _dispatch(instance, rule)
        sol = Schedule(tuple(ops), max((o.end for o in ops), default=0))
    return SolveResult(sol, f"dispatch_{rule.lower()}", sw["elapsed"], False)


def jssp_exact_tiny(instance: ShopInstance, time_limit: float | None = None) -> SolveResult:
    """Branch and bound over active schedules (Giffler-Thompson branching)."""
    _need(instance, Kind.JSSP)
    if instance.n_ops > TINY_JSSP_OPS:
        raise TooLarge(f"exact search is limited to {TINY_JSSP_OPS} operations, got {instance.n_ops}")
    deadline = Deadline(time_limit)
    with stopwatch() as sw:
        ops = instance.ops
        incumbent = min((jssp_dispatch(instance, r).solution for r in RULES), key=lambda s: s.objective)
        best = {"span": incumbent.objective, "ops": list(incumbent.ops)}
        machine_left = [0] * instance.machines
        for route in ops:
            for m, p in route:
                machine_left[m] += p
        job_left = [sum(p for _, p in route) for route in ops]
        nxt = [0] * instance.jobs
        job_ready = [0] * instance.jobs
        machine_ready = [0] * instance.machines
        placed: list[ScheduledOp] = []
        seen: set = set()

        def dfs() -> None:
            deadline.check()
            bound = max(
                max(r + w for r, w in zip(job_ready, job_left)),
                max(r + w for r, w in zip(machine_ready, machine_left)),
            )
            if bound >= best["span"]:
                return
            if len(placed) == instance.n_ops:
                best["span"] = max(o.end for o in placed)
                best["ops"] = list(placed)
                return
            state = (tuple(nxt), tuple(job_ready), tuple(machine_ready))
            if state in seen:
                return
            seen.add(state)
            front = []
            for j in range(instance.jobs):
                if nxt[j] < len(ops[j]):
                    m, p = ops[j][nxt[j]]
                    s = max(job_ready[j], machine_ready[m])
                    front.append((s + p, s, j, m, p))
            c_star, _, _, m_star, _ = min(front)
            for _, s, j, m, p in sorted(front, key=lambda f: (f[1], f[2])):
                if m != m_star or s >= c_star:
                    continue
                saved = (job_ready[j], machine_ready[m])
                placed.append(ScheduledOp(j, m, s, p))
                nxt[j] += 1
                job_ready[j] = machine_ready[m] = s + p
                job_left[j] -= p
                machine_left[m] -= p
                dfs()
                placed.pop()
                nxt[j] -= 1
                job_ready[j], machine_ready[m] = saved
                job_left[j] += p
                machine_left[m] += p

        dfs()
        sol = Schedule(tuple(best["ops"]), best["span"])
    return SolveResult(sol, "exact_bnb", sw["elapsed"], True)
