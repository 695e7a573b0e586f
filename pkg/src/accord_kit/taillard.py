"""Taillard benchmark files: reader, writer and the original instance generator."""
from __future__ import annotations

import re
from pathlib import Path

from .errors import Malformed
from .problems import Kind, ShopInstance

_A, _M, _B, _C = 16807, 2147483647, 127773, 2836


class TaillardLCG:
    """Taillard's portable Lehmer generator (Schrage's method)."""

    def __init__(self, seed: int):
        self.seed = seed

    def unif(self, low: int, high: int) -> int:
        k = self.seed // _B
        self.seed = _A * (self.seed % _B) - k * _C
        if self.seed < 0:
            self.seed += _M
        return low + int(self.seed / _M * (high - low + 1))


def taillard_jssp(jobs: int, machines: int, time_seed: int, machine_seed: int) -> ShopInstance:
    times = TaillardLCG(time_seed)
    d = [[times.unif(1, 99) for _ in range(machines)] for _ in range(jobs)]
    orders = TaillardLCG(machine_seed)
    routes = []
    for j in range(jobs):
        seq = list(range(machines))
        for k in range(machines):
            r = orders.unif(k, machines - 1)
            seq[k], seq[r] = seq[r], seq[k]
        routes.append(tuple(zip(seq, d[j])))
    return ShopInstance(Kind.JSSP, jobs, machines, tuple(routes))


def taillard_fssp(jobs: int, machines: int, seed: int) -> ShopInstance:
    gen = TaillardLCG(seed)
    by_machine = [[gen.unif(1, 99) for _ in range(jobs)] for _ in range(machines)]
    return ShopInstance.flow_shop([[by_machine[k][j] for k in range(machines)] for j in range(jobs)])


_NUM = re.compile(r"-?\d+")


def _numeric_rows(text: str):
    """(line number, ints) for every line, plus keyword markers as strings."""
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped:
            continue
        low = stripped.lower()
        if low.startswith("times") or low.startswith("processing"):
            yield lineno, "times"
            continue
        if low.startswith("machines"):
            yield lineno, "machines"
            continue
        if not _NUM.fullmatch(stripped.split()[0]):
            continue  # header prose such as "Nb of jobs, Nb of Machines, ..."
        try:
            yield lineno, [int(tok) for tok in stripped.split()]
        except ValueError:
            raise Malformed(lineno, 1, "whitespace-separated integers") from None


def _take(rows, count: int, width: int, what: str, last_line: int):
    out = []
    for lineno, row in rows:
        if isinstance(row, str):
            continue
        if len(row) != width:
            raise Malformed(lineno, 1, f"{width} integers in {what} row")
        out.append((lineno, row))
        if len(out) == count:
            return out
    raise Malformed(last_line + 1, 1, f"{count - len(out)} more {what} rows")


def read_taillard(path, kind: Kind | str) -> ShopInstance:
    """Parse a Taillard-layout file (first instance only).

    Job shop: a header line ``jobs machines [seeds, bounds]`` followed either by
    a ``Times`` block and a ``Machines`` block (1-based machines) or by one row
    of ``machine duration`` pairs per job (OR-Library layout, 0-based).
    Flow shop: header, then ``machines`` rows of ``jobs`` durations.
    """
    kind = Kind(kind)
    text = Path(path).read_text(encoding="utf-8")
    rows = list(_numeric_rows(text))
    last = text.count("\n") + 1
    it = iter(rows)
    header = next(((n, r) for n, r in it if not isinstance(r, str)), None)
    if header is None or len(header[1]) < 2:
        raise Malformed(header[0] if header else 1, 1, "header with job and machine counts")
    lineno, (jobs, machines, *_) = header
    if jobs < 1 or machines < 1:
        raise Malformed(lineno, 1, "positive job and machine counts")
    rest = list(it)
    if kind is Kind.FSSP:
        block = _take(iter(rest), machines, jobs, "processing-time", last)
        for n, row in block:
            if min(row) < 1:
                raise Malformed(n, 1, "positive durations")
        return ShopInstance.flow_shop([[block[k][1][j] for k in range(machines)] for j in range(jobs)])

    first = next((r for _, r in rest if not isinstance(r, str)), None)
    marked = any(r == "times" for _, r in rest)
    if not marked and first is not None and len(first) == 2 * machines:
        pairs = _take(iter(rest), jobs, 2 * machines, "operation", last)
        routes = [(n, list(zip(row[0::2], row[1::2]))) for n, row in pairs]
        base = 0
    else:
        body = iter(rest)
        times = _take(body, jobs, machines, "times", last)
        order = _take(body, jobs, machines, "machines", last)
        base = 1 if min(min(r) for _, r in order) == 1 else 0
        routes = [(n, list(zip(order[j][1], times[j][1]))) for j, (n, _) in enumerate(order)]
    ops = []
    for n, route in routes:
        seq = [m - base for m, _ in route]
        if sorted(seq) != list(range(machines)):
            raise Malformed(n, 1, f"a permutation of machines {base}..{machines - 1 + base}")
        if any(p < 1 for _, p in route):
            raise Malformed(n, 1, "positive durations")
        ops.append(tuple((m - base, p) for m, p in route))
    return ShopInstance(Kind.JSSP, jobs, machines, tuple(ops))


def format_taillard(instance: ShopInstance) -> str:
    """Serialize in the Taillard layout that ``read_taillard`` accepts."""
    if instance.kind is Kind.FSSP:
        p = instance.durations
        lines = [f"{instance.jobs} {instance.machines}", "processing times :"]
        lines += [" ".join(str(p[j][k]) for j in range(instance.jobs)) for k in range(instance.machines)]
        return "\n".join(lines) + "\n"
    lines = [f"{instance.jobs} {instance.machines}", "Times"]
    lines += [" ".join(str(p) for _, p in route) for route in instance.ops]
    lines.append("Machines")
    lines += [" ".join(str(m + 1) for m, _ in route) for route in instance.ops]
    return "\n".join(lines) + "\n"
