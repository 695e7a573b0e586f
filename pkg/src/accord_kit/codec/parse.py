"""Tolerant tokenizer and recursive-descent parsers for both solution grammars.

Whitespace (including line breaks) is free between tokens; the token
sequence itself is strict. Every declared number is kept verbatim.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache

from ..errors import Malformed
from ..problems import Kind
from .render import MAKESPAN_LABEL

_WS = re.compile(r"\s*")
_INT = re.compile(r"\d+")


@lru_cache(maxsize=None)
def _literal(lit: str) -> re.Pattern:
    return re.compile(r"\s+".join(re.escape(word) for word in lit.split()))


class Scanner:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def location(self) -> tuple[int, int]:
        before = self.text[: self.pos]
        line = before.count("\n") + 1
        return line, self.pos - (before.rfind("\n") + 1) + 1

    def fail(self, expected: str):
        raise Malformed(*self.location(), expected)

    def skip(self) -> None:
        self.pos = _WS.match(self.text, self.pos).end()

    def at(self, lit: str) -> bool:
        self.skip()
        return _literal(lit).match(self.text, self.pos) is not None

    def accept(self, lit: str) -> bool:
        self.skip()
        m = _literal(lit).match(self.text, self.pos)
        if m:
            self.pos = m.end()
        return m is not None

    def expect(self, *lits: str) -> None:
        for lit in lits:
            if not self.accept(lit):
                self.fail(repr(lit))

    def number(self) -> int:
        self.skip()
        m = _INT.match(self.text, self.pos)
        if not m:
            self.fail("unsigned integer")
        self.pos = m.end()
        return int(m.group())

    def end(self) -> None:
        self.skip()
        if self.pos != len(self.text):
            self.fail("end of text")


# --- trace data ------------------------------------------------------------


@dataclass(frozen=True)
class KnapsackStep:
    value: int
    weight: int
    prev_value: int
    add_value: int
    new_value: int
    prev_weight: int
    add_weight: int
    new_weight: int
    bound: int


@dataclass(frozen=True)
class BinStep:
    bin_index: int  # ordinal of the enclosing "Bin k:" header
    bin_label: int
    item: int
    weight: int
    cumulative: int
    bound: int | None


@dataclass(frozen=True)
class RouteStep:
    route: int
    node: int
    x: int
    y: int
    leg: int | None  # None on the first node of a route


@dataclass(frozen=True)
class JobStep:
    job: int
    machine: int
    start: int
    duration: int
    end: int


@dataclass(frozen=True)
class FlowCell:
    machine_label: int
    start: int
    duration: int
    end: int


@dataclass(frozen=True)
class FlowStep:
    job_label: int
    cells: tuple[FlowCell, ...]


@dataclass
class AccordTrace:
    kind: Kind
    steps: list = field(default_factory=list)
    totals: dict = field(default_factory=dict)


def parse_accord(text: str, kind: Kind | str) -> AccordTrace:
    kind = Kind(kind)
    sc = Scanner(text)
    sc.skip()
    if sc.pos == len(text):
        sc.fail("solution text")
    sc.accept("Solution:")
    trace = AccordTrace(kind)
    _ACCORD_PARSERS[kind](sc, trace)
    sc.end()
    return trace


def _accord_knapsack(sc: Scanner, trace: AccordTrace) -> None:
    while sc.accept("["):
        sc.expect("[")
        v = sc.number()
        sc.expect(",")
        w = sc.number()
        sc.expect("]", "->", "value", ":")
        pv = sc.number()
        sc.expect("+")
        av = sc.number()
        sc.expect("=")
        nv = sc.number()
        sc.expect(",", "weight", ":")
        pw = sc.number()
        sc.expect("+")
        aw = sc.number()
        sc.expect("=")
        nw = sc.number()
        sc.expect("<=")
        bound = sc.number()
        sc.expect("]")
        sc.accept(",")
        trace.steps.append(KnapsackStep(v, w, pv, av, nv, pw, aw, nw, bound))
    sc.expect("Total Value:")
    trace.totals["value"] = sc.number()
    sc.expect("Total Weight:")
    trace.totals["weight"] = sc.number()
    sc.expect("<=")
    trace.totals["bound"] = sc.number()


def _accord_binpack(sc: Scanner, trace: AccordTrace) -> None:
    index = 0
    while sc.accept("Bin"):
        label = sc.number()
        sc.expect(":")
        if not sc.at("("):
            sc.fail("'(' opening a bin item")
        while sc.accept("("):
            item = sc.number()
            sc.expect(",")
            w = sc.number()
            sc.expect(")", "->")
            cum = sc.number()
            bound = sc.number() if sc.accept("<=") else None
            trace.steps.append(BinStep(index, label, item, w, cum, bound))
        index += 1
    sc.expect("Total bins required:")
    trace.totals["bins"] = sc.number()


def _node(sc: Scanner) -> tuple[int, int, int]:
    sc.expect("(")
    i = sc.number()
    sc.expect(")", ":", "(")
    x = sc.number()
    sc.expect(",")
    y = sc.number()
    sc.expect(")")
    return i, x, y


def _accord_routing(sc: Scanner, trace: AccordTrace) -> None:
    route = 0
    while sc.accept("Vehicle Route:"):
        trace.steps.append(RouteStep(route, *_node(sc), None))
        if not sc.at("->"):
            sc.fail("'->'")
        while sc.accept("->"):
            node = _node(sc)
            sc.expect("+")
            trace.steps.append(RouteStep(route, *node, sc.number()))
        route += 1
    sc.expect("Overall Total Distance:")
    trace.totals["distance"] = sc.number()


def _makespan(sc: Scanner, trace: AccordTrace) -> None:
    sc.expect(MAKESPAN_LABEL + ":")
    trace.totals["makespan"] = sc.number()


def _accord_jssp(sc: Scanner, trace: AccordTrace) -> None:
    while sc.accept("J"):
        job = sc.number()
        sc.expect("-", "M")
        machine = sc.number()
        sc.expect(":")
        s = sc.number()
        sc.expect("+")
        p = sc.number()
        sc.expect("->")
        e = sc.number()
        sc.accept(",")
        trace.steps.append(JobStep(job, machine, s, p, e))
    _makespan(sc, trace)


def _accord_fssp(sc: Scanner, trace: AccordTrace) -> None:
    while sc.accept("J"):
        label = sc.number()
        sc.expect(":")
        cells = []
        while True:
            sc.expect("M")
            m = sc.number()
            sc.expect("(")
            s = sc.number()
            sc.expect("+")
            p = sc.number()
            sc.expect("=")
            e = sc.number()
            sc.expect(")")
            cells.append(FlowCell(m, s, p, e))
            if not sc.accept("->"):
                break
        trace.steps.append(FlowStep(label, tuple(cells)))
    _makespan(sc, trace)


_ACCORD_PARSERS = {
    Kind.KNAPSACK: _accord_knapsack,
    Kind.BINPACK: _accord_binpack,
    Kind.TSP: _accord_routing,
    Kind.VRP: _accord_routing,
    Kind.JSSP: _accord_jssp,
    Kind.FSSP: _accord_fssp,
}


# --- list-of-lists grammar -------------------------------------------------


@dataclass
class ListParse:
    """Raw content of a list-of-lists text, before any instance lookup."""

    kind: Kind
    groups: list = field(default_factory=list)
    totals: dict = field(default_factory=dict)


def _int_list(sc: Scanner, width: int | None = None) -> list[int]:
    sc.expect("[")
    out = []
    if not sc.at("]"):
        out.append(sc.number())
        while sc.accept(","):
            out.append(sc.number())
    sc.expect("]")
    if width is not None and len(out) != width:
        sc.fail(f"list of {width} integers")
    return out


def _sum_line(sc: Scanner) -> tuple[list[int], int]:
    terms = [sc.number()]
    while sc.accept("+"):
        terms.append(sc.number())
    sc.expect("=")
    return terms, sc.number()


def parse_list(text: str, kind: Kind | str) -> ListParse:
    kind = Kind(kind)
    sc = Scanner(text)
    sc.skip()
    if sc.pos == len(text):
        sc.fail("solution text")
    out = ListParse(kind)
    if kind is Kind.KNAPSACK:
        sc.expect("Solution:", "[")
        if not sc.at("]"):
            while True:
                sc.expect("(")
                v = sc.number()
                sc.expect(",")
                w = sc.number()
                sc.expect(")")
                out.groups.append((v, w))
                if not sc.accept(","):
                    break
        sc.expect("]", "Value:")
        out.totals["value_terms"], out.totals["value"] = _sum_line(sc)
        sc.expect("Weight:")
        out.totals["weight_terms"], out.totals["weight"] = _sum_line(sc)
        sc.expect("<=")
        out.totals["bound"] = sc.number()
    elif kind is Kind.BINPACK:
        sc.expect("The minimum number of bins required is")
        out.totals["bins"] = sc.number()
        sc.expect(".", "The bin assignments are:", "[")
        if not sc.at("]"):
            out.groups.append(_int_list(sc))
            while sc.accept(","):
                out.groups.append(_int_list(sc))
        sc.expect("]")
        sc.accept(".")
    elif kind in (Kind.TSP, Kind.VRP):
        while sc.accept("["):
            walk = [_node(sc)]
            while sc.accept(","):
                walk.append(_node(sc))
            sc.expect("]")
            out.groups.append(walk)
        sc.expect("Overall Total Distance:")
        out.totals["distance"] = sc.number()
    else:
        sc.expect("[")
        if not sc.at("]"):
            out.groups.append(_int_list(sc, 4))
            while sc.accept(","):
                out.groups.append(_int_list(sc, 4))
        sc.expect("]")
        sc.expect(MAKESPAN_LABEL + ":")
        out.totals["makespan"] = sc.number()
    sc.end()
    return out
