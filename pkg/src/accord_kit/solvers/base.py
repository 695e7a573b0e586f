from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass

from ..errors import SolverTimeout
from ..problems import solution_to_json


@dataclass(frozen=True)
class SolveResult:
    solution: object
    method: str
    elapsed: float
    optimal: bool

    @property
    def objective(self) -> int:
        return self.solution.objective

    def to_json(self) -> dict:
        return {
            "method": self.method,
            "objective": self.objective,
            "elapsed": round(self.elapsed, 6),
            "optimal": self.optimal,
            **solution_to_json(self.solution),
        }


@contextmanager
def stopwatch():
    box = {"start": time.perf_counter()}
    yield box
    box["elapsed"] = time.perf_counter() - box["start"]


class Deadline:
    """Cheap cooperative time limit for search loops."""

    def __init__(self, seconds: float | None):
        self.limit = None if seconds is None else time.perf_counter() + seconds
        self._ticks = 0

    def check(self) -> None:
        if self.limit is None:
            return
        self._ticks += 1
        if self._ticks & 1023 == 0 and time.perf_counter() > self.limit:
            raise SolverTimeout("time limit exceeded")
