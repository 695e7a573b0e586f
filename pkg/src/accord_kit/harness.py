"""Best-of-N evaluation of candidate solution texts against oracle values."""
from __future__ import annotations

import csv
import io
import json
import logging
import random
import time
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from statistics import fmean
from typing import Iterable, Protocol

from .codec import validate_text
from .errors import NonpositiveOracle, SourceTimeout, SourceUnavailable
from .problems import Kind, instance_from_json, size_label

log = logging.getLogger(__name__)

DEFAULT_SAMPLES = 60
CSV_COLUMNS = ("problem", "size", "n_instances", "mean_gap_pct", "feasibility_pct", "n_na", "mean_seconds")


def optimality_gap(model_value: float, oracle_value: float, sense: str = "min") -> float:
    """Relative gap, non-negative whenever the oracle is at least as good as the model."""
    if oracle_value <= 0:
        raise NonpositiveOracle(f"oracle value must be positive, got {oracle_value}")
    if sense == "min":
        return (model_value - oracle_value) / oracle_value
    if sense == "max":
        return (oracle_value - model_value) / oracle_value
    raise ValueError(f"sense must be 'min' or 'max', got {sense!r}")


def feasibility_rate(items: Iterable) -> float:
    """Percentage feasible. Accepts booleans, validation reports, or EvalRecords."""
    feasible = total = 0
    for item in items:
        if isinstance(item, EvalRecord):
            feasible += item.n_feasible
            total += item.n_candidates
        else:
            ok = item.feasible if hasattr(item, "feasible") else bool(item)
            feasible += ok
            total += 1
    return 100.0 * feasible / total if total else 0.0


@dataclass
class EvalRecord:
    instance_id: str
    problem: str
    size: str
    oracle_value: int
    n_candidates: int
    n_feasible: int
    best_value: int | None = None
    gap: float | None = None
    seconds: float = 0.0
    error: str | None = None

    def __post_init__(self):
        assert (self.gap is None) == (self.best_value is None)
        assert 0 <= self.n_feasible <= self.n_candidates


def best_of_n(instance, candidates, oracle_value, fmt: str = "auto", instance_id: str = "", sense: str | None = None) -> EvalRecord:
    """Validate every candidate; keep the best feasible objective (first one on ties)."""
    sense = sense or instance.kind.sense
    t0 = time.perf_counter()
    seen: dict[str, object] = {}
    best = None
    n_feasible = 0
    for text in candidates:
        report = seen.get(text)
        if report is None:
            report = seen[text] = validate_text(text, instance, fmt)
        if not report.feasible:
            continue
        n_feasible += 1
        value = report.objective
        if best is None or (value > best if sense == "max" else value < best):
            best = value
    gap = None if best is None else optimality_gap(best, oracle_value, sense)
    return EvalRecord(
        instance_id=instance_id,
        problem=instance.kind.value,
        size=size_label(instance),
        oracle_value=oracle_value,
        n_candidates=len(candidates),
        n_feasible=n_feasible,
        best_value=best,
        gap=gap,
        seconds=time.perf_counter() - t0,
    )


# --- candidate sources -------------------------------------------------------


class CandidateSource(Protocol):
    def fetch(self, record: dict, n: int) -> list[str]: ...


@dataclass
class EchoSource:
    """Returns the rendered oracle solution n times. Closes the loop at gap 0."""

    fmt: str = "accord"

    def fetch(self, record, n):
        key = "output_accord" if self.fmt == "accord" else "output_list"
        return [record[key]] * n


@dataclass
class CorruptSource:
    """Oracle text with one digit changed per candidate."""

    seed: int = 0
    fmt: str = "accord"

    def fetch(self, record, n):
        text = record["output_accord" if self.fmt == "accord" else "output_list"]
        rng = random.Random(f"{self.seed}:{record['id']}")
        return [mutate_digit(text, rng) for _ in range(n)]


def mutate_digit(text: str, rng: random.Random) -> str:
    positions = [i for i, ch in enumerate(text) if ch.isdigit()]
    if not positions:
        return text
    i = rng.choice(positions)
    new = rng.choice([d for d in "0123456789" if d != text[i]])
    return text[:i] + new + text[i + 1 :]


class FileSource:
    """Stored candidate texts keyed by instance id.

    ``path`` is either a JSONL file of ``{"id": ..., "text": ...}`` (or
    ``"texts": [...]``) lines, or a directory with one sub-directory or
    ``<id>.jsonl`` file per instance.
    """

    def __init__(self, path):
        self.path = Path(path)
        self._table: dict[str, list[str]] | None = None

    def _load(self) -> dict[str, list[str]]:
        if self._table is not None:
            return self._table
        table: dict[str, list[str]] = {}
        if not self.path.exists():
            raise SourceUnavailable(f"candidate path {self.path} does not exist")
        if self.path.is_dir():
            for sub in sorted(self.path.iterdir()):
                if sub.is_dir():
                    table[sub.name] = [f.read_text(encoding="utf-8") for f in sorted(sub.iterdir()) if f.is_file()]
                elif sub.suffix == ".jsonl":
                    for line in _lines(sub):
                        table.setdefault(sub.stem, []).extend(_texts(json.loads(line)))
                elif sub.suffix == ".txt":
                    table.setdefault(sub.stem, []).append(sub.read_text(encoding="utf-8"))
        else:
            for line in _lines(self.path):
                entry = json.loads(line)
                table.setdefault(str(entry["id"]), []).extend(_texts(entry))
        self._table = table
        return table

    def fetch(self, record, n):
        texts = self._load().get(str(record["id"]), [])
        if len(texts) < n:
            log.info("instance %s: %d of %d candidates available", record["id"], len(texts), n)
        return texts[:n]


def _lines(path: Path):
    with open(path, encoding="utf-8") as fh:
        return [line for line in fh if line.strip()]


def _texts(entry) -> list[str]:
    if isinstance(entry, str):
        return [entry]
    if "texts" in entry:
        return list(entry["texts"])
    return [entry["text"]]


DEFAULT_PROMPT = "{instruction}\n\nInput:\n{input}\n\nAnswer in the ACCORD format."


def _dig(obj, path: str):
    for part in path.split("."):
        obj = obj[int(part)] if isinstance(obj, list) else obj[part]
    return obj


@dataclass
class HttpSource:
    """Generic JSON chat-completion endpoint.

    Each sample is one POST. Failures are retried with exponential backoff;
    every exchange is appended to ``replay_log`` when one is given.
    """

    endpoint: str
    model: str = "default"
    temperature: float = 0.7
    prompt_template: str = DEFAULT_PROMPT
    response_path: str = "choices.0.message.content"
    timeout: float = 60.0
    retries: int = 3
    backoff: float = 0.5
    replay_log: str | None = None
    headers: dict = field(default_factory=dict)

    def _payload(self, record, index):
        prompt = self.prompt_template.format(instruction=record.get("instruction", ""), input=record.get("input", ""))
        return {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.temperature,
            "seed": index,
        }

    def _post(self, payload):
        data = json.dumps(payload).encode("utf-8")
        req = urllib.request.Request(self.endpoint, data=data, headers={"Content-Type": "application/json", **self.headers})
        last: Exception | None = None
        for attempt in range(self.retries + 1):
            if attempt:
                time.sleep(self.backoff * 2 ** (attempt - 1))
            try:
                with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                    return json.loads(resp.read().decode("utf-8"))
            except urllib.error.HTTPError as exc:
                last = exc
                if exc.code < 500 and exc.code != 429:
                    break
            except TimeoutError as exc:
                last = exc
            except urllib.error.URLError as exc:
                last = exc
                if isinstance(exc.reason, TimeoutError):
                    last = exc.reason
        if isinstance(last, TimeoutError):
            raise SourceTimeout(f"{self.endpoint} timed out after {self.retries + 1} attempts")
        raise SourceUnavailable(f"{self.endpoint}: {last}")

    def fetch(self, record, n):
        out = []
        for i in range(n):
            payload = self._payload(record, i)
            response = self._post(payload)
            text = str(_dig(response, self.response_path))
            if self.replay_log:
                with open(self.replay_log, "a", encoding="utf-8") as fh:
                    entry = {"id": record["id"], "index": i, "request": payload, "response": response, "timestamp": time.time()}
                    fh.write(json.dumps(entry, sort_keys=True) + "\n")
            out.append(text)
        return out


class ReplaySource:
    """Candidates read back from an HttpSource replay log."""

    def __init__(self, log_path, response_path: str = HttpSource.response_path):
        self._table: dict[str, dict[int, str]] = {}
        for line in _lines(Path(log_path)):
            entry = json.loads(line)
            self._table.setdefault(str(entry["id"]), {})[entry["index"]] = str(_dig(entry["response"], response_path))

    def fetch(self, record, n):
        stored = self._table.get(str(record["id"]), {})
        return [stored[i] for i in sorted(stored)[:n]]


def fetch_candidates(source: CandidateSource, record: dict, n: int) -> list[str]:
    return source.fetch(record, n)


def make_source(descriptor: str, endpoint: str | None = None, **kwargs) -> CandidateSource:
    """Build a source from a CLI-style descriptor: echo, echo-list, corrupt, replay:PATH, http, or a path."""
    if descriptor in ("echo", "oracle-echo"):
        return EchoSource()
    if descriptor == "echo-list":
        return EchoSource("list")
    if descriptor == "corrupt":
        return CorruptSource(kwargs.get("seed", 0))
    if descriptor.startswith("replay:"):
        return ReplaySource(descriptor.split(":", 1)[1])
    if descriptor == "http" or descriptor.startswith("http://") or descriptor.startswith("https://"):
        url = endpoint or descriptor
        if url == "http":
            raise ValueError("http source needs an endpoint")
        return HttpSource(url, **{k: v for k, v in kwargs.items() if k != "seed"})
    return FileSource(descriptor)


# --- benchmark ---------------------------------------------------------------


@dataclass
class EvalConfig:
    source: CandidateSource
    samples: int = DEFAULT_SAMPLES
    fmt: str = "auto"
    senses: dict = field(default_factory=dict)
    timeout: float | None = None
    parallelism: int = 1
    report_path: str | None = None

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("samples per instance must be at least 1")

    def sense(self, kind: Kind) -> str:
        return self.senses.get(kind.value, kind.sense)


@dataclass
class Report:
    records: list[EvalRecord]

    def rows(self) -> list[dict]:
        groups: dict[tuple[str, str], list[EvalRecord]] = {}
        for rec in self.records:
            groups.setdefault((rec.problem, rec.size), []).append(rec)
        out = []
        for (problem, size), recs in sorted(groups.items(), key=lambda kv: (kv[0][0], _size_key(kv[0][1]))):
            gaps = [r.gap for r in recs if r.gap is not None]
            out.append(
                {
                    "problem": problem,
                    "size": size,
                    "n_instances": len(recs),
                    "mean_gap_pct": 100.0 * fmean(gaps) if gaps else None,
                    "feasibility_pct": feasibility_rate(recs),
                    "n_na": sum(r.gap is None for r in recs),
                    "mean_seconds": fmean(r.seconds for r in recs),
                }
            )
        return out

    def by_problem(self) -> dict[str, dict]:
        out = {}
        for problem in sorted({r.problem for r in self.records}):
            recs = [r for r in self.records if r.problem == problem]
            gaps = [r.gap for r in recs if r.gap is not None]
            out[problem] = {
                "n_instances": len(recs),
                "mean_gap_pct": 100.0 * fmean(gaps) if gaps else None,
                "feasibility_pct": feasibility_rate(recs),
                "n_na": sum(r.gap is None for r in recs),
            }
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in self.rows():
            writer.writerow({k: _cell(v) for k, v in row.items()})
        return buf.getvalue()

    def to_json(self) -> dict:
        series: dict[str, dict[str, list]] = {}
        for row in self.rows():
            s = series.setdefault(row["problem"], {"size": [], "gap_pct": [], "seconds": []})
            s["size"].append(row["size"])
            s["gap_pct"].append(row["mean_gap_pct"])
            s["seconds"].append(row["mean_seconds"])
        return {
            "rows": self.rows(),
            "problems": self.by_problem(),
            "series": series,
            "records": [asdict(r) for r in self.records],
        }


def _cell(v):
    if v is None:
        return "N/A"
    if isinstance(v, float):
        return f"{v:.4f}"
    return v


def _size_key(size: str):
    return tuple(int(x) for x in size.split("x"))


def _evaluate(record: dict, config: EvalConfig) -> EvalRecord:
    instance = instance_from_json(record["instance"])
    t0 = time.perf_counter()
    try:
        texts = fetch_candidates(config.source, record, config.samples)
    except SourceUnavailable as exc:
        log.warning("instance %s: %s", record["id"], exc)
        return EvalRecord(record["id"], instance.kind.value, size_label(instance), record["oracle_objective"], 0, 0, error=str(exc))
    rec = best_of_n(instance, texts, record["oracle_objective"], config.fmt, record["id"], config.sense(instance.kind))
    rec.seconds = time.perf_counter() - t0
    return rec


def run_benchmark(dataset: Iterable[dict], config: EvalConfig) -> Report:
    """Evaluate every dataset record; per-instance source failures are recorded, not raised."""
    records = list(dataset)
    if config.parallelism > 1:
        with ThreadPoolExecutor(config.parallelism) as pool:
            results = list(pool.map(lambda r: _evaluate(r, config), records))
    else:
        results = [_evaluate(r, config) for r in records]
    report = Report(results)
    if config.report_path:
        write_report(report, config.report_path)
    return report


def write_report(report: Report, path) -> None:
    """Writes ``<path>.csv`` and ``<path>.json`` (suffix of ``path`` is replaced)."""
    path = Path(path)
    path.with_suffix(".csv").write_text(report.to_csv(), encoding="utf-8")
    path.with_suffix(".json").write_text(json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
