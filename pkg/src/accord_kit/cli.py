"""Command-line entry point: accord-kit <subcommand> [flags]."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .errors import AccordError

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_MALFORMED = 0, 1, 2, 3, 4
SEED_ENV = "ACCORD_KIT_SEED"
PROBLEMS = ("tsp", "vrp", "knapsack", "binpack", "jssp", "fssp")

log = logging.getLogger("accord_kit")


class UsageError(Exception):
    pass


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text(encoding="utf-8")


def _emit(text: str, out: str | None) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"{SEED_ENV}={env!r} is not an integer") from None


def _load_instance(path: str):
    from .problems import instance_from_json

    data = json.loads(_read(path))
    return instance_from_json(data.get("instance", data))


def cmd_gen(args) -> int:
    from .generate import GenSpec, emit_dataset, write_jsonl

    spec = GenSpec(
        args.problem,
        count=args.count,
        seed=_seed(args),
        n=args.n,
        v=args.v,
        difficulty=args.difficulty,
        weight_max=args.weight_max,
        target_bins=args.target_bins,
        jobs=args.jobs,
        machines=args.machines,
        strict=not args.permissive,
    )
    records = emit_dataset(spec, args.solver, args.time_limit, args.parallelism)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            count = write_jsonl(records, fh)
    else:
        count = write_jsonl(records, sys.stdout)
    log.info("wrote %d records", count)
    return EXIT_OK


def cmd_solve(args) -> int:
    from .solvers import solve

    result = solve(_load_instance(args.instance), args.method, args.time_limit)
    _emit(_dump(result.to_json()), args.out)
    return EXIT_OK


def cmd_render(args) -> int:
    from .codec import render
    from .problems import solution_from_json
    from .solvers import solve

    instance = _load_instance(args.instance)
    if args.solution:
        data = json.loads(_read(args.solution))
        solution = solution_from_json(data.get("oracle", data))
    else:
        solution = solve(instance).solution
    _emit(render(instance, solution, args.format), args.out)
    return EXIT_OK


def cmd_validate(args) -> int:
    from .codec import Status, validate_text

    instance = _load_instance(args.instance)
    report = validate_text(_read(args.text), instance, args.format)
    _emit(_dump(report.to_json()), args.out)
    if report.status is Status.FEASIBLE:
        return EXIT_OK
    return EXIT_MALFORMED if report.status is Status.MALFORMED else EXIT_INFEASIBLE


def cmd_eval(args) -> int:
    from .generate import read_jsonl
    from .harness import EvalConfig, make_source, run_benchmark, write_report

    kwargs = {"seed": _seed(args)} if args.source == "corrupt" else {}
    source = make_source(args.source, args.endpoint, **kwargs)
    config = EvalConfig(source, samples=args.samples, fmt=args.format, parallelism=args.parallelism)
    report = run_benchmark(read_jsonl(args.dataset), config)
    if args.report:
        write_report(report, args.report)
    _emit(report.to_csv() if args.csv else _dump(report.to_json()["problems"]), args.out)
    return EXIT_OK


def cmd_route_train(args) -> int:
    from . import router
    from .generate import instruction_corpus, read_jsonl

    seed = _seed(args)
    if args.dataset:
        corpus = [(r["instruction"], r["problem"]) for r in read_jsonl(args.dataset)]
    else:
        corpus = instruction_corpus(args.per_class, seed)
    config = router.RouterConfig(seed=seed, epochs=args.epochs)
    model, curve = router.train(config, corpus)
    router.save(model, args.model)
    _emit(_dump({"model": args.model, "examples": len(corpus), "steps": len(curve), "first_loss": curve[0], "last_loss": curve[-1]}), args.out)
    return EXIT_OK


def cmd_route(args) -> int:
    from . import router

    model = router.load(args.model)
    text = args.text if args.text is not None else sys.stdin.read()
    kind, confidence = router.classify(model, text.strip())
    _emit(_dump({"problem": kind.value, "confidence": confidence}), args.out)
    return EXIT_OK


def cmd_taillard_import(args) -> int:
    from .problems import instance_to_json
    from .taillard import read_taillard

    instance = read_taillard(args.path, args.problem)
    _emit(_dump(instance_to_json(instance)), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="accord-kit", description="Generate, solve, render, validate and evaluate optimization instances.")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    def common(p, seed=False, out=True):
        if seed:
            p.add_argument("--seed", type=int, default=None, help=f"random seed (fallback: ${SEED_ENV}, then 0)")
        if out:
            p.add_argument("--out", help="write output here instead of stdout")

    p = sub.add_parser("gen", help="emit a JSONL dataset of solved instances")
    p.add_argument("--problem", required=True, choices=PROBLEMS)
    p.add_argument("--n", type=int, help="node or item count (routing, knapsack, bin packing)")
    p.add_argument("--v", type=int, help="vehicle count (VRP)")
    p.add_argument("--difficulty", choices=("easy", "medium", "hard"), help="knapsack tier")
    p.add_argument("--weight-max", type=int, help="largest bin packing item weight")
    p.add_argument("--target-bins", type=int, help="bin packing target bin count B")
    p.add_argument("--jobs", type=int, help="shop job count")
    p.add_argument("--machines", type=int, help="shop machine count")
    p.add_argument("--count", type=int, default=1, help="records to emit")
    p.add_argument("--solver", choices=("auto", "exact", "heuristic"), default="auto", help="oracle solver family")
    p.add_argument("--time-limit", type=float, help="per-instance solver budget in seconds")
    p.add_argument("--parallelism", type=int, default=1, help="worker processes")
    p.add_argument("--permissive", action="store_true", help="allow sizes outside the standard grids")
    common(p, seed=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="solve a JSON instance")
    p.add_argument("--instance", required=True, help="instance JSON or dataset record ('-' for stdin)")
    p.add_argument("--method", choices=("auto", "exact", "heuristic"), default="auto")
    p.add_argument("--time-limit", type=float)
    common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("render", help="render a solution as text")
    p.add_argument("--instance", required=True)
    p.add_argument("--solution", help="solution JSON; solved on the fly when omitted")
    p.add_argument("--format", choices=("accord", "list"), default="accord")
    common(p)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("validate", help="parse and check a solution text (exit 0 feasible, 3 infeasible, 4 malformed)")
    p.add_argument("--instance", required=True)
    p.add_argument("--text", required=True, help="solution text file ('-' for stdin)")
    p.add_argument("--format", choices=("auto", "accord", "list"), default="auto")
    common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("eval", help="best-of-N evaluation of candidate texts")
    p.add_argument("--dataset", required=True, help="JSONL dataset from 'gen'")
    p.add_argument("--source", default="echo", help="echo, echo-list, corrupt, replay:PATH, http, or a candidate file/directory")
    p.add_argument("--endpoint", help="URL for the http source")
    p.add_argument("--samples", type=int, default=60, help="candidates per instance")
    p.add_argument("--format", choices=("auto", "accord", "list"), default="auto")
    p.add_argument("--parallelism", type=int, default=1, help="instances evaluated concurrently")
    p.add_argument("--report", help="write <report>.csv and <report>.json")
    p.add_argument("--csv", action="store_true", help="print the CSV table instead of JSON")
    common(p, seed=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("route-train", help="train the instruction router")
    p.add_argument("--model", required=True, help="checkpoint path (.npz)")
    p.add_argument("--dataset", help="JSONL with instruction and problem fields; generated when omitted")
    p.add_argument("--per-class", type=int, default=1000)
    p.add_argument("--epochs", type=int, default=6)
    common(p, seed=True)
    p.set_defaults(func=cmd_route_train)

    p = sub.add_parser("route", help="classify an instruction text")
    p.add_argument("--model", required=True)
    p.add_argument("--text", help="instruction text (stdin when omitted)")
    common(p)
    p.set_defaults(func=cmd_route)

    p = sub.add_parser("taillard-import", help="convert a Taillard benchmark file to instance JSON")
    p.add_argument("--path", required=True)
    p.add_argument("--problem", choices=("jssp", "fssp"), default="jssp")
    common(p)
    p.set_defaults(func=cmd_taillard_import)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"accord-kit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (AccordError, OSError, ValueError, KeyError) as exc:
        print(f"accord-kit: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
