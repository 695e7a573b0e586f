import dataclasses
import random

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from accord_kit.codec import (
    Status,
    parse_accord,
    parse_list,
    render,
    render_accord,
    render_list,
    validate_accord,
    validate_list,
    validate_text,
    validate_trace,
)
from accord_kit.codec.parse import AccordTrace, FlowStep
from accord_kit.errors import KindMismatch, Malformed
from accord_kit.problems import (
    Kind,
    Packing,
    Permutation,
    Picks,
    Routes,
    Schedule,
    ScheduledOp,
    Tour,
    objective_value,
)

import worked as ax
from cases import digit_positions, mutate_digit_at, solved

kinds = st.sampled_from(list(Kind))
seeds = st.integers(0, 2**32)


# --- worked examples ---------------------------------------------------------


@pytest.mark.parametrize("name,inst,sol,accord,listed,value", ax.EXAMPLES)
def test_render_matches_examples_byte_for_byte(name, inst, sol, accord, listed, value):
    assert render_accord(inst, sol) == accord
    assert render_list(inst, sol) == listed


@pytest.mark.parametrize("name,inst,sol,accord,listed,value", ax.EXAMPLES)
def test_examples_validate(name, inst, sol, accord, listed, value):
    report = validate_trace(parse_accord(accord, inst.kind), inst)
    assert report.status is Status.FEASIBLE and report.errors == []
    assert report.objective == value
    listed_report = validate_list(listed, inst.kind, inst)
    assert listed_report.feasible and listed_report.objective == value


@pytest.mark.parametrize(
    "text,inst,value",
    [
        (ax.VRP_ACCORD_WRAPPED, ax.VRP, 102),
        (ax.TSP_ACCORD_WRAPPED, ax.TSP, 181),
        (ax.JSSP_ACCORD_ORIGINAL, ax.JSSP, 781),
    ],
)
def test_wrapped_texts_parse(text, inst, value):
    report = validate_accord(text, inst)
    assert report.feasible and report.objective == value


@pytest.mark.parametrize(
    "text,inst,value",
    [
        (ax.VRP_LIST_WRAPPED, ax.VRP, 102),
        (ax.JSSP_LIST_WRAPPED, ax.JSSP, 781),
        (ax.FSSP_LIST_WRAPPED, ax.FSSP, 39),
    ],
)
def test_wrapped_list_texts_parse(text, inst, value):
    report = validate_list(text, inst.kind, inst)
    assert report.feasible and report.objective == value


def test_parse_shapes():
    trace = parse_accord(ax.FSSP_ACCORD, "fssp")
    assert len(trace.steps) == 4 and trace.totals["makespan"] == 39
    jssp = parse_accord(ax.JSSP_ACCORD, "jssp")
    assert len(jssp.steps) == 12
    first = jssp.steps[0]
    assert (first.job, first.machine, first.start, first.duration, first.end) == (0, 2, 0, 205, 205)


def test_depot_only_route_text():
    line = ax.VRP_ACCORD.splitlines()[0]
    assert line == "Vehicle Route: (0): (34, 42) -> (0): (34, 42) + 0"


def test_list_format_fragments():
    assert "[[0, 2, 0, 205]" in ax.JSSP_LIST and "Makespan: 781" in ax.JSSP_LIST
    assert ax.TSP_LIST.startswith("[(0): (17, 22), (4): (7, 12), ")


def test_single_item_knapsack_list():
    from accord_kit.problems import KnapsackInstance

    inst = KnapsackInstance(((4, 3),), 5)
    text = render_list(inst, Picks((0,)))
    assert text.startswith("Solution: [(4, 3)]")
    assert validate_list(text, "knapsack", inst).objective == 4


def test_render_format_switch():
    assert render(ax.TSP, ax.TSP_SOLUTION, "list") == ax.TSP_LIST
    with pytest.raises(ValueError):
        render(ax.TSP, ax.TSP_SOLUTION, "yaml")
    with pytest.raises(KindMismatch):
        render_accord(ax.TSP, Picks(()))


# --- targeted failures -------------------------------------------------------


def test_injected_arithmetic_error():
    text = ax.KNAPSACK_ACCORD.replace("value:6+10=16", "value:6+10=17", 1)
    report = validate_accord(text, ax.KNAPSACK)
    assert report.status is Status.INFEASIBLE
    assert report.errors[0].code == "ArithmeticMismatch" and report.errors[0].step == 2


def test_bin_overload_reports_capacity_violation():
    text = ax.BINPACK_ACCORD.replace("(3, 11)->71", "(3, 25)->85")
    report = validate_accord(text, ax.BINPACK)
    codes = {(e.step, e.code) for e in report.errors}
    assert (4, "CapacityViolation") in codes


def test_list_total_distance_off_by_one():
    text = ax.TSP_LIST.replace("Distance: 181", "Distance: 182")
    report = validate_list(text, "tsp", ax.TSP)
    assert report.status is Status.INFEASIBLE
    assert [e.code for e in report.errors] == ["DeclaredTotalMismatch"]


@pytest.mark.parametrize(
    "kind,text,inst",
    [
        ("binpack", "The minimum number of bins required is 0. The bin assignments are: [].", ax.BINPACK),
        ("tsp", "Overall Total Distance: 0", ax.TSP),
        ("vrp", "Overall Total Distance: 0", ax.VRP),
        ("jssp", "[]\nMaximum end completion time or Makespan: 0", ax.JSSP),
        ("fssp", "[]\nMaximum end completion time or Makespan: 0", ax.FSSP),
    ],
)
def test_empty_list_is_incomplete(kind, text, inst):
    report = validate_list(text, kind, inst)
    assert report.status is Status.INFEASIBLE
    assert "Incomplete" in {e.code for e in report.errors}


def test_empty_text_is_malformed_at_start():
    with pytest.raises(Malformed) as exc:
        parse_accord("", "knapsack")
    assert (exc.value.line, exc.value.column) == (1, 1)
    report = validate_accord("   ", ax.KNAPSACK)
    assert report.status is Status.MALFORMED and report.location == (1, 4)


def test_malformed_location_points_at_bad_token():
    text = ax.JSSP_ACCORD.replace("J1-M3: 0+179", "J1-M3: 0*179")
    with pytest.raises(Malformed) as exc:
        parse_accord(text, "jssp")
    assert exc.value.line == 3


def test_non_integer_number_is_malformed():
    text = ax.KNAPSACK_ACCORD.replace("value:0+6=6", "value:0+6.0=6")
    assert validate_accord(text, ax.KNAPSACK).status is Status.MALFORMED
    text = ax.KNAPSACK_ACCORD.replace("value:0+6=6", "value:0+-6=6")
    assert validate_accord(text, ax.KNAPSACK).status is Status.MALFORMED


def test_flexible_whitespace_and_trailing_comma():
    text = ax.JSSP_ACCORD.replace("J0-M2: 0+205 -> 205", "J0-M2:0 + 205->205").replace(": 781", ":781")
    report = validate_accord(text, ax.JSSP)
    assert report.feasible and report.objective == 781
    report = validate_accord(ax.KNAPSACK_ACCORD.replace("<=20]\n\n", "<=20],\n\n"), ax.KNAPSACK)
    assert report.feasible


def test_trace_kind_mismatch():
    with pytest.raises(KindMismatch):
        validate_trace(parse_accord(ax.TSP_ACCORD, "tsp"), ax.VRP)


def test_auto_format_falls_back_to_list():
    report = validate_text(ax.JSSP_LIST, ax.JSSP)
    assert report.feasible and report.objective == 781
    assert validate_text("nonsense", ax.JSSP).status is Status.MALFORMED
    with pytest.raises(ValueError):
        validate_text(ax.JSSP_LIST, ax.JSSP, "xml")


def test_feasible_report_invariants():
    report = validate_accord(ax.TSP_ACCORD, ax.TSP)
    assert report.errors == [] and report.objective is not None
    data = report.to_json()
    assert data == {"status": "Feasible", "objective": 181, "errors": []}


# --- properties --------------------------------------------------------------


@given(kinds, seeds)
def test_round_trip_feasible_with_recomputed_objective(kind, seed):
    inst, sol = solved(kind, seed)
    text = render_accord(inst, sol)
    report = validate_trace(parse_accord(text, kind), inst)
    assert report.status is Status.FEASIBLE, report.errors
    assert report.objective == objective_value(inst, sol)


@given(kinds, seeds)
def test_accord_and_list_agree_on_solver_output(kind, seed):
    inst, sol = solved(kind, seed)
    a = validate_accord(render_accord(inst, sol), inst)
    b = validate_list(render_list(inst, sol), kind, inst)
    assert (a.feasible, a.objective) == (b.feasible, b.objective)


def _broken(inst, sol):
    """A structurally renderable but infeasible variant of a solution, or None."""
    if isinstance(sol, Picks):
        return Picks(tuple(range(inst.n)))
    if isinstance(sol, Packing):
        return Packing((tuple(range(inst.n)),))
    if isinstance(sol, Tour):
        return Tour(sol.order[:-1]) if len(sol.order) > 2 else None
    if isinstance(sol, Routes):
        return Routes((tuple(range(1, inst.n)),))
    if isinstance(sol, Schedule):
        return Schedule(tuple(ScheduledOp(o.job, o.machine, 0, o.duration) for o in sol.ops))
    if isinstance(sol, Permutation):
        zeros = tuple((0,) * inst.machines for _ in range(inst.jobs))
        return Permutation(sol.order, zeros)
    return None


@given(kinds, seeds)
def test_accord_and_list_agree_on_broken_solutions(kind, seed):
    inst, sol = solved(kind, seed)
    bad = _broken(inst, sol)
    assume(bad is not None)
    a = validate_accord(render_accord(inst, bad), inst)
    b = validate_list(render_list(inst, bad), kind, inst)
    assert a.feasible == b.feasible
    if a.feasible:
        assert a.objective == b.objective


def _int_fields(step):
    skip = {"bin_index", "bin_label", "route"}
    return [f.name for f in dataclasses.fields(step) if f.name not in skip and isinstance(getattr(step, f.name), int)]


# Fields that name an entity; a changed id can point at an equivalent entity
# (same weight, same durations) and stay locally consistent until later.
RELABEL_FIELDS = {"item", "job", "machine", "job_label"}


def _corrupt_step(step, rng):
    """Returns (corrupted step, name of the changed field)."""
    if isinstance(step, FlowStep):
        if rng.random() < 0.2:
            return dataclasses.replace(step, job_label=step.job_label + rng.randint(1, 3)), "job_label"
        k = rng.randrange(len(step.cells))
        cell = step.cells[k]
        name = rng.choice(["machine_label", "start", "duration", "end"])
        cells = list(step.cells)
        cells[k] = dataclasses.replace(cell, **{name: getattr(cell, name) + rng.randint(1, 5)})
        return dataclasses.replace(step, cells=tuple(cells)), name
    name = rng.choice(_int_fields(step))
    return dataclasses.replace(step, **{name: getattr(step, name) + rng.randint(1, 5)}), name


def _step_findings(report, upto):
    return [(e.step, e.code) for e in report.errors if e.step is not None and e.step <= upto]


@given(kinds, seeds, st.integers(0, 10**6))
def test_prefix_monotone_first_error(kind, seed, pick):
    inst, sol = solved(kind, seed)
    if kind in (Kind.TSP, Kind.VRP):
        assume(len(set(inst.points)) == len(inst.points))
    trace = parse_accord(render_accord(inst, sol), kind)
    assume(trace.steps)
    rng = random.Random(pick)
    k = rng.randrange(len(trace.steps))
    trace.steps[k], field_name = _corrupt_step(trace.steps[k], rng)
    report = validate_trace(trace, inst)
    assert not report.feasible
    # the untouched prefix is clean
    assert report.first_error_step >= k + 1
    if field_name not in RELABEL_FIELDS:
        assert report.first_error_step == k + 1
    # whatever a prefix already shows is reported identically for the whole
    # trace; the cut point itself is skipped (a cut route looks unclosed)
    for j in range(k + 2, len(trace.steps) + 1):
        prefix = validate_trace(AccordTrace(trace.kind, trace.steps[:j], dict(trace.totals)), inst)
        assert _step_findings(prefix, j - 1) == _step_findings(report, j - 1)
        if _step_findings(prefix, j - 1):
            assert report.first_error_step <= j - 1


@given(kinds, seeds, st.integers(0, 10**6))
def test_single_digit_mutation_is_never_feasible(kind, seed, pick):
    inst, sol = solved(kind, seed)
    text = render_accord(inst, sol)
    rng = random.Random(pick)
    mutated = mutate_digit_at(text, rng.choice(digit_positions(text)), rng)
    assert validate_accord(mutated, inst).status is not Status.FEASIBLE


@given(kinds, seeds, st.integers(0, 10**6))
def test_single_digit_list_mutation_is_never_feasible(kind, seed, pick):
    inst, sol = solved(kind, seed)
    text = render_list(inst, sol)
    positions = digit_positions(text)
    assume(positions)
    rng = random.Random(pick)
    mutated = mutate_digit_at(text, rng.choice(positions), rng)
    report = validate_list(mutated, kind, inst)
    # A relabelled node or reordered-but-valid content can remain feasible only
    # if the objective is unchanged and the text still describes a valid solution.
    if report.feasible:
        assert report.objective == objective_value(inst, sol) or kind is Kind.KNAPSACK


def test_report_steps_are_one_based_and_end_marker():
    text = ax.BINPACK_ACCORD.replace("Total bins required: 2", "Total bins required: 3")
    report = validate_accord(text, ax.BINPACK)
    assert [(e.step, e.code) for e in report.errors] == [(6, "DeclaredTotalMismatch")]
