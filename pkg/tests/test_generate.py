import io
import math
import re
import warnings

import pytest
from hypothesis import given
from hypothesis import strategies as st

from accord_kit.codec import validate_accord, validate_list
from accord_kit.errors import InfeasibleSpec
from accord_kit.generate import (
    GenSpec,
    emit_dataset,
    gen_binpack,
    gen_knapsack,
    gen_routing,
    gen_shop,
    instruction_corpus,
    write_jsonl,
)
from accord_kit.problems import Kind, instance_from_json

import oracles

seeds = st.integers(0, 2**63)


def _ffd_bins(weights, capacity):
    loads = []
    for w in sorted(weights, reverse=True):
        for k, load in enumerate(loads):
            if load + w <= capacity:
                loads[k] += w
                break
        else:
            loads.append(w)
    return len(loads)


@given(seeds)
def test_routing_construction(seed):
    tsp = gen_routing(5, 1, seed)
    assert tsp.kind is Kind.TSP and tsp.n == 5 and tsp.vehicle_count == 1
    vrp = gen_routing(5, 5, seed)
    assert vrp.kind is Kind.VRP and vrp.demands[0] == 0
    assert all(1 <= d <= 10 for d in vrp.demands[1:])
    assert all(0 <= p.x <= 100 and 0 <= p.y <= 100 for p in vrp.points)
    assert sum(vrp.demands) <= vrp.vehicle_count * vrp.capacity
    assert vrp.capacity >= max(max(vrp.demands), math.ceil(1.2 * sum(vrp.demands) / 5))
    assert gen_routing(5, 5, seed) == vrp


@given(seeds, st.integers(1, 30))
def test_knapsack_tiers(seed, n):
    easy = gen_knapsack(n, "easy", seed)
    assert all(1 <= v <= 20 and 1 <= w <= 20 for v, w in easy.items)
    assert easy.capacity == -(-4 * sum(w for _, w in easy.items) // 5)
    medium = gen_knapsack(n, "medium", seed)
    assert all(1 <= v <= 100 and 1 <= w <= 100 for v, w in medium.items)
    assert medium.capacity == -(-sum(w for _, w in medium.items) // 2)
    hard = gen_knapsack(n, "hard", seed)
    assert all(v >= 1 and abs(v - w) <= 5 for v, w in hard.items)
    assert hard.capacity == -(-3 * sum(w for _, w in hard.items) // 10)
    assert gen_knapsack(n, "hard", seed) == hard


@pytest.mark.parametrize("seed", range(100))
def test_easy_knapsack_capacity_covers_any_single_item(seed):
    inst = gen_knapsack(5, "easy", seed)
    assert inst.capacity >= max(w for _, w in inst.items)


def test_single_item_hard_knapsack():
    for seed in range(50):
        (v, w), = gen_knapsack(1, "hard", seed).items
        assert abs(v - w) <= 5


def test_unknown_difficulty():
    with pytest.raises(InfeasibleSpec):
        gen_knapsack(5, "extreme", 0)


@given(seeds)
def test_binpack_construction(seed):
    inst = gen_binpack(5, 27, 2, seed)
    assert inst.capacity >= -(-sum(inst.weights) // 2)
    assert all(1 <= w <= 27 for w in inst.weights)
    small = gen_binpack(3, 10, 3, seed)
    assert all(w <= small.capacity for w in small.weights)


def test_binpack_target_above_n_is_infeasible():
    with pytest.raises(InfeasibleSpec):
        gen_binpack(3, 10, 4, 0)
    with pytest.raises(InfeasibleSpec):
        gen_binpack(3, 10, 0, 0)


def test_ffd_within_one_of_target_over_500_seeds():
    for seed in range(500):
        b = 1 + seed % 10
        inst = gen_binpack(max(b, (5, 8, 12, 15, 20, 50, 100)[seed % 7]), (10, 20, 50, 100)[seed % 4], b, seed)
        assert _ffd_bins(inst.weights, inst.capacity) <= b + 1, seed


@given(seeds, st.integers(1, 8), st.integers(1, 8))
def test_jssp_routes_are_machine_permutations(seed, jobs, machines):
    inst = gen_shop("jssp", jobs, machines, seed)
    for route in inst.ops:
        assert sorted(m for m, _ in route) == list(range(machines))
        assert all(5 <= p <= 300 for _, p in route)
    assert gen_shop("jssp", jobs, machines, seed) == inst


@given(seeds)
def test_fssp_duration_range(seed):
    inst = gen_shop(Kind.FSSP, 4, 2, seed)
    assert all(1 <= p <= 100 for row in inst.durations for p in row)


def test_shop_needs_jobs_and_machines():
    with pytest.raises(InfeasibleSpec):
        gen_shop("fssp", 0, 2, 0)


# --- GenSpec -----------------------------------------------------------------


def test_strict_grid_rejects_off_grid_sizes():
    with pytest.raises(InfeasibleSpec, match="permissive"):
        GenSpec("tsp", n=7)
    with pytest.raises(InfeasibleSpec):
        GenSpec("binpack", n=12, weight_max=27)
    with pytest.raises(InfeasibleSpec):
        GenSpec("vrp", n=10, v=11)


def test_permissive_grid_warns():
    with pytest.warns(UserWarning):
        spec = GenSpec("tsp", n=7, strict=False)
    assert spec.n == 7


def test_vehicle_count_matches_kind():
    with pytest.raises(InfeasibleSpec):
        GenSpec("tsp", v=3)
    with pytest.raises(InfeasibleSpec):
        GenSpec("vrp", v=1)


def test_binpack_spec_with_too_many_bins():
    spec = GenSpec("binpack", count=1, n=5, target_bins=8)
    with pytest.raises(InfeasibleSpec):
        list(emit_dataset(spec))


def test_negative_count_and_seed_rejected():
    with pytest.raises(InfeasibleSpec):
        GenSpec("knapsack", count=-1)
    with pytest.raises(InfeasibleSpec):
        GenSpec("knapsack", seed=-1)


# --- emission ----------------------------------------------------------------


def test_count_zero_is_empty():
    assert list(emit_dataset(GenSpec("knapsack", count=0))) == []


def test_ten_small_knapsack_records():
    buf = io.StringIO()
    assert write_jsonl(emit_dataset(GenSpec("knapsack", count=10, n=5, seed=3)), buf) == 10
    lines = buf.getvalue().splitlines()
    assert len(lines) == 10
    import json

    for line in lines:
        rec = json.loads(line)
        inst = instance_from_json(rec["instance"])
        for report in (validate_accord(rec["output_accord"], inst), validate_list(rec["output_list"], "knapsack", inst)):
            assert report.feasible and report.objective == rec["oracle_objective"]
        assert rec["oracle_objective"] == oracles.knapsack_brute(inst)
        assert str(inst.capacity) in rec["instruction"]


@pytest.mark.parametrize("kind", list(Kind))
def test_identical_spec_gives_identical_bytes(kind):
    spec = GenSpec(kind, count=6, seed=12345)
    a, b = io.StringIO(), io.StringIO()
    write_jsonl(emit_dataset(spec), a)
    write_jsonl(emit_dataset(spec), b)
    assert a.getvalue() == b.getvalue() and a.getvalue()


def test_parallel_emission_matches_serial():
    spec = GenSpec("fssp", count=12, seed=9)
    a, b = io.StringIO(), io.StringIO()
    write_jsonl(emit_dataset(spec), a)
    write_jsonl(emit_dataset(spec, workers=2), b)
    assert a.getvalue() == b.getvalue()


def test_record_fields_and_ids():
    recs = list(emit_dataset(GenSpec("vrp", count=3, seed=4)))
    assert [r.id for r in recs] == ["vrp-4-000000", "vrp-4-000001", "vrp-4-000002"]
    data = recs[0].to_json()
    for key in ("id", "problem", "seed", "instruction", "input", "output_accord", "output_list", "oracle_objective", "size"):
        assert key in data
    assert data["problem"] == "vrp" and data["size"]["v"] >= 2


def test_fixed_sizes_are_used():
    recs = list(emit_dataset(GenSpec("binpack", count=4, n=12, weight_max=20, target_bins=3)))
    assert all(r.size == {"n": 12, "weight_max": 20, "target_bins": 3} for r in recs)
    recs = list(emit_dataset(GenSpec("jssp", count=2, jobs=3, machines=3)))
    assert all(r.size == {"jobs": 3, "machines": 3} for r in recs)


def test_drawn_sizes_stay_on_grid():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        for rec in emit_dataset(GenSpec("tsp", count=20, seed=1)):
            assert rec.size["n"] in (5, 8, 10, 12, 15, 20, 50, 75, 100) and rec.size["v"] == 1


def test_instruction_corpus_is_balanced():
    corpus = instruction_corpus(5, 0)
    assert len(corpus) == 30
    for kind in Kind:
        assert sum(1 for _, k in corpus if k is kind) == 5
    assert corpus == instruction_corpus(5, 0)


def test_input_text_lists_every_node():
    rec = next(iter(emit_dataset(GenSpec("tsp", count=1, n=8))))
    assert len(re.findall(r"\d+:\(\d+, \d+\)", rec.input)) == 8
