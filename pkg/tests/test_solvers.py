import itertools
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from accord_kit.errors import InfeasibleInstance, NotTwoMachines, TooLarge, WorkBoundExceeded
from accord_kit.generate import gen_binpack, gen_knapsack, gen_routing, gen_shop
from accord_kit.problems import (
    BinPackInstance,
    Kind,
    KnapsackInstance,
    Point,
    RoutingInstance,
    ShopInstance,
    check_feasible,
    flow_shop_makespan,
    tour_length,
)
from accord_kit.solvers import (
    binpack_solve,
    fssp_johnson,
    fssp_neh,
    jssp_dispatch,
    jssp_exact_tiny,
    knapsack_exact,
    neh_order,
    solve,
    tsp_exact,
    tsp_heuristic,
    two_opt,
    vrp_heuristic,
)

import oracles
from worked import BINPACK, FSSP, JSSP, KNAPSACK, TSP, VRP

RULES = ("SPT", "MWR", "MOR")


def _tiny_jssp(rng: random.Random, jobs: int, machines: int) -> ShopInstance:
    routes = []
    for _ in range(jobs):
        ms = rng.sample(range(machines), rng.randint(1, machines))
        routes.append(tuple((m, rng.randint(1, 20)) for m in ms))
    return ShopInstance(Kind.JSSP, jobs, machines, tuple(routes))


# --- worked examples ---------------------------------------------------------


def test_examples():
    assert knapsack_exact(KNAPSACK).objective == 30
    assert binpack_solve(BINPACK).objective == 2
    assert tsp_exact(TSP).objective == 181 == oracles.tsp_brute(TSP)
    assert fssp_neh(FSSP).objective == 39
    assert fssp_johnson(FSSP).objective == 39
    assert fssp_johnson(FSSP).solution.order == (2, 3, 0, 1)
    assert jssp_exact_tiny(JSSP).objective == 781
    res = vrp_heuristic(VRP)
    assert check_feasible(VRP, res.solution).feasible
    assert res.objective >= 102


def test_heuristic_tsp_on_example_is_no_better_than_exact():
    res = tsp_heuristic(TSP)
    assert check_feasible(TSP, res.solution).feasible
    assert res.objective >= 181
    assert not res.optimal


@pytest.mark.parametrize("rule", RULES)
def test_dispatch_feasible_on_example(rule):
    res = jssp_dispatch(JSSP, rule)
    assert check_feasible(JSSP, res.solution).feasible
    assert res.objective >= 781


# --- trivial cases -----------------------------------------------------------


def test_knapsack_zero_capacity():
    res = knapsack_exact(KnapsackInstance(((5, 1), (3, 2)), 0))
    assert res.solution.items == () and res.objective == 0


def test_knapsack_work_bound():
    with pytest.raises(WorkBoundExceeded):
        knapsack_exact(KnapsackInstance(((1, 1),) * 10, 10**6), work_bound=10**6)


def test_tsp_two_nodes():
    inst = RoutingInstance(Kind.TSP, (Point(0, 0), Point(3, 4)), (0, 0))
    assert tsp_exact(inst).objective == 10
    assert tsp_heuristic(inst).objective == 10


def test_tsp_three_nodes_heuristic_is_optimal():
    inst = gen_routing(3, 1, 5)
    assert tsp_heuristic(inst).objective == tsp_exact(inst).objective


def test_tsp_exact_limit():
    with pytest.raises(TooLarge):
        tsp_exact(gen_routing(20, 1, 0))


def test_vrp_single_customer():
    inst = RoutingInstance(Kind.VRP, (Point(0, 0), Point(6, 8)), (0, 3), 2, 5)
    res = vrp_heuristic(inst)
    assert res.objective == 20
    assert res.solution.routes[0] == (1,)


def test_vrp_infeasible_fleet():
    inst = RoutingInstance(Kind.VRP, (Point(0, 0), Point(1, 1), Point(2, 2), Point(3, 3)), (0, 5, 5, 5), 2, 7)
    with pytest.raises(InfeasibleInstance):
        vrp_heuristic(inst)


def test_binpack_all_full_items():
    inst = BinPackInstance((9, 9, 9, 9), 9)
    assert binpack_solve(inst).objective == 4


def test_fssp_single_job():
    inst = ShopInstance.flow_shop([[3, 5, 7]])
    assert fssp_neh(inst).objective == 15


def test_johnson_needs_two_machines():
    with pytest.raises(NotTwoMachines):
        fssp_johnson(ShopInstance.flow_shop([[1, 2, 3]]))


def test_johnson_identical_jobs():
    inst = ShopInstance.flow_shop([[4, 6]] * 5)
    assert fssp_johnson(inst).objective == flow_shop_makespan(inst, [4, 3, 2, 1, 0])


def test_single_job_shop():
    inst = ShopInstance(Kind.JSSP, 1, 3, (((2, 5), (0, 7), (1, 4)),))
    for rule in RULES:
        assert jssp_dispatch(inst, rule).objective == 16
    assert jssp_exact_tiny(inst).objective == 16


def test_jssp_exact_limit():
    with pytest.raises(TooLarge):
        jssp_exact_tiny(gen_shop(Kind.JSSP, 4, 4, 0))


def test_two_by_two_forced_conflict():
    # Both jobs start on machine 0; J0: M0(3) -> M1(2), J1: M0(2) -> M1(4).
    inst = ShopInstance(Kind.JSSP, 2, 2, (((0, 3), (1, 2)), ((0, 2), (1, 4))))
    # J1 first on M0: J1 M0 [0,2], J0 M0 [2,5], J1 M1 [2,6], J0 M1 [6,8] -> 8
    # J0 first on M0: J0 M0 [0,3], J1 M0 [3,5], J0 M1 [3,5], J1 M1 [5,9] -> 9
    assert jssp_exact_tiny(inst).objective == 8 == oracles.jssp_brute(inst)


def test_unknown_choice_and_rule():
    with pytest.raises(ValueError):
        solve(KNAPSACK, "fastest")
    with pytest.raises(ValueError):
        jssp_dispatch(JSSP, "FIFO")


# --- oracle equivalence ------------------------------------------------------


@pytest.mark.parametrize("seed", range(25))
def test_knapsack_matches_enumeration(seed):
    inst = gen_knapsack(12, ("easy", "medium", "hard")[seed % 3], seed)
    res = knapsack_exact(inst)
    assert res.objective == oracles.knapsack_brute(inst)
    assert check_feasible(inst, res.solution).feasible


@pytest.mark.parametrize("seed", range(25))
def test_tsp_matches_enumeration(seed):
    inst = gen_routing(8, 1, seed)
    assert tsp_exact(inst).objective == oracles.tsp_brute(inst)
    assert tsp_heuristic(inst).objective >= tsp_exact(inst).objective


@pytest.mark.parametrize("seed", range(25))
def test_binpack_matches_set_partition(seed):
    rng = random.Random(seed)
    inst = gen_binpack(10, rng.choice((10, 20, 50, 100)), rng.randint(1, 5), seed)
    assert binpack_solve(inst).objective == oracles.binpack_brute(inst)


@pytest.mark.parametrize("seed", range(25))
def test_two_machine_flow_shop(seed):
    n = 2 + seed % 7
    inst = gen_shop(Kind.FSSP, n, 2, seed)
    best = oracles.fssp_brute(inst)
    assert fssp_johnson(inst).objective == best
    assert fssp_neh(inst).objective >= best


@pytest.mark.parametrize("seed", range(25))
def test_jssp_exact_matches_enumeration(seed):
    rng = random.Random(seed)
    inst = _tiny_jssp(rng, rng.randint(2, 3), rng.randint(2, 4))
    best = oracles.jssp_brute(inst)
    assert jssp_exact_tiny(inst).objective == best
    for rule in RULES:
        assert jssp_dispatch(inst, rule).objective >= best


@pytest.mark.parametrize("seed", range(15))
def test_vrp_heuristic_no_better_than_brute_force(seed):
    inst = gen_routing(5, 2, seed)
    res = vrp_heuristic(inst)
    assert check_feasible(inst, res.solution).feasible
    assert res.objective >= oracles.vrp_brute(inst)


# --- properties --------------------------------------------------------------


@given(st.integers(0, 2**32), st.integers(4, 12))
def test_two_opt_never_lengthens(seed, n):
    inst = gen_routing(n, 1, seed)
    D = inst.distance_matrix()
    walk = [0] + random.Random(seed).sample(range(1, n), n - 1)
    assert tour_length(inst, two_opt(D, walk)) <= tour_length(inst, walk)


@given(st.integers(0, 2**32), st.integers(2, 8), st.integers(1, 5))
def test_neh_inserts_each_job_at_its_best_position(seed, n, m):
    inst = gen_shop(Kind.FSSP, n, m, seed)
    history = []
    neh_order(inst, history)
    prev = 0
    for seq, spans in history:
        # Inserting one more job cannot shorten the schedule; the chosen position is the best one.
        assert min(spans) == flow_shop_makespan(inst, list(seq))
        assert min(spans) >= prev
        prev = min(spans)


@given(st.integers(0, 2**32))
def test_exact_dominates_heuristics(seed):
    inst = gen_routing(9, 1, seed)
    assert solve(inst, "exact").objective <= solve(inst, "heuristic").objective
    shop = gen_shop(Kind.JSSP, 3, 3, seed)
    exact = solve(shop, "exact").objective
    assert all(exact <= jssp_dispatch(shop, r).objective for r in RULES)


@given(st.integers(0, 2**32))
def test_heuristics_deterministic(seed):
    inst = gen_routing(15, 3, seed)
    assert vrp_heuristic(inst).solution == vrp_heuristic(inst).solution
    shop = gen_shop(Kind.FSSP, 10, 4, seed)
    assert fssp_neh(shop).solution == fssp_neh(shop).solution


def test_neh_ties_prefer_lower_index():
    inst = ShopInstance.flow_shop([[2, 2]] * 3)
    history = []
    # Equal totals are inserted in index order 0, 1, 2, and every tied
    # insertion position resolves to the front.
    assert neh_order(inst, history) == [2, 1, 0]
    assert [seq for seq, _ in history] == [(1, 0), (2, 1, 0)]


def test_jssp_brute_force_interleavings_two_jobs():
    rng = random.Random(3)
    for _ in range(10):
        inst = _tiny_jssp(rng, 2, 3)
        best = oracles.jssp_brute(inst)
        for rule in RULES:
            assert jssp_dispatch(inst, rule).objective >= best


def test_brute_force_oracles_agree_with_each_other():
    # The set-partition DP and plain assignment enumeration agree.
    inst = gen_binpack(7, 20, 3, 11)
    best = None
    for assign in itertools.product(range(7), repeat=7):
        loads = [0] * 7
        for i, b in enumerate(assign):
            loads[b] += inst.weights[i]
        if max(loads) <= inst.capacity:
            used = sum(1 for x in loads if x)
            best = used if best is None else min(best, used)
    assert best == oracles.binpack_brute(inst)
