"""
FairMedian Solver - Тесты оценки стоимости
"""

import pytest

from core_model import Client, FairInstance, Infeasible, validate_fairness
from estimator import estimate_cost, local_search_centers, repair_fairness
from oracle import brute_force_opt
from conftest import line_metric, random_instance


def test_local_search_on_t1(t1):
    assert local_search_centers(t1) == (0, 1)


def test_repair_keeps_fair_voronoi_clusters(t1):
    solution = repair_fairness(t1, [0, 1])
    assert solution.cost == pytest.approx(6.0)
    assert validate_fairness(solution, t1).feasible


def test_repair_merges_unfair_clusters():
    metric = line_metric([0, 10, 1, 2, 8, 9])
    clients = [Client(2, 1), Client(3, 1), Client(4, 2), Client(5, 2)]
    inst = FairInstance(metric, clients, [0, 1], 2, 2, [0.5, 0.5], [0.5, 0.5])
    solution = repair_fairness(inst, [0, 1])
    assert solution.open == (1,)
    assert solution.counts == {1: (2, 2)}
    assert solution.cost == pytest.approx(9 + 8 + 2 + 1)
    assert validate_fairness(solution, inst).feasible


def test_estimate_methods_agree_on_t1(t1):
    assert estimate_cost(t1)[0] == pytest.approx(6.0)
    assert estimate_cost(t1, "brute")[0] == pytest.approx(6.0)
    assert estimate_cost(t1, "greedy")[0] == pytest.approx(6.0)


def test_estimate_rejects_unknown_method(t1):
    with pytest.raises(ValueError):
        estimate_cost(t1, "magic")


def test_estimate_infeasible():
    metric = line_metric([0, 1, 2])
    inst = FairInstance(metric, [Client(1, 1), Client(2, 1)], [0], 1, 2, [0.5, 0.5], [0.5, 0.5])
    with pytest.raises(Infeasible):
        estimate_cost(inst)
    with pytest.raises(Infeasible):
        repair_fairness(inst, [0])


def test_greedy_is_feasible_upper_bound():
    for seed in range(8):
        inst = random_instance(seed, clients=5, facilities=3, k=2, l=2, slack=0.2)
        cost, solution = estimate_cost(inst, "greedy")
        assert validate_fairness(solution, inst).feasible
        assert cost >= brute_force_opt(inst).cost - 1e-9
        assert len(solution.open) <= inst.k
