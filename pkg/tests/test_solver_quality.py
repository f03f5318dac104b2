"""
FairMedian Solver - Статистические проверки качества решателей

Долгие тесты: запускаются через pytest -m slow.
"""

import numpy as np
import pytest

from core_model import StateBudgetExceeded, validate_fairness
from dp_doubling import solve_qptas_run
from dp_tree import TreeDynamicProgram, solve_log_k_run
from hst import build_hst, hst_distance_matrix
from oracle import brute_force_opt
from conftest import random_instance

pytestmark = pytest.mark.slow

CORPUS_SIZE = 30


def _mixed_instance(seed):
    """Экземпляр с n <= 10, k <= 3, l <= 2."""
    rng = np.random.default_rng(1000 + seed)
    facilities = int(rng.integers(2, 5))
    clients = int(rng.integers(2, 11 - facilities))
    l = int(rng.integers(1, 3))
    k = int(rng.integers(1, min(3, facilities) + 1))
    slack = float(rng.uniform(0.1, 0.3))
    return random_instance(seed, clients=clients, facilities=facilities, k=k, l=l, slack=slack)


def _euclidean_corpus():
    return [random_instance(seed, clients=4 + seed % 2, facilities=2 + seed % 2, k=1 + seed % 2,
                            l=1 + (seed // 2) % 2, slack=0.2)
            for seed in range(CORPUS_SIZE)]


@pytest.fixture(scope="module")
def corpus_optima():
    corpus = _euclidean_corpus()
    return [(inst, brute_force_opt(inst).cost) for inst in corpus]


def test_tree_dp_solutions_are_fair():
    for seed in range(500):
        inst = _mixed_instance(seed)
        run = solve_log_k_run(inst, seed, trees=2)
        report = validate_fairness(run.solution, inst)
        assert report.feasible, f"seed {seed}: {report.to_dict()}"
        assert len(run.solution.open) <= inst.k


def test_doubling_dp_solutions_are_fair():
    solved = 0
    for seed in range(500):
        inst = _mixed_instance(seed)
        try:
            run = solve_qptas_run(inst, 0.5, seed, trees=1, rho=0.5, max_states=200_000)
        except StateBudgetExceeded:
            continue
        report = validate_fairness(run.solution, inst)
        assert report.feasible, f"seed {seed}: {report.to_dict()}"
        assert len(run.solution.open) <= inst.k
        solved += 1
    assert solved > 0


@pytest.mark.parametrize("seed", range(100))
def test_tree_cost_equals_tree_metric_optimum(seed):
    inst = random_instance(seed, clients=3 + seed % 3, facilities=2 + seed % 2, k=1 + seed % 2,
                           l=1 + (seed // 3) % 2, slack=0.2)
    assert inst.n <= 8
    tree = build_hst(inst.metric, seed)
    result = TreeDynamicProgram(inst, tree).solve()
    oracle = brute_force_opt(inst, distance=hst_distance_matrix(tree, len(inst.metric)))
    assert result.tree_cost == pytest.approx(oracle.cost)


def test_doubling_dp_close_to_optimum(corpus_optima):
    close = 0
    for seed, (inst, opt) in enumerate(corpus_optima):
        try:
            run = solve_qptas_run(inst, 0.5, seed, trees=10, max_states=10 ** 7)
        except StateBudgetExceeded:
            continue
        assert run.solution.cost >= opt - 1e-9
        if run.solution.cost <= 1.5 * opt + 1e-9:
            close += 1
    assert close >= 0.9 * len(corpus_optima)


def test_tree_dp_ratio_distribution(corpus_optima):
    ratios = []
    for seed, (inst, opt) in enumerate(corpus_optima):
        run = solve_log_k_run(inst, seed, trees=20)
        ratios.append(run.solution.cost / opt)
    assert min(ratios) >= 1.0 - 1e-9
    assert float(np.median(ratios)) <= 4.0
