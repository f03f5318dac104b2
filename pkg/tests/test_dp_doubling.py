"""
FairMedian Solver - Тесты DP по дереву разбиения
"""

import pytest

from core_model import Client, CorruptTable, FairInstance, Infeasible, StateBudgetExceeded, validate_fairness
from dp_doubling import (DoublingConfig, DoublingDynamicProgram, DpTable, default_rho, portal_columns,
                         solve_qptas, solve_qptas_run)
from oracle import brute_force_opt
from split_tree import SplitTree, build_split_tree
from conftest import line_metric, make_t1, random_instance


def test_portal_columns():
    assert portal_columns(0, 0, 0) == ((),)
    assert portal_columns(0, 1, 0) == ()
    assert portal_columns(1, 1, 1) == ()
    assert sorted(portal_columns(2, 1, 1)) == [(-1, 1), (1, -1)]
    assert sorted(portal_columns(2, 2, 0)) == [(0, 2), (1, 1), (2, 0)]
    for column in portal_columns(3, 2, 1):
        assert sum(q for q in column if q > 0) == 2
        assert sum(-q for q in column if q < 0) == 1


def test_config_views():
    config = DoublingConfig(4, (7, 9), 1, ((2, -1), (0, 3)))
    assert config.enter(0) == (2, 0)
    assert config.leave(0) == (0, -1)
    assert config.column(2) == (-1, 3)
    assert config.key == (1, ((2, -1), (0, 3)))


def test_table_update_and_best():
    table = DpTable()
    key = (1, ((0,),))
    assert table.update(0, key, 5.0, None)
    assert not table.update(0, key, 7.0, ((0, ((1,),)),))
    assert table.cost(0, key) == 5.0
    table.update(0, key, 5.0, ((0, ((0,),)),))
    table.update(0, (0, ((0,),)), 9.0, None)
    assert table.best(0, ((0,),), 0) == 9.0
    assert table.best(0, ((0,),), 1) == 5.0
    assert table.best(0, ((0,),), 3) == 5.0
    assert table.cost(1, key) == float("inf")
    assert table.size == 2


def test_flat_tree_matches_brute_force_on_t1(t1):
    tree = SplitTree.flat(t1.metric, t1.points, 0.5)
    result = DoublingDynamicProgram(t1, tree).solve()
    assert result.tree_cost == pytest.approx(6.0)
    assert result.open == (0, 1)
    assert result.counts == {0: (1, 1), 1: (1, 1)}


@pytest.mark.parametrize("seed", range(8))
def test_flat_tree_matches_brute_force(seed):
    inst = random_instance(seed, clients=4, facilities=3, k=1 + seed % 2, l=2, slack=0.25)
    tree = SplitTree.flat(inst.metric, inst.points, 0.5, seed)
    result = DoublingDynamicProgram(inst, tree).solve()
    assert result.tree_cost == pytest.approx(brute_force_opt(inst).cost)


@pytest.mark.parametrize("seed", range(6))
def test_portal_model_never_below_optimum(seed):
    t1 = make_t1()
    tree = build_split_tree(t1.metric, 0.5, seed)
    result = DoublingDynamicProgram(t1, tree).solve()
    assert result.tree_cost >= 6.0 - 1e-9
    assert sum(sum(q) for q in result.counts.values()) == 4


def test_combine_matches_table(t1):
    tree = SplitTree.flat(t1.metric, t1.points, 0.5)
    dp = DoublingDynamicProgram(t1, tree)
    dp.fill()
    root = tree.root
    key = dp.root_key()
    backpointer = dp.table.block(root.id)[key][1]
    children = [dp.config(tree.blocks[c], child_key) for c, child_key in zip(root.children, backpointer)]
    target = dp.config(root, key)
    assert dp.combine(root, children, target) == pytest.approx(dp.table.cost(root.id, key))
    with pytest.raises(Infeasible):
        dp.combine(root, children[:-1], target)
    with pytest.raises(Infeasible):
        dp.combine(root, children, dp.config(root, (0, key[1])))


def test_leaf_entries(t1):
    tree = SplitTree.flat(t1.metric, t1.points, 0.5)
    dp = DoublingDynamicProgram(t1, tree)
    facility = {cfg.key for cfg, _ in dp.leaf_entries(tree.leaf_of(1))}
    assert facility == {(0, ((0, 0),)), (1, ((0, 0),)), (1, ((1, 1),)), (1, ((2, 2),))}
    assert [cfg.key for cfg, _ in dp.leaf_entries(tree.leaf_of(5))] == [(0, ((-1, 0),))]


def test_state_budget(t1):
    tree = build_split_tree(t1.metric, 0.5, 0)
    with pytest.raises(StateBudgetExceeded):
        DoublingDynamicProgram(t1, tree, max_states=3).solve()


def test_corrupt_table_detected(t1):
    tree = build_split_tree(t1.metric, 0.5, 0)
    dp = DoublingDynamicProgram(t1, tree)
    dp.fill()
    key = dp.root_key()
    child = tree.root.children[0]
    dp.table.entries[child] = {}
    with pytest.raises(CorruptTable):
        dp.traceback(key)


def test_tampered_cost_detected(t1):
    tree = build_split_tree(t1.metric, 0.5, 0)
    dp = DoublingDynamicProgram(t1, tree)
    dp.fill()
    key = dp.root_key()
    table = dp.table.block(tree.root.id)
    cost, backpointer = table[key]
    table[key] = (cost + 5.0, backpointer)
    with pytest.raises(CorruptTable):
        dp.traceback(key)


def test_best_is_monotone_in_budget(t1):
    tree = build_split_tree(t1.metric, 0.5, 1)
    dp = DoublingDynamicProgram(t1, tree)
    table = dp.fill()
    checked = 0
    for block_id, entries in table.entries.items():
        for counts in {key[1] for key in entries}:
            costs = [table.best(block_id, counts, k) for k in range(t1.k + 1)]
            assert all(later <= earlier for earlier, later in zip(costs, costs[1:]))
            checked += 1
    assert checked > 0


@pytest.mark.parametrize("seed", range(4))
def test_tree_cost_does_not_grow_with_budget(seed):
    costs = []
    for k in (1, 2):
        inst = random_instance(seed, clients=4, facilities=2, k=k, l=2, slack=0.25)
        tree = build_split_tree(inst.metric, 0.5, seed)
        costs.append(DoublingDynamicProgram(inst, tree).solve().tree_cost)
    assert costs[1] <= costs[0] + 1e-9


def test_default_rho():
    assert default_rho(0.9, 2, 1) == 0.5
    assert default_rho(0.5, 16, 2) == pytest.approx(0.5 / 8)
    assert default_rho(0.5, 16, None) == pytest.approx(0.5 / 8)


def test_solve_t1(t1):
    run = solve_qptas_run(t1, 0.5, seed=0, trees=10, rho=0.5)
    assert validate_fairness(run.solution, t1).feasible
    assert run.solution.cost == pytest.approx(6.0)
    assert all(cost >= 6.0 - 1e-9 for cost in run.tree_costs)
    assert run.states > 0


def test_solve_is_deterministic(t1):
    first = solve_qptas(t1, 0.5, 7, 3, rho=0.5)
    second = solve_qptas(t1, 0.5, 7, 3, rho=0.5)
    assert first.mu == second.mu
    assert first.cost == second.cost


def test_solve_infeasible_and_empty():
    metric = line_metric([0, 1, 2])
    infeasible = FairInstance(metric, [Client(1, 1), Client(2, 1)], [0], 1, 2, [0.5, 0.5], [0.5, 0.5])
    with pytest.raises(Infeasible):
        solve_qptas_run(infeasible, 0.5, 0, 2)
    empty = FairInstance(metric, [], [0], 1, 1, [0.0], [1.0])
    assert solve_qptas_run(empty, 0.5, 0, 2).solution.cost == 0.0


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(5))
def test_random_instances_within_factor(seed):
    inst = random_instance(seed, clients=4, facilities=2, k=2, l=2, slack=0.25)
    run = solve_qptas_run(inst, 0.5, seed, trees=5, rho=0.5)
    assert validate_fairness(run.solution, inst).feasible
    assert run.solution.cost >= brute_force_opt(inst).cost - 1e-9
