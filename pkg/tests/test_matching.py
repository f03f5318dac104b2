"""
FairMedian Solver - Тесты паросочетаний между порталами
"""

import itertools
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from core_model import MetricSpace
from matching import (ENTER_BLOCK, ENTER_CHILD, LEAVE_BLOCK, LEAVE_CHILD, InconsistentConfigs, NoPerfectMatching,
                      MatchGraph, MatchVertex, build_phi, color_tau, min_weight_perfect_matching, phi_from_counts,
                      tau)
from conftest import make_t1


def permutation_minimum(graph: MatchGraph) -> float:
    matrix = graph.cost_matrix()
    size = len(graph.left)
    best = float("inf")
    for perm in itertools.permutations(range(size)):
        best = min(best, sum(matrix[i, perm[i]] for i in range(size)))
    return best


def subset_minimum(graph: MatchGraph) -> float:
    """Минимум по подмножествам занятых правых вершин, O(2^n n)."""
    matrix = graph.cost_matrix()
    size = len(graph.left)
    best = {0: 0.0}
    for i in range(size):
        step = {}
        for mask, cost in best.items():
            for j in range(size):
                if not mask & (1 << j) and np.isfinite(matrix[i, j]):
                    key = mask | (1 << j)
                    step[key] = min(step.get(key, float("inf")), cost + matrix[i, j])
        best = step
    return best.get((1 << size) - 1, float("inf"))


def routed_counts(draw, parent_portals, children, routes):
    """Числа со знаком, порожденные случайными маршрутами клиентов одного цвета."""
    parent_sign = {p: draw(st.sampled_from([1, -1])) for p in parent_portals}
    child_sign = [{p: draw(st.sampled_from([1, -1])) for p in portals} for portals in children]
    parent_counts = {p: 0 for p in parent_portals}
    child_counts = [{p: 0 for p in portals} for portals in children]
    for _ in range(routes):
        kind = draw(st.sampled_from(["in", "out", "between"]))
        source = draw(st.integers(0, len(children) - 1))
        if kind == "between":
            if len(children) < 2:
                continue
            target = draw(st.integers(0, len(children) - 1).filter(lambda c: c != source))
            leaving = [p for p in children[source] if child_sign[source][p] < 0]
            entering = [p for p in children[target] if child_sign[target][p] > 0]
            if leaving and entering:
                child_counts[source][draw(st.sampled_from(leaving))] -= 1
                child_counts[target][draw(st.sampled_from(entering))] += 1
            continue
        sign = 1 if kind == "in" else -1
        outer = [p for p in parent_portals if parent_sign[p] == sign]
        inner = [p for p in children[source] if child_sign[source][p] == sign]
        if outer and inner:
            parent_counts[draw(st.sampled_from(outer))] += sign
            child_counts[source][draw(st.sampled_from(inner))] += sign
    return ([parent_counts[p] for p in parent_portals],
            [(portals, [counts[p] for p in portals]) for portals, counts in zip(children, child_counts)])


@st.composite
def routed_graphs(draw, max_routes):
    size = draw(st.integers(4, 9))
    coords = draw(st.lists(st.tuples(st.integers(0, 20), st.integers(0, 20)), min_size=size, max_size=size))
    metric = MetricSpace.from_coords(coords)
    points = list(range(size))
    parent_portals = draw(st.lists(st.sampled_from(points), min_size=1, max_size=3, unique=True))
    child_count = draw(st.integers(1, 3))
    children = [draw(st.lists(st.sampled_from(points), min_size=1, max_size=3, unique=True))
                for _ in range(child_count)]
    parent_counts, child_pairs = routed_counts(draw, parent_portals, children, draw(st.integers(0, max_routes)))
    return metric, parent_portals, parent_counts, child_pairs


@settings(max_examples=200, deadline=None)
@given(routed_graphs(max_routes=6))
def test_matching_equals_permutation_minimum(case):
    metric, parent_portals, parent_counts, children = case
    graph = phi_from_counts(parent_portals, parent_counts, children, metric)
    assert len(graph.left) <= 6
    pairs, weight = min_weight_perfect_matching(graph)
    assert weight == pytest.approx(permutation_minimum(graph))
    assert len(pairs) == len(graph.left)
    assert len({j for _, j in pairs}) == len(graph.right)


@pytest.mark.slow
@settings(max_examples=200, deadline=None)
@given(routed_graphs(max_routes=8))
def test_matching_equals_subset_minimum_up_to_eight(case):
    metric, parent_portals, parent_counts, children = case
    graph = phi_from_counts(parent_portals, parent_counts, children, metric)
    assert len(graph.left) <= 8
    _, weight = min_weight_perfect_matching(graph)
    assert weight == pytest.approx(subset_minimum(graph))


@settings(max_examples=100, deadline=None)
@given(routed_graphs(max_routes=8), st.randoms(use_true_random=False))
def test_weight_ignores_order_within_side_classes(case, rnd):
    metric, parent_portals, parent_counts, children = case
    weight = color_tau(parent_portals, parent_counts, children, metric)
    parent_order = rnd.sample(range(len(parent_portals)), len(parent_portals))
    shuffled_children = []
    for portals, counts in rnd.sample(children, len(children)):
        order = rnd.sample(range(len(portals)), len(portals))
        shuffled_children.append(([portals[i] for i in order], [counts[i] for i in order]))
    shuffled = color_tau([parent_portals[i] for i in parent_order], [parent_counts[i] for i in parent_order],
                         shuffled_children, metric)
    assert shuffled == pytest.approx(weight)


@settings(max_examples=200, deadline=None)
@given(routed_graphs(max_routes=10))
def test_routed_configurations_always_match(case):
    metric, parent_portals, parent_counts, children = case
    graph = phi_from_counts(parent_portals, parent_counts, children, metric)
    pairs, weight = min_weight_perfect_matching(graph)
    matrix = graph.cost_matrix()
    assert np.isfinite(weight)
    assert weight == pytest.approx(sum(matrix[i, j] for i, j in pairs))


def test_vertex_classes_and_edges():
    metric = MetricSpace.from_coords([[0, 0], [1, 0], [5, 0], [9, 0]])
    graph = phi_from_counts([0], [1], [([1], [-1]), ([2, 3], [1, 1])], metric)
    assert [v.side_class for v in graph.left] == [ENTER_BLOCK, LEAVE_CHILD]
    assert [v.side_class for v in graph.right] == [ENTER_CHILD, ENTER_CHILD]
    assert [v.child for v in graph.right] == [1, 1]
    # 0->2 (5) и 1->3 (8) против 0->3 (9) и 1->2 (4)
    assert min_weight_perfect_matching(graph)[1] == pytest.approx(13.0)


def test_inconsistent_sizes():
    metric = MetricSpace.from_coords([[0, 0], [1, 0]])
    with pytest.raises(InconsistentConfigs):
        phi_from_counts([0], [2], [([1], [1])], metric)


def test_edge_rules():
    metric = MetricSpace.from_coords([[0, 0], [1, 0], [3, 0], [6, 0]])
    # Вход снаружи через 0, выход наружу через 3; ребенок 0 отдает двоих через 1, ребенок 1 принимает двоих через 2
    graph = phi_from_counts([0, 3], [1, -1], [([1], [-2]), ([2], [2])], metric)
    allowed = {(graph.left[i].side_class, graph.right[j].side_class, graph.left[i].child, graph.right[j].child)
               for i, j, _ in graph.edges}
    assert allowed == {
        (ENTER_BLOCK, ENTER_CHILD, None, 1),
        (LEAVE_CHILD, LEAVE_BLOCK, 0, None),
        (LEAVE_CHILD, ENTER_CHILD, 0, 1),
    }
    # 0->2 (3), 1->3 (5), 1->2 (2)
    assert min_weight_perfect_matching(graph)[1] == pytest.approx(10.0)


def test_child_cannot_reenter_itself():
    metric = MetricSpace.from_coords([[0, 0], [1, 0]])
    graph = phi_from_counts([0], [0], [([0, 1], [-1, 1])], metric)
    assert graph.edges == []
    with pytest.raises(NoPerfectMatching):
        min_weight_perfect_matching(graph)


def test_empty_graph_costs_nothing():
    metric = MetricSpace.from_coords([[0, 0]])
    assert min_weight_perfect_matching(MatchGraph()) == ([], 0.0)
    assert color_tau([0], [0], [([0], [0])], metric) == 0.0


def test_t1_flat_root_transitions():
    t1 = make_t1()
    parent = SimpleNamespace(portals=(0,), counts=((0, 0),))
    leaves = [
        SimpleNamespace(portals=(0,), counts=((1, 1),)),
        SimpleNamespace(portals=(1,), counts=((1, 1),)),
        SimpleNamespace(portals=(2,), counts=((-1, 0),)),
        SimpleNamespace(portals=(3,), counts=((0, -1),)),
        SimpleNamespace(portals=(4,), counts=((0, -1),)),
        SimpleNamespace(portals=(5,), counts=((-1, 0),)),
    ]
    first = build_phi(parent, leaves, 1, t1.metric)
    assert len(first.left) == len(first.right) == 2
    assert min_weight_perfect_matching(first)[1] == pytest.approx(2.0)
    assert tau(parent, leaves, t1.metric) == pytest.approx(6.0)


def test_cost_matrix_keeps_cheapest_parallel_edge():
    graph = MatchGraph([MatchVertex(0, ENTER_BLOCK)], [MatchVertex(1, ENTER_CHILD, 0)], [(0, 0, 4.0), (0, 0, 2.0)])
    assert graph.cost_matrix()[0, 0] == 2.0
