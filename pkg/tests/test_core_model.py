"""
FairMedian Solver - Тесты модели задачи
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from core_model import (Client, FairInstance, MetricSpace, Solution, InvalidInstance, ParseError,
                        UnassignedClient, UnknownFacility, color_histogram, is_fair_counts,
                        instance_feasible, validate_fairness, solution_cost)
from conftest import make_t1, line_metric, random_instance


def test_t1_optimal_solution_is_feasible(t1):
    solution = Solution.from_assignment(t1, {2: 0, 3: 0, 4: 1, 5: 1})
    report = validate_fairness(solution, t1)
    assert report.feasible
    assert report.to_dict() == {"feasible": True, "violations": []}


def test_t1_optimal_cost(t1):
    solution = Solution.from_assignment(t1, {2: 0, 3: 0, 4: 1, 5: 1})
    assert solution.cost == pytest.approx(6.0)
    assert solution.counts == {0: (1, 1), 1: (1, 1)}
    assert solution_cost(solution, t1) == pytest.approx(6.0)


def test_unfair_cluster_reported(t1):
    solution = Solution.from_assignment(t1, {2: 0, 5: 0, 3: 1, 4: 1})
    report = validate_fairness(solution, t1)
    assert not report.feasible
    assert {(v.facility, v.color) for v in report.violations} == {(0, 1), (0, 2), (1, 1), (1, 2)}
    assert report.violations[0].interval == (0.5, 0.5)


def test_open_facility_without_clients_is_fair(t1):
    solution = Solution.from_assignment(t1, {2: 0, 3: 0, 4: 0, 5: 0}, open_facilities=[0, 1])
    assert validate_fairness(solution, t1).feasible
    assert solution.counts[1] == (0, 0)


def test_unassigned_client_raises(t1):
    solution = Solution((0,), {2: 0, 3: 0, 4: 0}, {0: (1, 2)}, 0.0)
    with pytest.raises(UnassignedClient):
        validate_fairness(solution, t1)


def test_assignment_to_closed_facility_raises(t1):
    solution = Solution((0,), {2: 0, 3: 0, 4: 1, 5: 1}, {0: (1, 1)}, 0.0)
    with pytest.raises(UnknownFacility):
        validate_fairness(solution, t1)
    with pytest.raises(UnknownFacility):
        Solution.from_assignment(t1, {2: 0, 3: 0, 4: 1, 5: 1}, open_facilities=[0])


def test_is_fair_counts_boundaries():
    assert is_fair_counts((0, 0), (0.5, 0.5), (0.5, 0.5))
    assert is_fair_counts((1, 1), (0.5, 0.5), (0.5, 0.5))
    assert not is_fair_counts((2, 1), (0.5, 0.5), (0.5, 0.5))
    assert is_fair_counts((1, 2), (1 / 3, 0.0), (1.0, 2 / 3))


def test_color_histogram(t1):
    assert color_histogram(t1.clients, 2) == (2, 2)
    assert t1.color_histogram() == (2, 2)


def test_instance_feasible(t1):
    assert instance_feasible(t1)
    skewed = FairInstance(t1.metric, [Client(2, 1), Client(3, 1), Client(4, 2), Client(5, 1)],
                          [0, 1], 2, 2, [0.5, 0.5], [0.5, 0.5])
    assert not instance_feasible(skewed)
    empty = FairInstance(t1.metric, [], [0, 1], 2, 2, [0.5, 0.5], [0.5, 0.5])
    assert instance_feasible(empty)


@pytest.mark.parametrize("kwargs", [
    {"k": 0},
    {"l": 3},
    {"alpha": [0.6, 0.5]},
    {"beta": [0.5, 1.5]},
    {"facilities": [0, 2]},
    {"facilities": [0, 99]},
])
def test_invalid_instances(kwargs):
    t1 = make_t1()
    params = {"metric": t1.metric, "clients": t1.clients, "facilities": [0, 1], "k": 2, "l": 2,
              "alpha": [0.5, 0.5], "beta": [0.5, 0.5]}
    params.update(kwargs)
    with pytest.raises(InvalidInstance):
        FairInstance(**params)


def test_client_color_out_of_range():
    metric = line_metric([0, 1])
    with pytest.raises(InvalidInstance):
        FairInstance(metric, [Client(1, 3)], [0], 1, 2, [0, 0], [1, 1])


def test_instance_round_trip(t1):
    restored = FairInstance.from_dict(t1.to_dict())
    assert restored.clients == t1.clients
    assert restored.facilities == t1.facilities
    assert restored.metric.dist(0, 5) == pytest.approx(9.0)
    assert restored.to_dict() == t1.to_dict()


def test_from_dict_matrix_space():
    data = {
        "space": {"kind": "matrix", "matrix": [[0, 2, 3], [2, 0, 1], [3, 1, 0]]},
        "clients": [{"point": 1, "color": 1}, {"point": 2, "color": 2}],
        "facilities": [0], "k": 1, "l": 2, "alpha": [0.5, 0.5], "beta": [0.5, 0.5],
    }
    inst = FairInstance.from_dict(data)
    assert inst.metric.dist(0, 2) == 3.0
    assert inst.metric.to_dict()["kind"] == "matrix"


@pytest.mark.parametrize("matrix", [
    [[0, 1, 100], [5, 0, 1], [100, 1, 0]],
    [[0, 1, 100], [1, 0, 1], [100, 1, 0]],
    [[0, -1, 1], [-1, 0, 1], [1, 1, 0]],
])
def test_from_dict_rejects_non_metric_matrix(matrix):
    data = {
        "space": {"kind": "matrix", "matrix": matrix},
        "clients": [{"point": 1, "color": 1}, {"point": 2, "color": 1}],
        "facilities": [0], "k": 1, "l": 1, "alpha": [0.0], "beta": [1.0],
    }
    with pytest.raises(ParseError):
        FairInstance.from_dict(data)


@pytest.mark.parametrize("mutate", [
    lambda d: d["clients"][0].update(color=[1, 2]),
    lambda d: d["clients"][0].update(color="1"),
    lambda d: d["clients"][0].update(color=5),
    lambda d: d.pop("k"),
    lambda d: d["space"].update(kind="sphere"),
    lambda d: d["space"].update(coords=[[0, 0, 0]] * 6),
])
def test_from_dict_rejects_malformed(t1, mutate):
    data = t1.to_dict()
    mutate(data)
    with pytest.raises(ParseError):
        FairInstance.from_dict(data)


def test_metric_check_detects_violations():
    MetricSpace([[0, 1, 2], [1, 0, 1], [2, 1, 0]]).check()
    with pytest.raises(InvalidInstance):
        MetricSpace([[0, 1, 5], [1, 0, 1], [5, 1, 0]]).check()
    with pytest.raises(InvalidInstance):
        MetricSpace([[0, 1], [2, 0]]).check()
    with pytest.raises(InvalidInstance):
        MetricSpace([[1, 1], [1, 0]]).check()
    with pytest.raises(InvalidInstance):
        MetricSpace([[0, 1, 2]])


def test_metric_scaled_and_relocated():
    metric = line_metric([0, 4, 10])
    assert metric.scaled(2.0).dist(0, 2) == pytest.approx(5.0)
    moved = metric.relocated([0, 0, 2])
    assert moved.dist(0, 1) == 0.0
    assert moved.dist(1, 2) == pytest.approx(10.0)
    assert not moved.matrix.flags.writeable


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 100), st.floats(0, 100)), min_size=1, max_size=60))
def test_euclidean_metrics_pass_check(coords):
    MetricSpace.from_coords(coords).check()


def _relabel(inst, perm):
    inverse = np.argsort(perm)
    matrix = inst.metric.matrix[np.ix_(inverse, inverse)]
    clients = [Client(int(perm[c.point]), c.color) for c in reversed(inst.clients)]
    facilities = [int(perm[f]) for f in reversed(inst.facilities)]
    return FairInstance(MetricSpace(matrix), clients, facilities, inst.k, inst.l, inst.alpha, inst.beta)


@pytest.mark.parametrize("seed", range(15))
def test_fairness_report_ignores_point_labels(seed):
    inst = random_instance(seed, clients=6, facilities=3, k=3, slack=0.1)
    rng = np.random.default_rng(seed)
    mu = {c.point: int(rng.choice(inst.facilities)) for c in inst.clients}
    perm = rng.permutation(len(inst.metric))
    relabeled = _relabel(inst, perm)
    before = validate_fairness(Solution.from_assignment(inst, mu), inst)
    after = validate_fairness(
        Solution.from_assignment(relabeled, {int(perm[c]): int(perm[f]) for c, f in mu.items()}), relabeled)
    assert before.feasible == after.feasible
    assert {(int(perm[v.facility]), v.color) for v in before.violations} == \
        {(v.facility, v.color) for v in after.violations}


def test_t1_relabeled_keeps_fair_and_unfair_assignments(t1):
    perm = np.array([5, 3, 1, 0, 2, 4])
    relabeled = _relabel(t1, perm)
    fair = {int(perm[c]): int(perm[f]) for c, f in {2: 0, 3: 0, 4: 1, 5: 1}.items()}
    unfair = {int(perm[c]): int(perm[f]) for c, f in {2: 0, 5: 0, 3: 1, 4: 1}.items()}
    assert validate_fairness(Solution.from_assignment(relabeled, fair), relabeled).feasible
    assert Solution.from_assignment(relabeled, fair).cost == pytest.approx(6.0)
    assert len(validate_fairness(Solution.from_assignment(relabeled, unfair), relabeled).violations) == 4
