"""
FairMedian Solver - Portal Matching

Двудольные графы Phi_t между потоками клиентов через порталы блока и
порталы его детей и минимальные совершенные паросочетания в них.
Конфигурация хранит для каждого портала вектор со знаком по цветам:
положительное число клиентов входит в блок, отрицательное выходит.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Tuple, Sequence, Optional

import numpy as np
from scipy.optimize import linear_sum_assignment

from core_model import FairMedianError, MetricSpace

# Настройка логирования
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger('FairMedianMatching')

# Классы вершин
ENTER_BLOCK = "X_E^F"     # клиент входит в блок через его портал
LEAVE_BLOCK = "X_L^F"     # клиент покидает блок через его портал
ENTER_CHILD = "X_E^S"     # клиент входит в ребенка через портал ребенка
LEAVE_CHILD = "X_L^S"     # клиент покидает ребенка через портал ребенка


class InconsistentConfigs(FairMedianError):
    """Ошибка, если доли графа имеют разный размер."""
    pass


class NoPerfectMatching(FairMedianError):
    """Ошибка, если в графе нет совершенного паросочетания."""
    pass


@dataclass(frozen=True)
class MatchVertex:
    """Вершина графа: портал, класс и номер ребенка (None для блока)."""
    portal: int
    side_class: str
    child: Optional[int] = None


@dataclass
class MatchGraph:
    """Взвешенный двудольный граф R x S."""
    left: List[MatchVertex] = field(default_factory=list)
    right: List[MatchVertex] = field(default_factory=list)
    edges: List[Tuple[int, int, float]] = field(default_factory=list)

    def cost_matrix(self) -> np.ndarray:
        """Матрица весов |R| x |S|, отсутствующие ребра равны +inf."""
        matrix = np.full((len(self.left), len(self.right)), np.inf)
        for i, j, weight in self.edges:
            matrix[i, j] = min(matrix[i, j], weight)
        return matrix


def _allowed(u: MatchVertex, v: MatchVertex) -> bool:
    if u.side_class == ENTER_BLOCK:
        return v.side_class == ENTER_CHILD
    # u из X_L^S
    if v.side_class == LEAVE_BLOCK:
        return True
    return v.child != u.child


def phi_from_counts(parent_portals: Sequence[int], parent_counts: Sequence[int],
                    children: Sequence[Tuple[Sequence[int], Sequence[int]]],
                    metric: MetricSpace) -> MatchGraph:
    """
    Строит граф Phi_t по столбцам одного цвета.

    Args:
        parent_portals: Порталы блока
        parent_counts: Число со знаком для каждого портала блока
        children: Пары (порталы ребенка, числа со знаком для его порталов)
        metric: Метрика

    Returns:
        Граф Phi_t

    Raises:
        InconsistentConfigs: если |R| != |S|
    """
    graph = MatchGraph()
    for portal, q in zip(parent_portals, parent_counts):
        if q > 0:
            graph.left.extend([MatchVertex(portal, ENTER_BLOCK)] * q)
        elif q < 0:
            graph.right.extend([MatchVertex(portal, LEAVE_BLOCK)] * -q)
    for index, (portals, counts) in enumerate(children):
        for portal, q in zip(portals, counts):
            if q < 0:
                graph.left.extend([MatchVertex(portal, LEAVE_CHILD, index)] * -q)
            elif q > 0:
                graph.right.extend([MatchVertex(portal, ENTER_CHILD, index)] * q)

    if len(graph.left) != len(graph.right):
        raise InconsistentConfigs(f"Размеры долей не совпадают: |R|={len(graph.left)}, |S|={len(graph.right)}")

    matrix = metric.matrix
    for i, u in enumerate(graph.left):
        for j, v in enumerate(graph.right):
            if _allowed(u, v):
                graph.edges.append((i, j, float(matrix[u.portal, v.portal])))
    return graph


def build_phi(parent_cfg, child_cfgs: Sequence, color: int, metric: MetricSpace) -> MatchGraph:
    """
    Строит граф Phi_t для цвета color по конфигурациям блока и детей.

    Args:
        parent_cfg: Конфигурация блока (поля portals и counts)
        child_cfgs: Конфигурации детей
        color: Цвет от 1 до l
        metric: Метрика

    Returns:
        Граф Phi_t

    Raises:
        InconsistentConfigs: если |R| != |S|
    """
    column = color - 1
    return phi_from_counts(
        parent_cfg.portals, [q[column] for q in parent_cfg.counts],
        [(cfg.portals, [q[column] for q in cfg.counts]) for cfg in child_cfgs],
        metric,
    )


def min_weight_perfect_matching(graph: MatchGraph) -> Tuple[List[Tuple[int, int]], float]:
    """
    Минимальное по весу совершенное паросочетание (поиск кратчайших
    увеличивающих путей с потенциалами, scipy.optimize.linear_sum_assignment).

    Args:
        graph: Граф с |R| = |S|

    Returns:
        Пары (индекс в R, индекс в S) и суммарный вес

    Raises:
        NoPerfectMatching: если совершенного паросочетания нет
    """
    if len(graph.left) != len(graph.right):
        raise InconsistentConfigs("Паросочетание ищется только при |R| = |S|")
    if not graph.left:
        return [], 0.0
    matrix = graph.cost_matrix()
    try:
        rows, cols = linear_sum_assignment(matrix)
    except ValueError:
        raise NoPerfectMatching("В графе нет совершенного паросочетания")
    weight = float(matrix[rows, cols].sum())
    if not np.isfinite(weight):
        raise NoPerfectMatching("В графе нет совершенного паросочетания")
    return list(zip(rows.tolist(), cols.tolist())), weight


def color_tau(parent_portals: Sequence[int], parent_counts: Sequence[int],
              children: Sequence[Tuple[Sequence[int], Sequence[int]]], metric: MetricSpace) -> float:
    """Вес минимального паросочетания графа одного цвета."""
    graph = phi_from_counts(parent_portals, parent_counts, children, metric)
    return min_weight_perfect_matching(graph)[1]


def tau(parent_cfg, child_cfgs: Sequence, metric: MetricSpace) -> float:
    """
    Стоимость переходов между порталами блока и его детей: сумма по
    цветам весов минимальных паросочетаний.

    Args:
        parent_cfg: Конфигурация блока
        child_cfgs: Конфигурации детей
        metric: Метрика

    Returns:
        Неотрицательная стоимость

    Raises:
        InconsistentConfigs: если конфигурации не сбалансированы
        NoPerfectMatching: если некоторый граф не имеет совершенного паросочетания
    """
    colors = len(parent_cfg.counts[0]) if parent_cfg.counts else 0
    return sum(min_weight_perfect_matching(build_phi(parent_cfg, child_cfgs, t, metric))[1]
               for t in range(1, colors + 1))
