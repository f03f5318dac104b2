"""
FairMedian Solver - Hierarchically Separated Trees

Вероятностное вложение метрики в 2-HST: каждый блок уровня i+1
разрезается шарами радиуса 2^i * varrho вокруг своих точек в порядке pi,
ребро от блока уровня i к ребенку имеет длину 2^i.
"""

import logging
from typing import Dict, Any, Optional, Sequence

import numpy as np

from core_model import FairMedianError, MetricSpace
from nets import EmptyInput
from split_tree import (HierarchicalTree, TreeNode, carve, number_blocks, singleton_children,
                        tree_levels, DEFAULT_MAX_LEVELS)

# Настройка логирования
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger('FairMedianHST')


class UnknownLeaf(FairMedianError):
    """Ошибка, если точка не является листом дерева."""
    pass


class Hst(HierarchicalTree):
    """2-HST над конечной метрикой."""

    def edge_length(self, level: int) -> float:
        """Длина ребра от блока уровня level к его ребенку."""
        return float(2 ** level)

    def lca_level(self, u: int, v: int) -> int:
        """
        Уровень наименьшего общего предка листьев u и v.

        Raises:
            UnknownLeaf: если точка не лист дерева
        """
        for point in (u, v):
            if not self.has_point(point):
                raise UnknownLeaf(f"Точка {point} не является листом дерева")
        first, second = self.leaf_of(u), self.leaf_of(v)
        while first.id != second.id:
            if first.level <= second.level:
                first = self.blocks[first.parent]
            else:
                second = self.blocks[second.parent]
        return first.level

    def to_dict(self, with_portals: bool = False) -> Dict[str, Any]:
        return super().to_dict(with_portals=False)


def build_hst(metric: MetricSpace, seed: int, points: Optional[Sequence[int]] = None,
              max_levels: int = DEFAULT_MAX_LEVELS) -> Hst:
    """
    Строит случайное 2-HST.

    Args:
        metric: Метрика (обычно после стягивания к центрам)
        seed: Зерно генератора
        points: Точки дерева (по умолчанию все точки метрики)
        max_levels: Предел числа уровней

    Returns:
        Дерево

    Raises:
        AspectRatioTooLarge: если уровней больше max_levels
    """
    points = sorted(metric.points if points is None else points)
    if not points:
        raise EmptyInput("Нельзя построить дерево по пустому множеству")
    rng = np.random.default_rng(seed)
    varrho = float(rng.uniform(0.5, 1.0))
    permutation = [int(p) for p in rng.permutation(points)]
    rank = {p: i for i, p in enumerate(permutation)}
    levels = tree_levels(metric, points, max_levels)

    root = TreeNode(levels, permutation[0], list(points), [])
    if levels > 0:
        frontier = [root]
        for i in range(levels - 1, 0, -1):
            next_frontier = []
            for parent in frontier:
                # Разрез ограничен блоком родителя
                centers = sorted(parent.members, key=rank.__getitem__)
                for center, ball in carve(metric, parent.members, centers, 2.0 ** i * varrho):
                    child = TreeNode(i, center, ball, [])
                    parent.children.append(child)
                    next_frontier.append(child)
            frontier = next_frontier
        for node in frontier:
            singleton_children(node)

    tree = Hst(metric, levels, number_blocks(root), varrho, permutation, seed)
    logger.debug(f"HST: уровней {levels}, блоков {len(tree.blocks)}")
    return tree


def hst_distance(u: int, v: int, tree: Hst) -> float:
    """
    Расстояние в дереве: удвоенная сумма длин ребер от листа до
    наименьшего общего предка уровня j, то есть 2^{j+2} - 4.

    Args:
        u: Первый лист
        v: Второй лист
        tree: Дерево

    Returns:
        Расстояние в дереве

    Raises:
        UnknownLeaf: если точка не лист дерева
    """
    level = tree.lca_level(u, v)
    if u == v or level == 0:
        return 0.0
    return float(2 ** (level + 2) - 4)


def unit_edge_path_length(level: int) -> float:
    """Длина пути 2(1 + 2 + ... + 2^j), если считать и ребра листьев; при j >= 1 не больше удвоенного hst_distance."""
    return float(2 * (2 ** (level + 1) - 1))


def hst_distance_matrix(tree: Hst, size: int) -> np.ndarray:
    """
    Матрица древесных расстояний для точек 0..size-1, лежащих в дереве
    (остальные строки нулевые).

    Args:
        tree: Дерево
        size: Размер матрицы

    Returns:
        Матрица расстояний
    """
    matrix = np.zeros((size, size))
    points = [p for p in range(size) if tree.has_point(p)]
    for i, u in enumerate(points):
        for v in points[i + 1:]:
            matrix[u, v] = matrix[v, u] = hst_distance(u, v, tree)
    return matrix
