"""
FairMedian Solver - Split Tree

Случайное иерархическое разбиение метрики удвоения на блоки с порталами.
Уровень i разрезается шарами радиуса 2^i * varrho вокруг точек сети Y_i,
блоки вкладываются в блоки уровня i+1, порталы строятся сверху вниз.
"""

import math
import logging
from collections import deque
from dataclasses import dataclass
from typing import Dict, Any, List, Tuple, Sequence, Optional

import numpy as np

from core_model import FairMedianError, AspectRatioTooLarge, MetricSpace, TOLERANCE
from nets import build_net, EmptyInput

# Настройка логирования
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger('FairMedianSplitTree')

DEFAULT_MAX_LEVELS = 48           # Предел числа уровней по умолчанию


class SameBlock(FairMedianError):
    """Ошибка, если точки лежат в одном блоке заданного уровня."""
    pass


@dataclass
class Block:
    """Блок иерархического разбиения."""
    id: int
    level: int
    center: int
    members: Tuple[int, ...]
    parent: Optional[int]
    children: Tuple[int, ...] = ()
    portals: Tuple[int, ...] = ()

    @property
    def is_leaf(self) -> bool:
        return not self.children


@dataclass
class TreeNode:
    level: int
    center: int
    members: List[int]
    children: List['TreeNode']


def tree_levels(metric: MetricSpace, points: Sequence[int], max_levels: int) -> int:
    """
    Число уровней: ceil(log2(диаметр)), но не меньше 1 при двух и более
    точках; 0 для одной точки.

    Raises:
        AspectRatioTooLarge: если уровней больше max_levels
    """
    if len(points) <= 1:
        return 0
    index = np.asarray(points, dtype=int)
    diameter = float(metric.matrix[np.ix_(index, index)].max())
    levels = 1
    if diameter > 1.0:
        levels = max(1, math.ceil(math.log2(diameter) - TOLERANCE))
    if levels > max_levels:
        raise AspectRatioTooLarge(f"Требуется {levels} уровней при пределе {max_levels}")
    return levels


def carve(metric: MetricSpace, points: Sequence[int], centers: Sequence[int], radius: float) -> List[Tuple[int, List[int]]]:
    """
    Разрезает множество шарами: центры по очереди забирают еще не
    занятые точки на расстоянии не больше radius.

    Args:
        metric: Метрическое пространство
        points: Разрезаемое множество
        centers: Центры шаров в порядке обхода
        radius: Радиус шаров

    Returns:
        Список пар (центр, точки шара) для непустых шаров
    """
    unclaimed = set(points)
    clusters = []
    for center in centers:
        if not unclaimed:
            break
        ball = [p for p in sorted(unclaimed) if metric.matrix[center, p] <= radius]
        if ball:
            unclaimed.difference_update(ball)
            clusters.append((center, ball))
    for p in sorted(unclaimed):
        clusters.append((p, [p]))
    return clusters


class HierarchicalTree:
    """Иерархия вложенных разбиений с блоками, пронумерованными обходом в ширину."""

    def __init__(self, metric: MetricSpace, levels: int, blocks: List[Block],
                 varrho: float, permutation: Sequence[int], seed: Optional[int]) -> None:
        self.metric = metric
        self.levels = levels
        self.blocks = blocks
        self.varrho = varrho
        self.permutation = tuple(int(p) for p in permutation)
        self.seed = seed
        self._leaf_of: Dict[int, int] = {}
        for block in blocks:
            if block.is_leaf:
                for point in block.members:
                    self._leaf_of[point] = block.id

    @property
    def root(self) -> Block:
        return self.blocks[0]

    def leaves(self) -> List[Block]:
        return [b for b in self.blocks if b.is_leaf]

    def blocks_at(self, level: int) -> List[Block]:
        return [b for b in self.blocks if b.level == level]

    def leaf_of(self, point: int) -> Block:
        """Лист, содержащий точку."""
        return self.blocks[self._leaf_of[point]]

    def has_point(self, point: int) -> bool:
        return point in self._leaf_of

    def block_of(self, point: int, level: int) -> Block:
        """Наименьший предок листа точки, уровень которого не ниже level."""
        block = self.leaf_of(point)
        while block.level < level and block.parent is not None:
            block = self.blocks[block.parent]
        return block

    def postorder(self) -> List[Block]:
        """Блоки в порядке, где дети идут раньше родителей."""
        return sorted(self.blocks, key=lambda b: (b.level, -b.id))

    def to_dict(self, with_portals: bool = True) -> Dict[str, Any]:
        """Диагностический дамп дерева."""
        blocks = []
        for b in self.blocks:
            entry = {"id": b.id, "level": b.level, "center": b.center,
                     "members": list(b.members), "parent": b.parent}
            if with_portals:
                entry["portals"] = list(b.portals)
            blocks.append(entry)
        return {"levels": self.levels, "varrho": self.varrho, "seed": self.seed, "blocks": blocks}


def number_blocks(root: TreeNode) -> List[Block]:
    """
    Нумерует блоки обходом в ширину от корня; дети упорядочены по
    наименьшему идентификатору точки.
    """
    blocks: List[Block] = []
    queue = deque([(root, None)])
    while queue:
        node, parent = queue.popleft()
        block = Block(len(blocks), node.level, node.center, tuple(sorted(node.members)), parent)
        blocks.append(block)
        if parent is not None:
            blocks[parent].children = blocks[parent].children + (block.id,)
        for child in sorted(node.children, key=lambda c: min(c.members)):
            queue.append((child, block.id))
    return blocks


def singleton_children(node: TreeNode) -> None:
    node.children = [TreeNode(0, p, [p], []) for p in sorted(node.members)]


class SplitTree(HierarchicalTree):
    """Дерево разбиения метрики удвоения с порталами в каждом блоке."""

    def __init__(self, metric: MetricSpace, levels: int, blocks: List[Block], varrho: float,
                 permutation: Sequence[int], seed: Optional[int], rho: float) -> None:
        super().__init__(metric, levels, blocks, varrho, permutation, seed)
        self.rho = rho

    def portal_radius(self, level: int) -> float:
        """Радиус сети порталов блока уровня level."""
        return self.rho * 2 ** (level + 1)

    @classmethod
    def flat(cls, metric: MetricSpace, points: Sequence[int], rho: float, seed: int = 0) -> 'SplitTree':
        """
        Одноуровневое дерево: корень, дети которого сразу листья.

        Args:
            metric: Метрическое пространство
            points: Точки
            rho: Параметр плотности порталов

        Returns:
            Дерево разбиения
        """
        rng = np.random.default_rng(seed)
        permutation = [int(p) for p in rng.permutation(sorted(points))]
        levels = max(tree_levels(metric, points, DEFAULT_MAX_LEVELS), 1)
        root = TreeNode(levels, permutation[0], list(points), [])
        singleton_children(root)
        blocks = number_blocks(root)
        tree = cls(metric, levels, blocks, 0.5, permutation, seed, rho)
        assign_portals(tree)
        return tree


def assign_portals(tree: SplitTree) -> None:
    """
    Строит порталы сверху вниз: порталы ребенка начинаются с порталов
    родителя, лежащих в нем, и жадно дополняются до (rho*2^{i+1})-сети.
    """
    rank = {p: i for i, p in enumerate(tree.permutation)}
    for block in tree.blocks:
        order = sorted(block.members, key=rank.__getitem__)
        seeds: Tuple[int, ...] = ()
        if block.parent is not None:
            member_set = set(block.members)
            seeds = tuple(p for p in tree.blocks[block.parent].portals if p in member_set)
        block.portals = build_net(tree.metric, block.members, tree.portal_radius(block.level),
                                  order=order, seed_centers=seeds).center_ids


def build_split_tree(metric: MetricSpace, rho: float, seed: int, points: Optional[Sequence[int]] = None,
                     max_levels: int = DEFAULT_MAX_LEVELS) -> SplitTree:
    """
    Строит случайное дерево разбиения.

    Args:
        metric: Метрика после предобработки
        rho: Параметр плотности порталов из (0, 1/2]
        seed: Зерно генератора (задает varrho и перестановку pi)
        points: Разбиваемые точки (по умолчанию все точки метрики)
        max_levels: Предел числа уровней

    Returns:
        Дерево разбиения

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
        # Цепочка сетей Y_1, ..., Y_{levels-1}; Y_i является 2^{i-2}-сетью Y_{i-1}
        nets: Dict[int, List[int]] = {0: sorted(points, key=rank.__getitem__)}
        for i in range(1, levels):
            nets[i] = list(build_net(metric, nets[i - 1], 2.0 ** (i - 2), order=nets[i - 1]).center_ids)

        frontier = [root]
        for i in range(levels - 1, 0, -1):
            clusters = carve(metric, points, nets[i], 2.0 ** i * varrho)
            next_frontier = []
            for parent in frontier:
                parent_members = set(parent.members)
                for center, cluster in clusters:
                    inside = [p for p in cluster if p in parent_members]
                    if inside:
                        child = TreeNode(i, center, inside, [])
                        parent.children.append(child)
                        next_frontier.append(child)
            frontier = next_frontier
        for node in frontier:
            singleton_children(node)

    tree = SplitTree(metric, levels, number_blocks(root), varrho, permutation, seed, rho)
    assign_portals(tree)
    logger.debug(f"Дерево разбиения: уровней {levels}, блоков {len(tree.blocks)}, "
                 f"порталов в корне {len(tree.root.portals)}")
    return tree


def portal_route_distance(u: int, v: int, tree: SplitTree, level: int) -> float:
    """
    Длина кратчайшего пути u -> портал блока u -> портал блока v -> v
    для блоков уровня level.

    Args:
        u: Первая точка
        v: Вторая точка
        tree: Дерево разбиения
        level: Уровень блоков

    Returns:
        Длина пути через порталы

    Raises:
        SameBlock: если u и v лежат в одном блоке уровня level
    """
    first, second = tree.block_of(u, level), tree.block_of(v, level)
    if first.id == second.id:
        raise SameBlock(f"Точки {u} и {v} лежат в одном блоке уровня {level}")
    matrix = tree.metric.matrix
    p1 = np.asarray(first.portals, dtype=int)
    p2 = np.asarray(second.portals, dtype=int)
    routes = matrix[u, p1][:, None] + matrix[np.ix_(p1, p2)] + matrix[p2, v][None, :]
    return float(routes.min())
