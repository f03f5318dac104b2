"""
FairMedian Solver - Tree Diagnostics

Проверка структурных инвариантов деревьев, эмпирическая вероятность
разделения пары точек по уровням и рост искажения HST.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
from scipy.stats import binomtest

from core_model import MetricSpace, TOLERANCE
from hst import Hst, build_hst, hst_distance
from split_tree import SplitTree, build_split_tree, tree_levels
from utils import derive_seeds
from config import DEFAULT_DOUBLING_DIM, MAX_LEVELS

# Настройка логирования
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger('FairMedianDiagnostics')


def _diameter(metric: MetricSpace, members: Sequence[int]) -> float:
    index = np.asarray(members, dtype=int)
    return float(metric.matrix[np.ix_(index, index)].max()) if len(index) else 0.0


def tree_invariant_report(tree: Union[SplitTree, Hst]) -> List[str]:
    """
    Проверяет структурные инварианты дерева.

    Args:
        tree: Дерево разбиения или HST

    Returns:
        Имена нарушенных инвариантов (пустой список, если все выполнены)
    """
    violations = set()
    metric = tree.metric
    root = tree.root
    if root.level != tree.levels or root.parent is not None:
        violations.add("root")

    for block in tree.blocks:
        if block.is_leaf:
            if block.level != 0 or len(block.members) != 1:
                violations.add("leaves")
            continue
        children = [tree.blocks[c] for c in block.children]
        union = sorted(p for child in children for p in child.members)
        if union != sorted(block.members):
            violations.add("nesting")
        if any(child.level != block.level - 1 for child in children):
            violations.add("levels")
        if _diameter(metric, block.members) > 2.0 ** (block.level + 1) + TOLERANCE:
            violations.add("diameter")

        if isinstance(tree, SplitTree):
            child_portals = {p for child in children for p in child.portals}
            if not set(block.portals) <= child_portals:
                violations.add("portal_nesting")
        if isinstance(tree, Hst) and tree.edge_length(block.level) != 2.0 ** block.level:
            violations.add("edge_length")

    if isinstance(tree, SplitTree):
        for block in tree.blocks:
            radius = tree.portal_radius(block.level)
            portals = np.asarray(block.portals, dtype=int)
            members = np.asarray(block.members, dtype=int)
            if len(portals) == 0 or not set(block.portals) <= set(block.members):
                violations.add("portal_net")
                continue
            pairwise = metric.matrix[np.ix_(portals, portals)]
            off_diagonal = pairwise[~np.eye(len(portals), dtype=bool)]
            covering = metric.matrix[np.ix_(members, portals)].min(axis=1)
            if np.any(off_diagonal < radius - TOLERANCE) or np.any(covering > radius + TOLERANCE):
                violations.add("portal_net")

    if isinstance(tree, Hst):
        points = sorted(root.members)
        for i, u in enumerate(points):
            for v in points[i + 1:]:
                for level in range(tree.levels + 1):
                    if metric.dist(u, v) > 2.0 ** (level + 1) + TOLERANCE and \
                            tree.block_of(u, level).id == tree.block_of(v, level).id:
                        violations.add("separation")

    return sorted(violations)


@dataclass
class LevelSeparation:
    """Частота разделения пары на одном уровне."""
    level: int
    separated: int
    samples: int
    probability: float
    ci_low: float
    ci_high: float


@dataclass
class SeparationProfile:
    """Профиль вероятности разделения пары точек по уровням."""
    u: int
    v: int
    distance: float
    levels: List[LevelSeparation] = field(default_factory=list)
    fitted_constant: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "u": self.u, "v": self.v, "distance": self.distance,
            "fitted_constant": self.fitted_constant,
            "levels": [vars(level) for level in self.levels],
        }


def separation_profile(metric: MetricSpace, points: Sequence[int], u: int, v: int, samples: int, seed: int,
                       rho: float = 0.5, doubling_dim: Optional[int] = None,
                       max_levels: int = MAX_LEVELS) -> SeparationProfile:
    """
    Эмпирическая вероятность того, что u и v лежат в разных блоках уровня i,
    с 95% интервалами Уилсона и подобранной константой
    C = max_i p_i 2^i / (d dist(u, v)).

    Args:
        metric: Метрика
        points: Точки дерева
        u: Первая точка
        v: Вторая точка
        samples: Число деревьев
        seed: Зерно
        rho: Плотность порталов (на разделение не влияет)
        doubling_dim: Удвоенная размерность d

    Returns:
        Профиль разделения
    """
    levels = tree_levels(metric, points, max_levels)
    separated = np.zeros(levels + 1, dtype=int)
    for tree_seed in derive_seeds(seed, samples):
        tree = build_split_tree(metric, rho, tree_seed, points=points, max_levels=max_levels)
        for level in range(levels + 1):
            if tree.block_of(u, level).id != tree.block_of(v, level).id:
                separated[level] += 1

    distance = metric.dist(u, v)
    d = doubling_dim or metric.doubling_dim_hint or DEFAULT_DOUBLING_DIM
    profile = SeparationProfile(u, v, distance)
    for level in range(levels + 1):
        count = int(separated[level])
        interval = binomtest(count, samples).proportion_ci(confidence_level=0.95, method="wilson")
        probability = count / samples
        profile.levels.append(LevelSeparation(level, count, samples, probability,
                                              float(interval.low), float(interval.high)))
        if distance > 0:
            profile.fitted_constant = max(profile.fitted_constant, probability * 2 ** level / (d * distance))
    logger.info(f"Разделение пары ({u}, {v}): константа {profile.fitted_constant:.3f} по {samples} деревьям")
    return profile


@dataclass
class DistortionProfile:
    """Среднее искажение HST в зависимости от числа точек m и подгонка a ln m + b."""
    sizes: List[int]
    mean_distortion: List[float]
    slope: float
    intercept: float

    def to_dict(self) -> Dict[str, Any]:
        return vars(self).copy()


def mean_distortion(metric: MetricSpace, points: Sequence[int], samples: int, seed: int,
                    max_levels: int = MAX_LEVELS) -> float:
    """Среднее по деревьям и парам отношение hst_distance / dist."""
    ratios = []
    pairs = [(u, v) for i, u in enumerate(points) for v in points[i + 1:] if metric.dist(u, v) > 0]
    for tree_seed in derive_seeds(seed, samples):
        tree = build_hst(metric, tree_seed, points=points, max_levels=max_levels)
        ratios.extend(hst_distance(u, v, tree) / metric.dist(u, v) for u, v in pairs)
    return float(np.mean(ratios)) if ratios else 0.0


def distortion_profile(metric: MetricSpace, points: Sequence[int], samples: int, seed: int,
                       min_size: int = 2) -> DistortionProfile:
    """
    Искажение на префиксах множества точек и подгонка a ln m + b
    методом наименьших квадратов.

    Args:
        metric: Метрика
        points: Точки
        samples: Число деревьев на префикс
        seed: Зерно
        min_size: Наименьший префикс

    Returns:
        Профиль искажения
    """
    points = list(points)
    sizes = list(range(min_size, len(points) + 1))
    means = [mean_distortion(metric, points[:m], samples, seed + m) for m in sizes]
    slope, intercept = 0.0, means[0] if means else 0.0
    if len(sizes) >= 2:
        slope, intercept = (float(x) for x in np.polyfit(np.log(sizes), means, 1))
    logger.info(f"Искажение HST: {slope:.3f} ln m + {intercept:.3f}")
    return DistortionProfile(sizes, means, slope, intercept)
