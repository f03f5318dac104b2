"""
FairMedian Solver - Nets and Preprocessing

Жадное построение rho-сетей, отношение сторон и две редукции входа:
склейка близких точек для QPTAS и стягивание к центрам для HST.
"""

import logging
from dataclasses import dataclass
from typing import Tuple, Sequence, Optional, List

import numpy as np

from core_model import FairMedianError, FairInstance, MetricSpace

# Настройка логирования
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger('FairMedianNets')


class EmptyInput(FairMedianError):
    """Ошибка при построении сети по пустому множеству."""
    pass


class DegenerateSet(FairMedianError):
    """Ошибка, если во множестве меньше двух различных точек."""
    pass


class EmptyCenters(FairMedianError):
    """Ошибка при пустом множестве центров для стягивания."""
    pass


@dataclass(frozen=True)
class Net:
    """rho-сеть: покрытие и упаковка с радиусом rho."""
    center_ids: Tuple[int, ...]
    rho: float


@dataclass(frozen=True)
class Relocation:
    """Отображение перемещенных точек на их исходные положения."""
    location: Tuple[int, ...]
    original: MetricSpace
    displacement: float
    threshold: float = 0.0



def build_net(metric: MetricSpace, points: Sequence[int], rho: float,
              order: Optional[Sequence[int]] = None, seed_centers: Sequence[int] = ()) -> Net:
    """
    Жадно строит rho-сеть: точка берется, если она дальше rho от всех
    уже взятых. Любая невзятая точка лежит не дальше rho от центра.

    Args:
        metric: Метрическое пространство
        points: Множество точек
        rho: Радиус сети
        order: Порядок обхода (по умолчанию порядок идентификаторов)
        seed_centers: Центры, взятые заранее (должны быть попарно дальше rho)

    Returns:
        Сеть

    Raises:
        EmptyInput: если множество пусто
    """
    if len(points) == 0:
        raise EmptyInput("Нельзя построить сеть по пустому множеству")
    if order is None:
        order = sorted(points)
    elif sorted(order) != sorted(points):
        raise ValueError("Порядок обхода должен быть перестановкой точек")

    centers: List[int] = list(seed_centers)
    for point in order:
        if point in centers:
            continue
        if not centers or np.all(metric.matrix[point, centers] > rho):
            centers.append(point)
    return Net(tuple(centers), rho)


def _pairwise(metric: MetricSpace, points: Sequence[int]) -> np.ndarray:
    index = np.asarray(points, dtype=int)
    return metric.matrix[np.ix_(index, index)]


def min_nonzero_distance(metric: MetricSpace, points: Sequence[int]) -> float:
    """Минимальное ненулевое попарное расстояние (0, если его нет)."""
    distances = _pairwise(metric, points)
    positive = distances[distances > 0]
    return float(positive.min()) if positive.size else 0.0


def aspect_ratio(metric: MetricSpace, points: Sequence[int]) -> float:
    """
    Отношение максимального попарного расстояния к минимальному ненулевому.

    Args:
        metric: Метрическое пространство
        points: Множество точек

    Returns:
        Отношение сторон

    Raises:
        DegenerateSet: если различных точек меньше двух
    """
    smallest = min_nonzero_distance(metric, points) if len(points) >= 2 else 0.0
    if smallest == 0.0:
        raise DegenerateSet("Нужно хотя бы две различные точки")
    return float(_pairwise(metric, points).max()) / smallest


def normalize_scale(metric: MetricSpace, points: Sequence[int]) -> float:
    """
    Возвращает множитель нормировки: минимальное ненулевое расстояние
    (1.0, если все точки совпадают). После деления на него минимальное
    ненулевое расстояние равно 1.

    Args:
        metric: Метрическое пространство
        points: Множество точек

    Returns:
        Положительный множитель
    """
    smallest = min_nonzero_distance(metric, points) if len(points) >= 2 else 0.0
    return smallest if smallest > 0 else 1.0


def _relocated_instance(inst: FairInstance, location: List[int], threshold: float) -> Tuple[FairInstance, Relocation]:
    original = inst.metric
    displacement = max((original.dist(p, location[p]) for p in inst.points), default=0.0)
    relocation = Relocation(tuple(location), original, displacement, threshold)
    return inst.with_metric(original.relocated(location)), relocation


def preprocess_doubling(inst: FairInstance, eps: float, cost_estimate: float) -> Tuple[FairInstance, Relocation]:
    """
    Пока две различные позиции ближе eps*cost_estimate/n^4, переносит все
    точки второй позиции на первую. Идентификаторы сохраняются.

    Args:
        inst: Экземпляр задачи
        eps: Точность
        cost_estimate: Стоимость некоторого допустимого решения

    Returns:
        Новый экземпляр и отображение для пересчета стоимости
    """
    n = max(inst.n, 1)
    threshold = eps * cost_estimate / n ** 4
    location = list(range(len(inst.metric)))
    matrix = inst.metric.matrix
    merges = 0

    while threshold > 0:
        representatives = sorted({location[p] for p in inst.points})
        pair = None
        for i, u in enumerate(representatives):
            for v in representatives[i + 1:]:
                if 0 < matrix[u, v] < threshold:
                    pair = (u, v)
                    break
            if pair:
                break
        if pair is None:
            break
        keep, moved = pair
        for p in inst.points:
            if location[p] == moved:
                location[p] = keep
        merges += 1

    new_inst, relocation = _relocated_instance(inst, location, threshold)
    logger.debug(f"Склейка близких точек: порог {threshold:.3e}, слияний {merges}, "
                 f"смещение {relocation.displacement:.3e}")
    return new_inst, relocation


def reduce_to_centers(inst: FairInstance, centers: Sequence[int]) -> Tuple[FairInstance, Relocation]:
    """
    Переносит каждую точку в ближайший центр (при равенстве берется
    центр с меньшим идентификатором).

    Args:
        inst: Экземпляр задачи
        centers: Центры

    Returns:
        Новый экземпляр и отображение для пересчета стоимости

    Raises:
        EmptyCenters: если центров нет
    """
    if len(centers) == 0:
        raise EmptyCenters("Множество центров пусто")
    ordered = np.array(sorted(set(centers)), dtype=int)
    location = list(range(len(inst.metric)))
    for p in inst.points:
        location[p] = int(ordered[int(np.argmin(inst.metric.matrix[p, ordered]))])
    new_inst, relocation = _relocated_instance(inst, location, 0.0)
    logger.debug(f"Стягивание к {len(ordered)} центрам, смещение {relocation.displacement:.3e}")
    return new_inst, relocation
