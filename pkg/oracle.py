"""
FairMedian Solver - Brute Force Oracle

Точный перебор для маленьких экземпляров: все подмножества центров
размера не больше k и все назначения клиентов. Не использует модули
потоков и паросочетаний.
"""

import logging
import itertools
from dataclasses import dataclass
from math import comb
from typing import Callable, Optional, Sequence, Mapping, Union, List, Tuple

import numpy as np

from core_model import FairMedianError, FairInstance, Infeasible, Solution, is_fair_counts, TOLERANCE

# Настройка логирования
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger('FairMedianOracle')

DistanceOverride = Union[Callable[[int, int], float], np.ndarray, None]


class BudgetExceeded(FairMedianError):
    """Ошибка, если перебор превышает допустимое число назначений."""
    pass


@dataclass(frozen=True)
class OracleBudget:
    """Предел числа перебираемых назначений."""
    max_enumerations: int = 10 ** 7

    def __post_init__(self) -> None:
        if self.max_enumerations <= 0:
            raise ValueError("Предел перебора должен быть положительным")


def _budget(budget: Union[OracleBudget, int, None]) -> OracleBudget:
    if budget is None:
        return OracleBudget()
    if isinstance(budget, OracleBudget):
        return budget
    return OracleBudget(int(budget))


def _cost_table(inst: FairInstance, facilities: Sequence[int], distance: DistanceOverride) -> np.ndarray:
    table = np.zeros((len(inst.clients), len(facilities)))
    for i, client in enumerate(inst.clients):
        for j, f in enumerate(facilities):
            if distance is None:
                table[i, j] = inst.metric.dist(client.point, f)
            elif callable(distance):
                table[i, j] = distance(client.point, f)
            else:
                table[i, j] = distance[client.point, f]
    return table


def _best_assignment(inst: FairInstance, subset: Sequence[int], costs: np.ndarray,
                     counts: Optional[Mapping[int, Sequence[int]]]) -> Optional[Tuple[float, Tuple[int, ...]]]:
    """Лучшее назначение клиентов в subset: справедливое или с заданными векторами."""
    colors = [c.color - 1 for c in inst.clients]
    width = len(subset)
    best: Optional[Tuple[float, Tuple[int, ...]]] = None
    for choice in itertools.product(range(width), repeat=len(colors)):
        histogram = [[0] * inst.l for _ in range(width)]
        for slot, color in zip(choice, colors):
            histogram[slot][color] += 1
        if counts is not None:
            if any(tuple(histogram[j]) != tuple(counts.get(f, (0,) * inst.l)) for j, f in enumerate(subset)):
                continue
        elif not all(is_fair_counts(q, inst.alpha, inst.beta) for q in histogram):
            continue
        cost = float(sum(costs[i, slot] for i, slot in enumerate(choice)))
        if best is None or cost < best[0] - TOLERANCE:
            best = (cost, choice)
    return best


def _solution(inst: FairInstance, subset: Sequence[int], choice: Sequence[int], cost: float) -> Solution:
    mu = {client.point: subset[slot] for client, slot in zip(inst.clients, choice)}
    counts = {f: [0] * inst.l for f in subset}
    for client in inst.clients:
        counts[mu[client.point]][client.color - 1] += 1
    return Solution(tuple(subset), mu, {f: tuple(q) for f, q in counts.items()}, cost)


def enumeration_size(clients: int, facilities: int, k: int) -> int:
    """Число назначений, которые перебирает brute_force_opt."""
    return sum(comb(facilities, size) * size ** clients for size in range(1, min(k, facilities) + 1))


def brute_force_opt(inst: FairInstance, distance: DistanceOverride = None,
                    budget: Union[OracleBudget, int, None] = None) -> Solution:
    """
    Точный оптимум справедливой k-медианы перебором.

    Подмножества центров перебираются по возрастанию размера, затем
    лексикографически; назначения перебираются в смешанной системе
    счисления.

    Args:
        inst: Экземпляр задачи
        distance: Необязательная замена метрики (функция или матрица)
        budget: Предел числа назначений

    Returns:
        Оптимальное решение (стоимость в заданной метрике)

    Raises:
        BudgetExceeded: если перебор слишком велик
        Infeasible: если справедливого решения нет
    """
    limit = _budget(budget)
    if not inst.clients:
        return Solution((), {}, {}, 0.0)
    facilities = sorted(inst.facilities)
    size = enumeration_size(len(inst.clients), len(facilities), inst.k)
    if size > limit.max_enumerations:
        raise BudgetExceeded(f"Перебор {size} назначений превышает предел {limit.max_enumerations}")

    costs = _cost_table(inst, facilities, distance)
    column = {f: j for j, f in enumerate(facilities)}
    best: Optional[Tuple[float, List[int], Tuple[int, ...]]] = None
    for width in range(1, min(inst.k, len(facilities)) + 1):
        for subset in itertools.combinations(facilities, width):
            found = _best_assignment(inst, subset, costs[:, [column[f] for f in subset]], None)
            if found is not None and (best is None or found[0] < best[0] - TOLERANCE):
                best = (found[0], list(subset), found[1])
    if best is None:
        raise Infeasible("Справедливого решения не существует")
    logger.debug(f"Перебор: {size} назначений, оптимум {best[0]:.6f}")
    return _solution(inst, best[1], best[2], best[0])


def brute_force_fixed_centers(inst: FairInstance, facilities: Sequence[int],
                              counts: Optional[Mapping[int, Sequence[int]]] = None,
                              distance: DistanceOverride = None,
                              budget: Union[OracleBudget, int, None] = None) -> Solution:
    """
    Лучшее назначение клиентов в фиксированные центры: справедливое, а
    при заданных векторах цветов реализующее их в точности.

    Args:
        inst: Экземпляр задачи
        facilities: Открытые центры
        counts: Необязательные векторы цветов центров
        distance: Необязательная замена метрики
        budget: Предел числа назначений

    Returns:
        Решение

    Raises:
        BudgetExceeded: если перебор слишком велик
        Infeasible: если подходящего назначения нет
    """
    limit = _budget(budget)
    subset = sorted(facilities)
    if not inst.clients:
        return Solution(tuple(subset), {}, {f: (0,) * inst.l for f in subset}, 0.0)
    if not subset:
        raise Infeasible("Нет открытых центров")
    size = len(subset) ** len(inst.clients)
    if size > limit.max_enumerations:
        raise BudgetExceeded(f"Перебор {size} назначений превышает предел {limit.max_enumerations}")
    found = _best_assignment(inst, subset, _cost_table(inst, subset, distance), counts)
    if found is None:
        raise Infeasible("Нет назначения с требуемыми свойствами")
    return _solution(inst, subset, found[1], found[0])
