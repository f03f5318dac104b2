"""
FairMedian Solver - Cost Estimator

Оценка стоимости допустимого решения: точный перебор для маленьких
экземпляров, иначе локальный поиск k-медианы с последующим исправлением
справедливости слиянием кластеров.
"""

import logging
from typing import Dict, List, Sequence, Tuple

import numpy as np

from core_model import FairInstance, Infeasible, Solution, instance_feasible, is_fair_counts, TOLERANCE
from flow import assign_clients
from oracle import brute_force_opt, BudgetExceeded
from config import BRUTE_ESTIMATE_LIMIT, LOCAL_SEARCH_ROUNDS, ORACLE_BUDGET

# Настройка логирования
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger('FairMedianEstimator')


def _voronoi_cost(distances: np.ndarray, columns: Sequence[int]) -> float:
    if distances.shape[0] == 0:
        return 0.0
    return float(distances[:, list(columns)].min(axis=1).sum())


def local_search_centers(inst: FairInstance, max_rounds: int = LOCAL_SEARCH_ROUNDS) -> Tuple[int, ...]:
    """
    Центры k-медианы без ограничений справедливости: жадное начало и
    локальный поиск с заменой одного центра.

    Args:
        inst: Экземпляр задачи
        max_rounds: Предел числа улучшающих замен

    Returns:
        Отсортированные открытые центры
    """
    facilities = sorted(inst.facilities)
    if not facilities:
        return ()
    distances = np.array([[inst.metric.dist(c.point, f) for f in facilities] for c in inst.clients])
    distances = distances.reshape(len(inst.clients), len(facilities))
    width = min(inst.k, len(facilities))

    chosen: List[int] = []
    for _ in range(width):
        candidates = [j for j in range(len(facilities)) if j not in chosen]
        best = min(candidates, key=lambda j: (_voronoi_cost(distances, chosen + [j]), j))
        chosen.append(best)

    current = _voronoi_cost(distances, chosen)
    for _ in range(max_rounds):
        improved = False
        for position in range(len(chosen)):
            for j in range(len(facilities)):
                if j in chosen:
                    continue
                trial = chosen[:position] + [j] + chosen[position + 1:]
                cost = _voronoi_cost(distances, trial)
                if cost < current - TOLERANCE:
                    chosen, current, improved = trial, cost, True
                    break
            if improved:
                break
        if not improved:
            break
    logger.debug(f"Локальный поиск: стоимость без справедливости {current:.6f}")
    return tuple(sorted(facilities[j] for j in chosen))


def repair_fairness(inst: FairInstance, centers: Sequence[int]) -> Solution:
    """
    Делает кластеры Вороного справедливыми: наименьший несправедливый
    кластер сливается с кластером ближайшего центра, затем клиенты
    оптимально переназначаются потоком при полученных векторах цветов.

    Args:
        inst: Экземпляр задачи
        centers: Открытые центры

    Returns:
        Справедливое решение

    Raises:
        Infeasible: если глобальные доли цветов несправедливы
    """
    if not instance_feasible(inst):
        raise Infeasible("Глобальные доли цветов не удовлетворяют ограничениям")
    if not inst.clients:
        return Solution((), {}, {}, 0.0)
    ordered = sorted(centers)
    clusters: Dict[int, List[int]] = {f: [0] * inst.l for f in ordered}
    for client in inst.clients:
        nearest = min(ordered, key=lambda f: (inst.metric.dist(client.point, f), f))
        clusters[nearest][client.color - 1] += 1
    clusters = {f: q for f, q in clusters.items() if sum(q) > 0}

    while True:
        unfair = [f for f, q in clusters.items() if not is_fair_counts(q, inst.alpha, inst.beta)]
        if not unfair:
            break
        smallest = min(unfair, key=lambda f: (sum(clusters[f]), f))
        others = [f for f in clusters if f != smallest]
        target = min(others, key=lambda f: (inst.metric.dist(smallest, f), f))
        clusters[target] = [a + b for a, b in zip(clusters[target], clusters.pop(smallest))]
        logger.debug(f"Кластер {smallest} слит с кластером {target}")

    opened = sorted(clusters)
    return assign_clients(inst, opened, {f: tuple(q) for f, q in clusters.items()})


def estimate_cost(inst: FairInstance, method: str = "auto", budget: int = ORACLE_BUDGET) -> Tuple[float, Solution]:
    """
    Стоимость некоторого справедливого решения.

    Args:
        inst: Экземпляр задачи
        method: "auto", "brute" или "greedy"
        budget: Предел перебора для точной оценки

    Returns:
        Пара (стоимость, решение)

    Raises:
        Infeasible: если справедливого решения нет
    """
    if method not in ("auto", "brute", "greedy"):
        raise ValueError(f"Неизвестный способ оценки: {method}")
    if not instance_feasible(inst):
        raise Infeasible("Глобальные доли цветов не удовлетворяют ограничениям")

    if method == "brute" or (method == "auto" and inst.n <= BRUTE_ESTIMATE_LIMIT):
        try:
            solution = brute_force_opt(inst, budget=budget)
            return solution.cost, solution
        except BudgetExceeded:
            if method == "brute":
                raise
            logger.warning("Перебор слишком велик, оценка получена локальным поиском")

    solution = repair_fairness(inst, local_search_centers(inst))
    return solution.cost, solution
