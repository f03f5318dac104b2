"""
FairMedian Solver - Core Model

Экземпляры задачи справедливой k-медианы, решения, проверка
пропорциональной справедливости и стоимость назначения.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Any, List, Tuple, Optional, Sequence, Mapping

import numpy as np
from scipy.spatial.distance import cdist

# Настройка логирования
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger('FairMedianCore')

TOLERANCE = 1e-9                  # Допуск при сравнении вещественных чисел
EXHAUSTIVE_CHECK_LIMIT = 50       # До этого числа точек неравенство треугольника проверяется полностью
SAMPLED_TRIPLES = 10_000          # Число случайных троек для больших метрик


class FairMedianError(Exception):
    """Базовый класс для ошибок решателя."""
    pass


class InvalidInstance(FairMedianError):
    """Ошибка при некорректном экземпляре задачи."""
    pass


class ParseError(FairMedianError):
    """Ошибка при разборе входного файла."""
    pass


class UnassignedClient(FairMedianError):
    """Ошибка, если клиент не назначен ни одному центру."""
    pass


class UnknownFacility(FairMedianError):
    """Ошибка, если клиент назначен закрытому или неизвестному центру."""
    pass


class Infeasible(FairMedianError):
    """Ошибка, если допустимого справедливого решения не существует."""
    pass


class StateBudgetExceeded(FairMedianError):
    """Ошибка при превышении лимита состояний динамического программирования."""
    pass


class AspectRatioTooLarge(FairMedianError):
    """Ошибка, если число уровней дерева превышает допустимое."""
    pass


class CorruptTable(FairMedianError):
    """Ошибка при несогласованных обратных ссылках в таблице ДП."""
    pass


class MetricSpace:
    """Конечное метрическое пространство, заданное матрицей расстояний."""

    def __init__(self, matrix: Any, doubling_dim_hint: Optional[int] = None,
                 coords: Optional[Sequence[Sequence[float]]] = None) -> None:
        """
        Инициализация метрического пространства.

        Args:
            matrix: Квадратная матрица попарных расстояний
            doubling_dim_hint: Известная удвоенная размерность (если есть)
            coords: Координаты точек, если метрика евклидова
        """
        matrix = np.array(matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise InvalidInstance(f"Матрица расстояний должна быть квадратной, получено {matrix.shape}")
        matrix.setflags(write=False)
        self.matrix = matrix
        self.points: Tuple[int, ...] = tuple(range(matrix.shape[0]))
        self.doubling_dim_hint = doubling_dim_hint
        self.coords = None if coords is None else [list(map(float, c)) for c in coords]

    @classmethod
    def from_coords(cls, coords: Sequence[Sequence[float]], doubling_dim_hint: Optional[int] = None) -> 'MetricSpace':
        """
        Создает евклидову метрику по координатам.

        Args:
            coords: Список координат точек

        Returns:
            Метрическое пространство
        """
        array = np.asarray(coords, dtype=float)
        if array.ndim != 2 or len(array) == 0:
            raise InvalidInstance("Координаты должны быть непустым списком векторов")
        hint = doubling_dim_hint if doubling_dim_hint is not None else array.shape[1]
        return cls(cdist(array, array), doubling_dim_hint=hint, coords=array.tolist())

    def __len__(self) -> int:
        return len(self.points)

    def dist(self, u: int, v: int) -> float:
        """Расстояние между точками u и v."""
        return float(self.matrix[u, v])

    def scaled(self, factor: float) -> 'MetricSpace':
        """
        Возвращает метрику, деленную на factor.

        Args:
            factor: Положительный множитель

        Returns:
            Новое метрическое пространство
        """
        coords = None if self.coords is None else [[x / factor for x in c] for c in self.coords]
        return MetricSpace(self.matrix / factor, self.doubling_dim_hint, coords)

    def relocated(self, location: Sequence[int]) -> 'MetricSpace':
        """
        Возвращает метрику, в которой точка i стоит на месте точки location[i].

        Args:
            location: Новое положение каждой точки

        Returns:
            Новое метрическое пространство
        """
        index = np.asarray(location, dtype=int)
        return MetricSpace(self.matrix[np.ix_(index, index)], self.doubling_dim_hint)

    def check(self, seed: int = 0) -> None:
        """
        Проверяет аксиомы метрики: неотрицательность, симметрию, нулевую
        диагональ и неравенство треугольника (полностью до 50 точек,
        выборочно выше).

        Raises:
            InvalidInstance: если аксиома нарушена
        """
        m = self.matrix
        if np.any(m < -TOLERANCE):
            raise InvalidInstance("Отрицательное расстояние")
        if np.any(np.abs(np.diag(m)) > TOLERANCE):
            raise InvalidInstance("Ненулевое расстояние от точки до самой себя")
        if not np.allclose(m, m.T, atol=TOLERANCE, rtol=0.0):
            raise InvalidInstance("Матрица расстояний несимметрична")

        n = len(self)
        if n <= EXHAUSTIVE_CHECK_LIMIT:
            for mid in range(n):
                detour = m[:, mid][:, None] + m[mid, :][None, :]
                if np.any(detour < m - TOLERANCE):
                    raise InvalidInstance(f"Нарушено неравенство треугольника через точку {mid}")
        else:
            rng = np.random.default_rng(seed)
            x, y, z = rng.integers(0, n, size=(3, SAMPLED_TRIPLES))
            if np.any(m[x, y] + m[y, z] < m[x, z] - TOLERANCE):
                raise InvalidInstance("Нарушено неравенство треугольника на случайной тройке")

    def to_dict(self) -> Dict[str, Any]:
        """Сериализует метрику в формат входного файла."""
        if self.coords is not None:
            return {"kind": "euclidean2d", "coords": self.coords}
        return {"kind": "matrix", "matrix": self.matrix.tolist()}


@dataclass(frozen=True)
class Client:
    """Клиент: точка метрики и цвет (защищенная группа) от 1 до l."""
    point: int
    color: int


class FairInstance:
    """Экземпляр задачи справедливой k-медианы."""

    def __init__(self, metric: MetricSpace, clients: Sequence[Client], facilities: Sequence[int],
                 k: int, l: int, alpha: Sequence[float], beta: Sequence[float]) -> None:
        """
        Инициализация экземпляра с проверкой инвариантов.

        Args:
            metric: Метрическое пространство
            clients: Клиенты с цветами
            facilities: Точки-кандидаты в центры
            k: Максимальное число открытых центров
            l: Число цветов
            alpha: Нижние границы долей цветов
            beta: Верхние границы долей цветов
        """
        self.metric = metric
        self.clients: Tuple[Client, ...] = tuple(clients)
        self.facilities: Tuple[int, ...] = tuple(facilities)
        self.k = int(k)
        self.l = int(l)
        self.alpha: Tuple[float, ...] = tuple(float(a) for a in alpha)
        self.beta: Tuple[float, ...] = tuple(float(b) for b in beta)
        self._validate()
        self.color_of: Dict[int, int] = {c.point: c.color for c in self.clients}

    def _validate(self) -> None:
        if self.k < 1:
            raise InvalidInstance(f"k должно быть положительным, получено {self.k}")
        if self.l < 1:
            raise InvalidInstance(f"l должно быть положительным, получено {self.l}")
        if len(self.alpha) != self.l or len(self.beta) != self.l:
            raise InvalidInstance("Длины alpha и beta должны совпадать с l")
        for i, (a, b) in enumerate(zip(self.alpha, self.beta), start=1):
            if not 0.0 <= a <= b <= 1.0:
                raise InvalidInstance(f"Для цвета {i} нарушено 0 <= alpha <= beta <= 1: {a}, {b}")
        n = len(self.metric)
        ids = [c.point for c in self.clients] + list(self.facilities)
        if len(set(ids)) != len(ids):
            raise InvalidInstance("Идентификаторы клиентов и центров должны быть попарно различны")
        for point in ids:
            if not 0 <= point < n:
                raise InvalidInstance(f"Точка {point} вне метрического пространства")
        for client in self.clients:
            if not 1 <= client.color <= self.l:
                raise InvalidInstance(f"Цвет клиента {client.point} вне диапазона [1, {self.l}]: {client.color}")

    @property
    def points(self) -> Tuple[int, ...]:
        """Все точки экземпляра: клиенты и центры."""
        return tuple(sorted([c.point for c in self.clients] + list(self.facilities)))

    @property
    def n(self) -> int:
        """Число точек экземпляра |C| + |F|."""
        return len(self.clients) + len(self.facilities)

    def color_histogram(self) -> Tuple[int, ...]:
        """Число клиентов каждого цвета."""
        return color_histogram(self.clients, self.l)

    def with_metric(self, metric: MetricSpace) -> 'FairInstance':
        """Тот же экземпляр над другой метрикой с теми же идентификаторами точек."""
        return FairInstance(metric, self.clients, self.facilities, self.k, self.l, self.alpha, self.beta)

    def to_dict(self) -> Dict[str, Any]:
        """Сериализует экземпляр в JSON-совместимый словарь."""
        return {
            "space": self.metric.to_dict(),
            "clients": [{"point": c.point, "color": c.color} for c in self.clients],
            "facilities": list(self.facilities),
            "k": self.k,
            "l": self.l,
            "alpha": list(self.alpha),
            "beta": list(self.beta),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'FairInstance':
        """
        Создает экземпляр из словаря входного формата.

        Args:
            data: Словарь с полями space, clients, facilities, k, l, alpha, beta

        Returns:
            Экземпляр задачи

        Raises:
            ParseError: при нарушении формата
        """
        try:
            space = data["space"]
            kind = space["kind"]
            if kind == "euclidean2d":
                coords = space["coords"]
                if any(len(c) != 2 for c in coords):
                    raise ParseError("Координаты euclidean2d должны быть парами [x, y]")
                metric = MetricSpace.from_coords(coords, doubling_dim_hint=2)
            elif kind == "matrix":
                metric = MetricSpace(space["matrix"], doubling_dim_hint=space.get("doubling_dim"))
                metric.check()
            else:
                raise ParseError(f"Неизвестный тип пространства: {kind}")

            clients = []
            for entry in data["clients"]:
                color = entry["color"]
                if isinstance(color, (list, tuple)):
                    raise ParseError(f"Клиент {entry['point']} имеет несколько цветов")
                if isinstance(color, bool) or not isinstance(color, int):
                    raise ParseError(f"Цвет клиента {entry['point']} должен быть целым числом")
                clients.append(Client(int(entry["point"]), color))

            instance = cls(metric, clients, [int(f) for f in data["facilities"]],
                           data["k"], data["l"], data["alpha"], data["beta"])
        except ParseError:
            raise
        except (KeyError, TypeError, ValueError, InvalidInstance) as e:
            raise ParseError(f"Некорректный экземпляр: {e}")
        return instance


@dataclass
class Solution:
    """Решение: открытые центры, назначение клиентов, векторы цветов и стоимость."""
    open: Tuple[int, ...]
    mu: Dict[int, int]
    counts: Dict[int, Tuple[int, ...]]
    cost: float

    @classmethod
    def from_assignment(cls, inst: FairInstance, mu: Mapping[int, int],
                        open_facilities: Optional[Sequence[int]] = None) -> 'Solution':
        """
        Строит решение по назначению клиентов.

        Args:
            inst: Экземпляр задачи
            mu: Назначение клиент -> центр
            open_facilities: Открытые центры (по умолчанию те, кому кто-то назначен)

        Returns:
            Решение с пересчитанными векторами цветов и стоимостью
        """
        opened = tuple(sorted(set(open_facilities) if open_facilities is not None else set(mu.values())))
        counts = {f: [0] * inst.l for f in opened}
        for client in inst.clients:
            if client.point not in mu:
                raise UnassignedClient(f"Клиент {client.point} не назначен")
            facility = mu[client.point]
            if facility not in counts:
                raise UnknownFacility(f"Клиент {client.point} назначен закрытому центру {facility}")
            counts[facility][client.color - 1] += 1
        solution = cls(opened, dict(mu), {f: tuple(q) for f, q in counts.items()}, 0.0)
        solution.cost = solution_cost(solution, inst)
        return solution

    def to_dict(self) -> Dict[str, Any]:
        """Сериализует решение в JSON-совместимый словарь."""
        return {
            "open": list(self.open),
            "assignment": {str(c): f for c, f in sorted(self.mu.items())},
            "counts": {str(f): list(q) for f, q in sorted(self.counts.items())},
            "cost": self.cost,
        }


@dataclass
class SolverRun:
    """Результат запуска решателя: лучшее решение, стоимости по деревьям и число состояний."""
    solution: Solution
    tree_costs: List[float]
    states: int


@dataclass(frozen=True)
class FairnessViolation:
    """Нарушение пропорции цвета в кластере."""
    facility: int
    color: int
    ratio: float
    interval: Tuple[float, float]


@dataclass
class FairnessReport:
    """Результат проверки справедливости решения."""
    violations: List[FairnessViolation] = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return not self.violations

    def to_dict(self) -> Dict[str, Any]:
        return {
            "feasible": self.feasible,
            "violations": [
                {"facility": v.facility, "color": v.color, "ratio": v.ratio, "interval": list(v.interval)}
                for v in self.violations
            ],
        }


def color_histogram(clients: Sequence[Client], l: int) -> Tuple[int, ...]:
    """
    Считает число клиентов каждого цвета.

    Args:
        clients: Клиенты
        l: Число цветов

    Returns:
        Вектор длины l
    """
    histogram = [0] * l
    for client in clients:
        histogram[client.color - 1] += 1
    return tuple(histogram)


def is_fair_counts(q: Sequence[int], alpha: Sequence[float], beta: Sequence[float]) -> bool:
    """
    Проверяет пропорциональную справедливость вектора цветов одного кластера.
    Пустой кластер считается справедливым.

    Args:
        q: Число клиентов каждого цвета
        alpha: Нижние границы долей
        beta: Верхние границы долей

    Returns:
        True, если все доли лежат в [alpha_t, beta_t]
    """
    total = sum(q)
    if total == 0:
        return True
    for count, low, high in zip(q, alpha, beta):
        ratio = count / total
        if ratio < low - TOLERANCE or ratio > high + TOLERANCE:
            return False
    return True


def instance_feasible(inst: FairInstance) -> bool:
    """
    Проверяет, существует ли справедливое решение: достаточно, чтобы
    глобальные доли цветов лежали в [alpha, beta] и был хотя бы один центр.

    Args:
        inst: Экземпляр задачи

    Returns:
        True, если допустимое решение существует
    """
    if not inst.clients:
        return True
    if not inst.facilities:
        return False
    return is_fair_counts(inst.color_histogram(), inst.alpha, inst.beta)


def _checked_counts(sol: Solution, inst: FairInstance) -> Dict[int, List[int]]:
    opened = set(sol.open)
    counts: Dict[int, List[int]] = {f: [0] * inst.l for f in sol.open}
    for client in inst.clients:
        if client.point not in sol.mu:
            raise UnassignedClient(f"Клиент {client.point} не назначен")
        facility = sol.mu[client.point]
        if facility not in opened:
            raise UnknownFacility(f"Клиент {client.point} назначен центру {facility}, который не открыт")
        counts[facility][client.color - 1] += 1
    return counts


def validate_fairness(sol: Solution, inst: FairInstance) -> FairnessReport:
    """
    Проверяет, что каждый непустой кластер удовлетворяет ограничениям
    пропорциональности. Центры без клиентов нарушений не дают.

    Args:
        sol: Решение
        inst: Экземпляр задачи

    Returns:
        Отчет о справедливости

    Raises:
        UnassignedClient: если назначение частичное
        UnknownFacility: если клиент назначен неоткрытому центру
    """
    report = FairnessReport()
    for facility, q in sorted(_checked_counts(sol, inst).items()):
        total = sum(q)
        if total == 0:
            continue
        for color, count in enumerate(q, start=1):
            ratio = count / total
            low, high = inst.alpha[color - 1], inst.beta[color - 1]
            if ratio < low - TOLERANCE or ratio > high + TOLERANCE:
                report.violations.append(FairnessViolation(facility, color, ratio, (low, high)))
    if report.violations:
        logger.debug(f"Найдено нарушений справедливости: {len(report.violations)}")
    return report


def solution_cost(sol: Solution, inst: FairInstance) -> float:
    """
    Суммарное расстояние от клиентов до назначенных центров.

    Args:
        sol: Решение
        inst: Экземпляр задачи

    Returns:
        Стоимость решения

    Raises:
        UnassignedClient: если назначение частичное
    """
    total = 0.0
    for client in inst.clients:
        if client.point not in sol.mu:
            raise UnassignedClient(f"Клиент {client.point} не назначен")
        total += inst.metric.dist(client.point, sol.mu[client.point])
    return total
