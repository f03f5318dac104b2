"""
FairMedian Solver - Общие фикстуры тестов
"""

import numpy as np
import pytest

from core_model import Client, FairInstance, MetricSpace


def line_metric(xs):
    """Метрика точек на прямой."""
    return MetricSpace.from_coords([[float(x), 0.0] for x in xs], doubling_dim_hint=1)


def make_t1() -> FairInstance:
    """
    Прямая: центры в 0 и 10, клиенты цвета 1 в 1 и 9, цвета 2 в 2 и 8,
    k=2, l=2, alpha=beta=(0.5, 0.5). Оптимум 6.
    """
    metric = line_metric([0, 10, 1, 2, 8, 9])
    clients = [Client(2, 1), Client(3, 2), Client(4, 2), Client(5, 1)]
    return FairInstance(metric, clients, [0, 1], 2, 2, [0.5, 0.5], [0.5, 0.5])


def random_instance(seed: int, clients: int = 4, facilities: int = 3, k: int = 2, l: int = 2,
                    slack: float = 0.25, integer: bool = False) -> FairInstance:
    """
    Случайный маленький экземпляр в квадрате [0, 20)^2. Границы долей равны
    глобальным долям плюс-минус slack, поэтому экземпляр допустим.
    """
    rng = np.random.default_rng(seed)
    coords = rng.uniform(0.0, 20.0, size=(clients + facilities, 2))
    if integer:
        coords = np.round(coords)
    metric = MetricSpace.from_coords(coords.tolist(), doubling_dim_hint=2)
    colors = rng.integers(1, l + 1, size=clients)
    if clients >= l:
        colors[:l] = np.arange(1, l + 1)
    members = [Client(i, int(colors[i])) for i in range(clients)]
    shares = [float(np.sum(colors == t)) / clients for t in range(1, l + 1)]
    alpha = [max(0.0, s - slack) for s in shares]
    beta = [min(1.0, s + slack) for s in shares]
    return FairInstance(metric, members, list(range(clients, clients + facilities)), k, l, alpha, beta)


@pytest.fixture
def t1() -> FairInstance:
    return make_t1()


@pytest.fixture
def small_instances():
    return [random_instance(seed) for seed in range(6)]
