"""
FairMedian Solver - Assignment Flow

Сеть назначения клиентов по открытым центрам и векторам цветов и поиск
потока минимальной стоимости последовательными кратчайшими путями с
потенциалами.
"""

import heapq
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Tuple, Sequence, Mapping, Hashable, Optional

from core_model import FairInstance, Infeasible, FairMedianError, Solution, TOLERANCE

# Настройка логирования
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger('FairMedianFlow')

INFINITY = float("inf")


class SupplyMismatch(FairMedianError):
    """Ошибка, если суммы векторов цветов не совпадают с числом клиентов."""
    pass


class FlowInfeasible(Infeasible):
    """Ошибка, если спрос вершин не может быть удовлетворен."""
    pass


class NonIntegralFlow(FairMedianError):
    """Ошибка при нецелом или неполном потоке."""
    pass


@dataclass
class Arc:
    """Дуга сети: ресурс, стоимость и метка (клиент, центр)."""
    tail: int
    head: int
    capacity: int
    cost: float
    tag: Optional[Tuple[int, int]] = None


@dataclass
class FlowNetwork:
    """Сеть с запасами b(v): положительный запас отдает поток, отрицательный потребляет."""
    labels: List[Hashable] = field(default_factory=list)
    supply: List[int] = field(default_factory=list)
    arcs: List[Arc] = field(default_factory=list)

    def add_vertex(self, label: Hashable, supply: int = 0) -> int:
        self.labels.append(label)
        self.supply.append(supply)
        return len(self.labels) - 1

    def add_arc(self, tail: int, head: int, capacity: int, cost: float,
                tag: Optional[Tuple[int, int]] = None) -> int:
        if capacity < 0 or cost < 0:
            raise ValueError("Ресурс и стоимость дуги должны быть неотрицательны")
        self.arcs.append(Arc(tail, head, capacity, cost, tag))
        return len(self.arcs) - 1

    @property
    def vertex_count(self) -> int:
        return len(self.labels)


class _Residual:
    """Остаточная сеть: дуга 2i прямая, 2i+1 обратная."""

    def __init__(self, size: int) -> None:
        self.adj: List[List[int]] = [[] for _ in range(size)]
        self.head: List[int] = []
        self.cap: List[int] = []
        self.cost: List[float] = []

    def add(self, tail: int, head: int, capacity: int, cost: float) -> int:
        index = len(self.head)
        self.head += [head, tail]
        self.cap += [capacity, 0]
        self.cost += [cost, -cost]
        self.adj[tail].append(index)
        self.adj[head].append(index + 1)
        return index

    def dijkstra(self, source: int, potential: List[float]) -> Tuple[List[float], List[int]]:
        dist = [INFINITY] * len(self.adj)
        parent = [-1] * len(self.adj)
        dist[source] = 0.0
        heap = [(0.0, source)]
        while heap:
            d, u = heapq.heappop(heap)
            if d > dist[u] + TOLERANCE:
                continue
            for e in self.adj[u]:
                if self.cap[e] <= 0:
                    continue
                v = self.head[e]
                reduced = self.cost[e] + potential[u] - potential[v]
                candidate = d + max(reduced, 0.0)
                if candidate < dist[v] - TOLERANCE:
                    dist[v] = candidate
                    parent[v] = e
                    heapq.heappush(heap, (candidate, v))
        return dist, parent


def min_cost_flow(net: FlowNetwork) -> List[int]:
    """
    Поток минимальной стоимости, удовлетворяющий всем запасам и спросам.

    Args:
        net: Сеть с запасами b(v), сумма которых равна нулю

    Returns:
        Целый поток по каждой дуге сети

    Raises:
        FlowInfeasible: если спрос не может быть удовлетворен
    """
    if sum(net.supply) != 0:
        raise FlowInfeasible(f"Сумма запасов не равна нулю: {sum(net.supply)}")
    n = net.vertex_count
    source, sink = n, n + 1
    residual = _Residual(n + 2)
    arc_index = [residual.add(a.tail, a.head, a.capacity, a.cost) for a in net.arcs]
    required = 0
    for v, b in enumerate(net.supply):
        if b > 0:
            residual.add(source, v, b, 0.0)
            required += b
        elif b < 0:
            residual.add(v, sink, -b, 0.0)

    potential = [0.0] * (n + 2)
    sent = 0
    while sent < required:
        dist, parent = residual.dijkstra(source, potential)
        if dist[sink] == INFINITY:
            raise FlowInfeasible(f"Удалось провести только {sent} из {required} единиц потока")
        for v in range(n + 2):
            if dist[v] < INFINITY:
                potential[v] += dist[v]
        # Узкое место пути
        bottleneck = required - sent
        v = sink
        while v != source:
            e = parent[v]
            bottleneck = min(bottleneck, residual.cap[e])
            v = residual.head[e ^ 1]
        v = sink
        while v != source:
            e = parent[v]
            residual.cap[e] -= bottleneck
            residual.cap[e ^ 1] += bottleneck
            v = residual.head[e ^ 1]
        sent += bottleneck

    return [residual.cap[index ^ 1] for index in arc_index]


def flow_cost(flow: Sequence[int], net: FlowNetwork) -> float:
    """Стоимость потока."""
    return sum(f * arc.cost for f, arc in zip(flow, net.arcs))


def build_assignment_network(open_facilities: Sequence[int], counts: Mapping[int, Sequence[int]],
                             inst: FairInstance) -> FlowNetwork:
    """
    Строит сеть назначения: вершина на клиента с запасом +1, вершина на
    пару (центр, цвет) со спросом lambda, дуги между вершинами одного цвета.

    Args:
        open_facilities: Открытые центры
        counts: Вектор цветов для каждого открытого центра
        inst: Экземпляр задачи

    Returns:
        Сеть назначения

    Raises:
        SupplyMismatch: если суммы по цветам не совпадают с числом клиентов
    """
    histogram = inst.color_histogram()
    for color in range(inst.l):
        total = sum(counts.get(f, [0] * inst.l)[color] for f in open_facilities)
        if total != histogram[color]:
            raise SupplyMismatch(f"Цвет {color + 1}: центры ожидают {total}, клиентов {histogram[color]}")

    net = FlowNetwork()
    client_vertex = {c.point: net.add_vertex(("client", c.point), 1) for c in inst.clients}
    facility_vertex: Dict[Tuple[int, int], int] = {}
    for f in open_facilities:
        q = counts.get(f, [0] * inst.l)
        for color in range(1, inst.l + 1):
            facility_vertex[(f, color)] = net.add_vertex(("facility", f, color), -q[color - 1])
    for client in inst.clients:
        for f in open_facilities:
            net.add_arc(client_vertex[client.point], facility_vertex[(f, client.color)], 1,
                        inst.metric.dist(client.point, f), tag=(client.point, f))
    return net


def extract_assignment(flow: Sequence[int], net: FlowNetwork) -> Dict[int, int]:
    """
    Извлекает назначение: клиент идет к центру, если его дуга несет поток 1.

    Args:
        flow: Поток по дугам
        net: Сеть назначения

    Returns:
        Назначение клиент -> центр

    Raises:
        NonIntegralFlow: если поток не 0/1 или клиент назначен не ровно один раз
    """
    mu: Dict[int, int] = {}
    for value, arc in zip(flow, net.arcs):
        if value not in (0, 1):
            raise NonIntegralFlow(f"Поток {value} на дуге {arc.tag}")
        if value == 1 and arc.tag is not None:
            client, facility = arc.tag
            if client in mu:
                raise NonIntegralFlow(f"Клиент {client} назначен дважды")
            mu[client] = facility
    expected = sum(1 for label in net.labels if label[0] == "client")
    if len(mu) != expected:
        raise NonIntegralFlow(f"Назначено {len(mu)} клиентов из {expected}")
    return mu


def assign_clients(inst: FairInstance, open_facilities: Sequence[int],
                   counts: Mapping[int, Sequence[int]]) -> Solution:
    """
    Оптимальное назначение клиентов, в точности реализующее векторы цветов.

    Args:
        inst: Экземпляр задачи
        open_facilities: Открытые центры
        counts: Векторы цветов центров

    Returns:
        Решение
    """
    net = build_assignment_network(open_facilities, counts, inst)
    flow = min_cost_flow(net)
    mu = extract_assignment(flow, net)
    solution = Solution.from_assignment(inst, mu, open_facilities)
    logger.debug(f"Назначение через поток: стоимость {solution.cost:.6f}")
    return solution
