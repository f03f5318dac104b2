"""
FairMedian Solver - Tree Dynamic Program

Динамическое программирование по HST: дети блока поглощаются слева
направо, состояние хранит бюджет центров и чистое число клиентов
каждого цвета, пересекающих ребро над поддеревом (положительное число
входит, отрицательное выходит). Стоимость решения в дереве равна сумме
по ребрам длины ребра на число пересечений, а оптимум без встречных
пересечений одного цвета всегда существует, поэтому чистых векторов
достаточно.
"""

import itertools
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from core_model import (FairInstance, Infeasible, StateBudgetExceeded, CorruptTable, Solution,
                        SolverRun, instance_feasible, is_fair_counts, TOLERANCE)
from estimator import estimate_cost
from flow import assign_clients
from hst import Hst, build_hst
from nets import normalize_scale, reduce_to_centers
from split_tree import Block
from utils import derive_seeds
from config import MAX_STATES, MAX_LEVELS, REDUCE_THRESHOLD

# Настройка логирования
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger('FairMedianTreeDP')

Vector = Tuple[int, ...]
Key = Tuple[int, Vector]          # (бюджет центров, чистый вектор)


@dataclass(frozen=True)
class TreeConfig:
    """Состояние DP[S, k_S, i, Q_S^enter, Q_Sout^enter, Q_S^leave, Q_Sout^leave]."""
    block: int
    k: int
    i: int
    enter: Vector
    enter_out: Vector
    leave: Vector
    leave_out: Vector

    @classmethod
    def from_net(cls, block: int, k: int, i: int, net: Sequence[int]) -> 'TreeConfig':
        """Каноническое состояние: внутренние векторы нулевые, внешние равны частям net."""
        zero = tuple(0 for _ in net)
        return cls(block, k, i, zero, tuple(max(q, 0) for q in net), zero, tuple(min(q, 0) for q in net))

    @property
    def net(self) -> Vector:
        return tuple(a + b + c + d for a, b, c, d in zip(self.enter, self.enter_out, self.leave, self.leave_out))

    @property
    def key(self) -> Key:
        return (self.k, self.net)


@dataclass
class TreeDpResult:
    """Результат DP на одном дереве."""
    tree_cost: float
    open: Tuple[int, ...]
    counts: Dict[int, Vector]
    states: int


def _crossings(enter_star: Sequence[int], leave_star: Sequence[int]) -> int:
    return sum(enter_star) + sum(abs(q) for q in leave_star)


def _add(a: Vector, b: Vector) -> Vector:
    return tuple(x + y for x, y in zip(a, b))


class TreeDynamicProgram:
    """Таблица DP по одному HST."""

    def __init__(self, inst: FairInstance, tree: Hst, max_states: int = MAX_STATES) -> None:
        self.inst = inst
        self.tree = tree
        self.max_states = max_states
        self.states = 0
        self.facilities = set(inst.facilities)
        self.histogram = inst.color_histogram()
        # partial[block][i - 1]: таблица для T_{S,i}
        self.partial: Dict[int, List[Dict[Key, Tuple[float, object]]]] = {}
        self.leaf_tables: Dict[int, Dict[Key, Tuple[float, object]]] = {}
        self._inside: Dict[int, Vector] = {}
        self._capacity: Dict[int, int] = {}
        for block in tree.postorder():
            inside = [0] * inst.l
            for point in block.members:
                if point in inst.color_of:
                    inside[inst.color_of[point] - 1] += 1
            self._inside[block.id] = tuple(inside)
            self._capacity[block.id] = min(inst.k, sum(1 for p in block.members if p in self.facilities))

    def _count(self, added: int) -> None:
        self.states += added
        if self.states > self.max_states:
            raise StateBudgetExceeded(f"Число состояний DP превысило {self.max_states}")

    def _admissible(self, block: Block, net: Vector) -> bool:
        inside = self._inside[block.id]
        for t, q in enumerate(net):
            if q > self.histogram[t] - inside[t] or -q > inside[t]:
                return False
        return True

    def tree_leaf_entries(self, block: Block) -> List[Tuple[TreeConfig, float]]:
        """
        Базовые случаи для листа: открытый центр с любым справедливым
        вектором входящих клиентов, закрытый центр, клиент цвета t.

        Args:
            block: Лист дерева

        Returns:
            Список пар (состояние, стоимость 0)
        """
        point = block.members[0]
        l = self.inst.l
        zero = (0,) * l
        entries = [TreeConfig.from_net(block.id, 0, 0, zero)]
        if point in self.facilities:
            for q in itertools.product(*(range(c + 1) for c in self.histogram)):
                if is_fair_counts(q, self.inst.alpha, self.inst.beta):
                    entries.append(TreeConfig.from_net(block.id, 1, 0, q))
        elif point in self.inst.color_of:
            net = [0] * l
            net[self.inst.color_of[point] - 1] = -1
            entries = [TreeConfig.from_net(block.id, 0, 0, net)]
        return [(entry, 0.0) for entry in entries]

    def table(self, block: Block) -> Dict[Key, Tuple[float, object]]:
        """Итоговая таблица блока (после поглощения всех детей)."""
        if block.is_leaf:
            return self.leaf_tables[block.id]
        return self.partial[block.id][-1]

    def lookup(self, block: Block, key: Key) -> float:
        """Стоимость состояния или inf, если оно недостижимо."""
        entry = self.table(block).get(key)
        return entry[0] if entry is not None else float("inf")

    def absorb_first_child(self, block: Block, config: TreeConfig) -> float:
        """
        Случай 1: T_{S,1} совпадает с поддеревом первого ребенка плюс
        пересечения ребра S-S_1.

        Raises:
            Infeasible: если состояние ребенка недостижимо
        """
        child = self.tree.blocks[block.children[0]]
        enter_star = _add(config.enter, config.enter_out)
        leave_star = _add(config.leave, config.leave_out)
        cost = self.lookup(child, (config.k, _add(enter_star, leave_star)))
        if cost == float("inf"):
            raise Infeasible(f"Состояние ребенка {child.id} недостижимо")
        return cost + self.tree.edge_length(block.level) * _crossings(enter_star, leave_star)

    def absorb_next_child(self, block: Block, config: TreeConfig) -> float:
        """
        Случай 2: минимум по разбиениям бюджета и чистых векторов между
        T_{S,i-1} и поддеревом ребенка S_i.

        Raises:
            Infeasible: если согласованного разбиения нет
        """
        i = config.i
        if not 2 <= i <= len(block.children):
            raise ValueError(f"Номер ребенка {i} вне диапазона [2, {len(block.children)}]")
        previous = self.partial[block.id][i - 2]
        child = self.tree.blocks[block.children[i - 1]]
        edge = self.tree.edge_length(block.level)
        best = float("inf")
        for (k_prev, net_prev), (cost_prev, _) in previous.items():
            k_child = config.k - k_prev
            net_child = tuple(a - b for a, b in zip(config.net, net_prev))
            cost_child = self.lookup(child, (k_child, net_child))
            if k_child < 0 or cost_child == float("inf"):
                continue
            crossings = sum(abs(q) for q in net_child)
            best = min(best, cost_prev + cost_child + edge * crossings)
        if best == float("inf"):
            raise Infeasible(f"Нет согласованного разбиения для блока {block.id}")
        return best

    def _first(self, block: Block) -> Dict[Key, Tuple[float, object]]:
        child = self.tree.blocks[block.children[0]]
        edge = self.tree.edge_length(block.level)
        return {(k, net): (cost + edge * sum(abs(q) for q in net), (k, net))
                for (k, net), (cost, _) in sorted(self.table(child).items())}

    def _next(self, block: Block, previous: Dict[Key, Tuple[float, object]], child: Block,
              last: bool) -> Dict[Key, Tuple[float, object]]:
        edge = self.tree.edge_length(block.level)
        capacity = self._capacity[block.id]
        table: Dict[Key, Tuple[float, object]] = {}
        child_items = sorted(self.table(child).items())
        for (k_prev, net_prev), (cost_prev, _) in sorted(previous.items()):
            for (k_child, net_child), (cost_child, _) in child_items:
                k = k_prev + k_child
                if k > capacity:
                    continue
                net = _add(net_prev, net_child)
                if last and not self._admissible(block, net):
                    continue
                cost = cost_prev + cost_child + edge * sum(abs(q) for q in net_child)
                backpointer = ((k_prev, net_prev), (k_child, net_child))
                current = table.get((k, net))
                if (current is None or cost < current[0] - TOLERANCE
                        or (abs(cost - current[0]) <= TOLERANCE and backpointer < current[1])):
                    table[(k, net)] = (cost, backpointer)
        return table

    def fill(self) -> None:
        """Заполняет таблицы снизу вверх."""
        for block in self.tree.postorder():
            if block.is_leaf:
                entries = self.tree_leaf_entries(block)
                self.leaf_tables[block.id] = {cfg.key: (cost, None) for cfg, cost in entries}
                self._count(len(entries))
                continue
            tables = [self._first(block)]
            self._count(len(tables[0]))
            for position in range(1, len(block.children)):
                child = self.tree.blocks[block.children[position]]
                last = position == len(block.children) - 1
                tables.append(self._next(block, tables[-1], child, last))
                self._count(len(tables[-1]))
            if len(tables) == 1:
                tables[0] = {key: value for key, value in tables[0].items() if self._admissible(block, key[1])}
            self.partial[block.id] = tables
            logger.debug(f"Блок {block.id} (уровень {block.level}): {len(tables[-1])} состояний")

    def root_key(self) -> Key:
        """
        Лучшее корневое состояние DP[R, k' <= k, l(R), 0, 0, 0, 0].

        Raises:
            Infeasible: если корневое состояние недостижимо
        """
        zero = (0,) * self.inst.l
        table = self.table(self.tree.root)
        candidates = [(table[(k, zero)][0], k) for k in range(self.inst.k + 1) if (k, zero) in table]
        if not candidates:
            raise Infeasible("Корневое состояние DP недостижимо")
        return (min(candidates)[1], zero)

    def _recheck(self, block: Block, position: int, key: Key, cost: float) -> None:
        config = TreeConfig.from_net(block.id, key[0], position + 1, key[1])
        try:
            if position == 0:
                expected = self.absorb_first_child(block, config)
            else:
                expected = self.absorb_next_child(block, config)
        except Infeasible as e:
            raise CorruptTable(f"Состояние {key} блока {block.id} не выводится из таблиц детей: {e}")
        if abs(expected - cost) > TOLERANCE * max(1.0, abs(expected)):
            raise CorruptTable(f"Стоимость состояния {key} блока {block.id} равна {cost:.6f}, "
                               f"а по таблицам детей {expected:.6f}")

    def traceback(self, key: Key) -> Tuple[Tuple[int, ...], Dict[int, Vector]]:
        """
        Спуск по обратным ссылкам к листьям.

        Args:
            key: Корневое состояние

        Returns:
            Открытые центры с клиентами и их векторы цветов

        Raises:
            CorruptTable: если обратные ссылки несогласованны или стоимость
                состояния не выводится из таблиц детей
        """
        counts: Dict[int, Vector] = {}
        stack = [(self.tree.root, key)]
        while stack:
            block, current = stack.pop()
            if block.is_leaf:
                if current not in self.leaf_tables[block.id]:
                    raise CorruptTable(f"Состояние {current} отсутствует в листе {block.id}")
                k, net = current
                if k == 1 and sum(net) > 0:
                    counts[block.members[0]] = net
                continue
            tables = self.partial.get(block.id)
            if tables is None:
                raise CorruptTable(f"Нет таблицы для блока {block.id}")
            for position in range(len(tables) - 1, -1, -1):
                entry = tables[position].get(current)
                if entry is None:
                    raise CorruptTable(f"Состояние {current} отсутствует в блоке {block.id}")
                self._recheck(block, position, current, entry[0])
                child = self.tree.blocks[block.children[position]]
                if position == 0:
                    stack.append((child, entry[1]))
                else:
                    current, child_key = entry[1]
                    stack.append((child, child_key))
        return tuple(sorted(counts)), counts

    def solve(self) -> TreeDpResult:
        """
        Заполняет таблицу и восстанавливает решение в дереве.

        Returns:
            Стоимость в дереве, открытые центры и их векторы цветов
        """
        self.fill()
        key = self.root_key()
        cost = self.table(self.tree.root)[key][0]
        opened, counts = self.traceback(key)
        return TreeDpResult(cost, opened, counts, self.states)


def solve_log_k_run(inst: FairInstance, seed: int, trees: int, reduce_threshold: int = REDUCE_THRESHOLD,
                    max_states: int = MAX_STATES, max_levels: int = MAX_LEVELS,
                    estimator: str = "auto") -> SolverRun:
    """
    O(log k)-приближение: стягивание к центрам оценщика при большом n,
    нормировка, DP по нескольким HST, назначение потоком в исходной метрике.

    Args:
        inst: Экземпляр задачи
        seed: Зерно
        trees: Число деревьев
        reduce_threshold: Порог n для стягивания к центрам
        max_states: Предел числа состояний DP на дерево
        max_levels: Предел числа уровней дерева
        estimator: Способ оценки для выбора центров

    Returns:
        Лучшее решение и стоимости в деревьях

    Raises:
        Infeasible: если справедливого решения нет
    """
    if not instance_feasible(inst):
        raise Infeasible("Глобальные доли цветов не удовлетворяют ограничениям")
    if not inst.clients:
        return SolverRun(Solution((), {}, {}, 0.0), [], 0)

    work = inst
    if inst.n > reduce_threshold:
        _, estimate = estimate_cost(inst, estimator)
        work, relocation = reduce_to_centers(inst, estimate.open)
        logger.info(f"Точки стянуты к {len(estimate.open)} центрам, смещение {relocation.displacement:.3f}")
    factor = normalize_scale(work.metric, work.points)
    scaled = work.with_metric(work.metric.scaled(factor))

    best: Optional[Solution] = None
    tree_costs: List[float] = []
    states = 0
    for index, tree_seed in enumerate(derive_seeds(seed, trees)):
        tree = build_hst(scaled.metric, tree_seed, points=scaled.points, max_levels=max_levels)
        result = TreeDynamicProgram(scaled, tree, max_states).solve()
        states = max(states, result.states)
        tree_costs.append(result.tree_cost * factor)
        solution = assign_clients(inst, result.open, result.counts)
        logger.debug(f"HST {index}: стоимость в дереве {result.tree_cost * factor:.4f}, "
                     f"в метрике {solution.cost:.4f}")
        if best is None or solution.cost < best.cost - TOLERANCE:
            best = solution
    logger.info(f"HST-DP: лучшая стоимость {best.cost:.6f} по {trees} деревьям")
    return SolverRun(best, tree_costs, states)


def solve_log_k(inst: FairInstance, seed: int, trees: int, **options) -> Solution:
    """Лучшее справедливое решение по нескольким HST."""
    return solve_log_k_run(inst, seed, trees, **options).solution
