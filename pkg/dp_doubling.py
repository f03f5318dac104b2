"""
FairMedian Solver - Doubling Metric Dynamic Program

QPTAS по дереву разбиения: состояние блока хранит число открытых
центров и для каждого портала и цвета число клиентов со знаком
(положительное входит в блок через портал, отрицательное выходит).
Переход к родителю оплачивается минимальными паросочетаниями Phi_t
между порталами блока и порталами детей.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from core_model import (FairInstance, Infeasible, StateBudgetExceeded, CorruptTable, Solution,
                        SolverRun, instance_feasible, is_fair_counts, TOLERANCE)
from estimator import estimate_cost
from flow import assign_clients
from matching import color_tau, tau, InconsistentConfigs, NoPerfectMatching
from nets import normalize_scale, preprocess_doubling
from split_tree import Block, SplitTree, build_split_tree
from utils import derive_seeds
from config import MAX_STATES, MAX_LEVELS, DEFAULT_DOUBLING_DIM

# Настройка логирования
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger('FairMedianDoublingDP')

Column = Tuple[int, ...]                  # числа одного цвета по порталам
Counts = Tuple[Tuple[int, ...], ...]      # по порталам, затем по цветам
Key = Tuple[int, Counts]
Entry = Tuple[float, Optional[Tuple[Key, ...]]]


@dataclass(frozen=True)
class DoublingConfig:
    """Состояние DP[B, k_B, Q_1^E, ..., Q_m^L] с одним вектором со знаком на портал."""
    block: int
    portals: Tuple[int, ...]
    k: int
    counts: Counts

    def enter(self, i: int) -> Tuple[int, ...]:
        """Вектор Q_i^E входящих клиентов."""
        return tuple(max(q, 0) for q in self.counts[i])

    def leave(self, i: int) -> Tuple[int, ...]:
        """Вектор Q_i^L выходящих клиентов (неположительные числа)."""
        return tuple(min(q, 0) for q in self.counts[i])

    def column(self, color: int) -> Column:
        return tuple(q[color - 1] for q in self.counts)

    @property
    def key(self) -> Key:
        return (self.k, self.counts)


class DpTable:
    """Таблицы блоков: состояние -> (стоимость, обратная ссылка на состояния детей)."""

    def __init__(self) -> None:
        self.entries: Dict[int, Dict[Key, Entry]] = {}

    def block(self, block_id: int) -> Dict[Key, Entry]:
        return self.entries.setdefault(block_id, {})

    def cost(self, block_id: int, key: Key) -> float:
        entry = self.entries.get(block_id, {}).get(key)
        return entry[0] if entry is not None else float("inf")

    def best(self, block_id: int, counts: Counts, k: int) -> float:
        """Минимум по бюджетам k' <= k: бюджет здесь означает "не больше k"."""
        return min((self.cost(block_id, (budget, counts)) for budget in range(k + 1)), default=float("inf"))

    def update(self, block_id: int, key: Key, cost: float, backpointer: Optional[Tuple[Key, ...]]) -> bool:
        table = self.block(block_id)
        current = table.get(key)
        if (current is None or cost < current[0] - TOLERANCE
                or (abs(cost - current[0]) <= TOLERANCE and backpointer is not None
                    and current[1] is not None and backpointer < current[1])):
            table[key] = (cost, backpointer)
            return current is None
        return False

    @property
    def size(self) -> int:
        return sum(len(t) for t in self.entries.values())


@lru_cache(maxsize=None)
def portal_columns(portals: int, entering: int, leaving: int) -> Tuple[Column, ...]:
    """
    Все способы распределить entering входящих и leaving выходящих
    клиентов одного цвета по порталам так, чтобы на одном портале не было
    одновременно входа и выхода.
    """
    if portals == 0:
        return ((),) if entering == 0 and leaving == 0 else ()
    columns = []
    for value in range(-leaving, entering + 1):
        rest_enter = entering - max(value, 0)
        rest_leave = leaving - max(-value, 0)
        for tail in portal_columns(portals - 1, rest_enter, rest_leave):
            columns.append((value,) + tail)
    return tuple(columns)


@dataclass
class DoublingDpResult:
    """Результат DP на одном дереве разбиения."""
    tree_cost: float
    open: Tuple[int, ...]
    counts: Dict[int, Tuple[int, ...]]
    states: int


class DoublingDynamicProgram:
    """DP по одному дереву разбиения."""

    def __init__(self, inst: FairInstance, tree: SplitTree, max_states: int = MAX_STATES) -> None:
        self.inst = inst
        self.tree = tree
        self.metric = tree.metric
        self.max_states = max_states
        self.table = DpTable()
        self.work = 0
        self.facilities = set(inst.facilities)
        self.histogram = inst.color_histogram()
        self._inside: Dict[int, Tuple[int, ...]] = {}
        for block in tree.blocks:
            inside = [0] * inst.l
            for point in block.members:
                if point in inst.color_of:
                    inside[inst.color_of[point] - 1] += 1
            self._inside[block.id] = tuple(inside)
        self._tau_cache: Dict[tuple, Optional[float]] = {}

    def _charge(self, amount: int) -> None:
        self.work += amount
        if self.work > self.max_states:
            raise StateBudgetExceeded(f"Число состояний DP превысило {self.max_states}")

    def config(self, block: Block, key: Key) -> DoublingConfig:
        return DoublingConfig(block.id, block.portals, key[0], key[1])

    def leaf_entries(self, block: Block) -> List[Tuple[DoublingConfig, float]]:
        """
        Базовые случаи листа: открытый центр со справедливым вектором
        входящих клиентов, закрытый центр, клиент цвета t.

        Args:
            block: Лист уровня 0

        Returns:
            Список пар (состояние, стоимость 0)
        """
        point = block.members[0]
        l = self.inst.l
        zero = (0,) * l
        keys: List[Key] = [(0, (zero,))]
        if point in self.facilities:
            for q in itertools.product(*(range(c + 1) for c in self.histogram)):
                if is_fair_counts(q, self.inst.alpha, self.inst.beta):
                    keys.append((1, (tuple(q),)))
        elif point in self.inst.color_of:
            vector = [0] * l
            vector[self.inst.color_of[point] - 1] = -1
            keys = [(0, (tuple(vector),))]
        return [(self.config(block, key), 0.0) for key in keys]

    def combine(self, block: Block, child_cfgs: Sequence[DoublingConfig], target: DoublingConfig) -> float:
        """
        Стоимость состояния блока при выбранных состояниях детей:
        сумма стоимостей детей и tau.

        Args:
            block: Блок
            child_cfgs: Состояния детей (по одному на ребенка)
            target: Состояние блока

        Returns:
            Стоимость

        Raises:
            Infeasible: если нарушено ограничение на бюджет или баланс цветов
        """
        if len(child_cfgs) != len(block.children):
            raise Infeasible(f"Ожидалось {len(block.children)} состояний детей, получено {len(child_cfgs)}")
        if sum(cfg.k for cfg in child_cfgs) > target.k:
            raise Infeasible("Сумма бюджетов детей превышает бюджет блока")
        for color in range(1, self.inst.l + 1):
            if sum(target.column(color)) != sum(sum(cfg.column(color)) for cfg in child_cfgs):
                raise Infeasible(f"Нарушен баланс цвета {color}")
        total = 0.0
        for child_id, cfg in zip(block.children, child_cfgs):
            cost = self.table.cost(child_id, cfg.key)
            if cost == float("inf"):
                raise Infeasible(f"Состояние ребенка {child_id} недостижимо")
            total += cost
        return total + tau(target, child_cfgs, self.metric)

    def _color_tau(self, block: Block, column: Column, children: Tuple[Tuple[Tuple[int, ...], Column], ...]) -> Optional[float]:
        key = (block.portals, column, children)
        if key not in self._tau_cache:
            try:
                self._tau_cache[key] = color_tau(block.portals, column, children, self.metric)
            except NoPerfectMatching:
                self._tau_cache[key] = None
        return self._tau_cache[key]

    def _color_options(self, block: Block, color: int,
                       children: Tuple[Tuple[Tuple[int, ...], Column], ...]) -> List[Tuple[Column, float]]:
        net = sum(sum(column) for _, column in children)
        entering = sum(q for _, column in children for q in column if q > 0)
        leaving = sum(-q for _, column in children for q in column if q < 0)
        inside = self._inside[block.id][color - 1]
        outside = self.histogram[color - 1] - inside
        m = len(block.portals)

        if block.parent is None:
            pairs = [(0, 0)] if net == 0 else []
        else:
            pairs = []
            for enter_total in range(max(0, net), min(entering, outside) + 1):
                leave_total = enter_total - net
                if leave_total > min(leaving, inside):
                    break
                pairs.append((enter_total, leave_total))

        options = []
        for enter_total, leave_total in pairs:
            for column in portal_columns(m, enter_total, leave_total):
                cost = self._color_tau(block, column, children)
                if cost is not None:
                    options.append((column, cost))
        return options

    def _child_tuples(self, block: Block) -> Iterator[Tuple[Tuple[Key, ...], float]]:
        items = [sorted(self.table.block(child).items()) for child in block.children]
        budget = self.inst.k

        def extend(index: int, keys: Tuple[Key, ...], used: int, cost: float):
            if index == len(items):
                yield keys, cost
                return
            for key, (child_cost, _) in items[index]:
                if used + key[0] <= budget:
                    yield from extend(index + 1, keys + (key,), used + key[0], cost + child_cost)

        return extend(0, (), 0, 0.0)

    def _fill_block(self, block: Block) -> None:
        children = [self.tree.blocks[c] for c in block.children]
        if len(children) == 1 and children[0].portals == block.portals:
            # Тот же набор порталов: таблица ребенка переходит без изменений
            for key, (cost, _) in sorted(self.table.block(children[0].id).items()):
                if block.parent is None and any(any(q) for q in key[1]):
                    continue
                self.table.update(block.id, key, cost, (key,))
            return

        l = self.inst.l
        m = len(block.portals)
        for keys, child_cost in self._child_tuples(block):
            self._charge(1)
            per_color = []
            for color in range(1, l + 1):
                children_cols = tuple(
                    (child.portals, tuple(q[color - 1] for q in key[1])) for child, key in zip(children, keys)
                )
                options = self._color_options(block, color, children_cols)
                if not options:
                    break
                per_color.append(options)
            if len(per_color) != l:
                continue
            k = sum(key[0] for key in keys)
            for combo in itertools.product(*per_color):
                self._charge(1)
                counts = tuple(tuple(combo[t][0][i] for t in range(l)) for i in range(m))
                cost = child_cost + sum(option[1] for option in combo)
                self.table.update(block.id, (k, counts), cost, keys)

    def fill(self) -> DpTable:
        """Заполняет таблицы снизу вверх по достижимым состояниям."""
        for block in self.tree.postorder():
            if block.is_leaf:
                for cfg, cost in self.leaf_entries(block):
                    if block.parent is None and any(any(q) for q in cfg.counts):
                        continue
                    self.table.update(block.id, cfg.key, cost, None)
                self._charge(len(self.table.block(block.id)))
            else:
                self._fill_block(block)
            logger.debug(f"Блок {block.id} (уровень {block.level}, порталов {len(block.portals)}): "
                         f"{len(self.table.block(block.id))} состояний")
        return self.table

    def root_key(self) -> Key:
        """
        Корневое состояние DP[R, k, 0, ..., 0] с минимальной стоимостью по k' <= k.

        Raises:
            Infeasible: если корневое состояние недостижимо
        """
        root = self.tree.root
        zero = tuple((0,) * self.inst.l for _ in root.portals)
        candidates = [(self.table.cost(root.id, (k, zero)), k) for k in range(self.inst.k + 1)]
        cost, k = min(candidates)
        if cost == float("inf"):
            raise Infeasible("Корневое состояние DP недостижимо")
        return (k, zero)

    def _recheck(self, block: Block, key: Key, entry: Entry) -> None:
        children = [self.tree.blocks[c] for c in block.children]
        backpointer = entry[1]
        if len(children) == 1 and children[0].portals == block.portals:
            if backpointer[0] != key:
                raise CorruptTable(f"Блок {block.id} должен совпадать с состоянием ребенка")
            expected = self.table.cost(children[0].id, key)
        else:
            child_cfgs = [self.config(child, child_key) for child, child_key in zip(children, backpointer)]
            try:
                expected = self.combine(block, child_cfgs, self.config(block, key))
            except (Infeasible, NoPerfectMatching, InconsistentConfigs) as e:
                raise CorruptTable(f"Состояние блока {block.id} не выводится из состояний детей: {e}")
        if abs(expected - entry[0]) > TOLERANCE * max(1.0, abs(expected)):
            raise CorruptTable(f"Стоимость блока {block.id} равна {entry[0]:.6f}, "
                               f"а по состояниям детей {expected:.6f}")

    def traceback(self, key: Key) -> Tuple[Tuple[int, ...], Dict[int, Tuple[int, ...]]]:
        """
        Спуск по обратным ссылкам: открытые листья-центры и их векторы Q_1^E.

        Args:
            key: Корневое состояние

        Returns:
            Открытые центры с клиентами и их векторы цветов

        Raises:
            CorruptTable: если обратные ссылки несогласованны или стоимость
                состояния не выводится из состояний детей
        """
        counts: Dict[int, Tuple[int, ...]] = {}
        stack = [(self.tree.root, key)]
        while stack:
            block, current = stack.pop()
            entry = self.table.block(block.id).get(current)
            if entry is None:
                raise CorruptTable(f"Состояние отсутствует в блоке {block.id}")
            if block.is_leaf:
                point = block.members[0]
                k, vectors = current
                if k == 1 and point in self.facilities and sum(vectors[0]) > 0:
                    counts[point] = vectors[0]
                continue
            backpointer = entry[1]
            if backpointer is None or len(backpointer) != len(block.children):
                raise CorruptTable(f"Обратная ссылка блока {block.id} не соответствует его детям")
            self._recheck(block, current, entry)
            for child_id, child_key in zip(block.children, backpointer):
                stack.append((self.tree.blocks[child_id], child_key))
        return tuple(sorted(counts)), counts

    def solve(self) -> DoublingDpResult:
        """
        Заполняет таблицу, выбирает корневое состояние и восстанавливает (F, lambda).

        Returns:
            Стоимость в модели порталов, открытые центры и векторы цветов
        """
        self.fill()
        key = self.root_key()
        opened, counts = self.traceback(key)
        return DoublingDpResult(self.table.cost(self.tree.root.id, key), opened, counts, self.table.size)


def default_rho(eps: float, n: int, doubling_dim: Optional[int]) -> float:
    """rho = eps / (d log n), не больше 1/2."""
    d = doubling_dim if doubling_dim else DEFAULT_DOUBLING_DIM
    return min(0.5, eps / (d * math.log2(max(n, 2))))


def solve_qptas_run(inst: FairInstance, eps: float, seed: int, trees: int, rho: Optional[float] = None,
                    max_states: int = MAX_STATES, max_levels: int = MAX_LEVELS,
                    estimator: str = "auto") -> SolverRun:
    """
    QPTAS: оценка стоимости, склейка близких точек, нормировка, DP по
    нескольким деревьям разбиения, назначение потоком в исходной метрике.

    Args:
        inst: Экземпляр задачи
        eps: Точность из (0, 1)
        seed: Зерно
        trees: Число деревьев разбиения
        rho: Плотность порталов (по умолчанию eps / (d log n))
        max_states: Предел работы DP на одно дерево
        max_levels: Предел числа уровней дерева
        estimator: Способ оценки стоимости

    Returns:
        Лучшее решение и стоимости в модели порталов

    Raises:
        Infeasible: если справедливого решения нет
        StateBudgetExceeded: если DP превысил предел
    """
    if not instance_feasible(inst):
        raise Infeasible("Глобальные доли цветов не удовлетворяют ограничениям")
    if not inst.clients:
        return SolverRun(Solution((), {}, {}, 0.0), [], 0)

    cost_estimate, _ = estimate_cost(inst, estimator)
    prepared, relocation = preprocess_doubling(inst, eps, cost_estimate)
    factor = normalize_scale(prepared.metric, prepared.points)
    scaled = prepared.with_metric(prepared.metric.scaled(factor))
    portal_rho = rho if rho is not None else default_rho(eps, inst.n, inst.metric.doubling_dim_hint)
    logger.info(f"QPTAS: eps={eps}, rho={portal_rho:.4f}, оценка стоимости {cost_estimate:.4f}, "
                f"смещение {relocation.displacement:.3e}")

    best: Optional[Solution] = None
    tree_costs: List[float] = []
    states = 0
    for index, tree_seed in enumerate(derive_seeds(seed, trees)):
        tree = build_split_tree(scaled.metric, portal_rho, tree_seed, points=scaled.points, max_levels=max_levels)
        result = DoublingDynamicProgram(scaled, tree, max_states).solve()
        states = max(states, result.states)
        tree_costs.append(result.tree_cost * factor)
        solution = assign_clients(inst, result.open, result.counts)
        logger.debug(f"Дерево {index}: стоимость в модели порталов {result.tree_cost * factor:.4f}, "
                     f"в метрике {solution.cost:.4f}")
        if best is None or solution.cost < best.cost - TOLERANCE:
            best = solution
    logger.info(f"QPTAS: лучшая стоимость {best.cost:.6f} по {trees} деревьям")
    return SolverRun(best, tree_costs, states)


def solve_qptas(inst: FairInstance, eps: float, seed: int, trees: int, **options) -> Solution:
    """Лучшее справедливое решение по нескольким деревьям разбиения."""
    return solve_qptas_run(inst, eps, seed, trees, **options).solution
