"""
FairMedian Solver - Main Entry Point
"""

import os
import json
import sys
import csv
import glob
import argparse
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from typing import Dict, Any, List, Optional, Sequence

import numpy as np

from core_model import (FairMedianError, FairInstance, Client, MetricSpace, Infeasible, ParseError,
                        StateBudgetExceeded, Solution, validate_fairness, color_histogram)
from config import (load_config, get_version_string, InvalidParams, REPORT_SCHEMA_VERSION)
from dp_doubling import solve_qptas_run, default_rho
from dp_tree import solve_log_k_run
from diagnostics import tree_invariant_report, separation_profile, distortion_profile
from estimator import repair_fairness
from flow import assign_clients
from hst import build_hst
from nets import normalize_scale
from oracle import brute_force_opt, BudgetExceeded
from split_tree import build_split_tree
from utils import save_to_json_file, load_from_json_file, measure_execution_time

logger = logging.getLogger('FairMedianMain')

ALGORITHMS = ("brute", "hst", "qptas", "assign")
CSV_COLUMNS = ["instance", "algo", "seed", "cost", "oracle_cost", "ratio", "feasible", "wall_ms", "states"]

# Коды завершения
EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2
EXIT_BUDGET = 3
EXIT_PARSE = 4


def setup_logging(log_file: Optional[str], verbose: bool = False) -> None:
    """
    Настраивает логирование в файл и на консоль.

    Args:
        log_file: Путь к файлу журнала (None - только консоль)
        verbose: Подробный режим (DEBUG)
    """
    handlers: List[logging.Handler] = [logging.StreamHandler()]
    if log_file:
        handlers.insert(0, logging.FileHandler(log_file))
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=handlers,
        force=True
    )


@dataclass
class RunReport:
    """Отчет об одном запуске решателя."""
    instance: str
    algorithm: str
    seed: int
    trees: int
    wall_ms: float
    cost: float
    oracle_cost: Optional[float]
    ratio: Optional[float]
    fairness: Dict[str, Any]
    states: int
    solution: Dict[str, Any] = field(default_factory=dict)
    tree_costs: List[float] = field(default_factory=list)
    schema_version: str = REPORT_SCHEMA_VERSION

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        # Дублирует schema_version под именем из описания формата отчета
        data["spec_version"] = self.schema_version
        return data

    def deterministic_view(self) -> Dict[str, Any]:
        """Все поля, кроме времени работы."""
        data = self.to_dict()
        data.pop("wall_ms")
        return data

    def csv_row(self) -> Dict[str, Any]:
        return {
            "instance": self.instance, "algo": self.algorithm, "seed": self.seed,
            "cost": self.cost, "oracle_cost": "" if self.oracle_cost is None else self.oracle_cost,
            "ratio": "" if self.ratio is None else self.ratio,
            "feasible": self.fairness["feasible"], "wall_ms": round(self.wall_ms, 3), "states": self.states,
        }


def generate(n: int, k: int, l: int, space: str = "euclidean2d", colors: str = "uniform", seed: int = 0,
             facilities: Optional[int] = None, alpha: Optional[Sequence[float]] = None,
             beta: Optional[Sequence[float]] = None) -> FairInstance:
    """
    Генерирует воспроизводимый экземпляр: n клиентов и max(k, n // 2)
    центров в квадрате [0, 100)^2.

    Args:
        n: Число клиентов
        k: Число центров в решении
        l: Число цветов
        space: "euclidean2d" или "matrix"
        colors: Распределение цветов "uniform" или "skewed"
        seed: Зерно
        facilities: Число кандидатов в центры
        alpha: Нижние границы долей (по умолчанию глобальные доли минус 0.25)
        beta: Верхние границы долей (по умолчанию глобальные доли плюс 0.25)

    Returns:
        Экземпляр задачи

    Raises:
        InvalidParams: при некорректных параметрах
    """
    if not (n >= k >= 1 and l >= 1):
        raise InvalidParams(f"Требуется n >= k >= 1 и l >= 1, получено n={n}, k={k}, l={l}")
    if space not in ("euclidean2d", "matrix"):
        raise InvalidParams(f"Неизвестный тип пространства: {space}")
    if colors not in ("uniform", "skewed"):
        raise InvalidParams(f"Неизвестное распределение цветов: {colors}")
    m = facilities if facilities is not None else max(k, n // 2)
    if m < 1:
        raise InvalidParams("Нужен хотя бы один кандидат в центры")

    rng = np.random.default_rng(seed)
    coords = np.round(rng.uniform(0.0, 100.0, size=(n + m, 2)), 2)
    if colors == "uniform":
        probabilities = np.full(l, 1.0 / l)
    else:
        weights = 2.0 ** -np.arange(l)
        probabilities = weights / weights.sum()
    palette = rng.choice(np.arange(1, l + 1), size=n, p=probabilities)
    clients = [Client(i, int(palette[i])) for i in range(n)]

    histogram = color_histogram(clients, l)
    shares = [h / n for h in histogram]
    low = list(alpha) if alpha is not None else [round(max(0.0, s - 0.25), 6) for s in shares]
    high = list(beta) if beta is not None else [round(min(1.0, s + 0.25), 6) for s in shares]

    if space == "euclidean2d":
        metric = MetricSpace.from_coords(coords.tolist(), doubling_dim_hint=2)
    else:
        metric = MetricSpace(MetricSpace.from_coords(coords.tolist()).matrix)
    try:
        return FairInstance(metric, clients, list(range(n, n + m)), k, l, low, high)
    except FairMedianError as e:
        raise InvalidParams(str(e))


class FairMedianRunner:
    """Запуск решателей и формирование отчетов."""

    def __init__(self, config: Optional[Dict[str, Any]] = None) -> None:
        """
        Инициализация.

        Args:
            config: Конфигурация (см. config.load_config)
        """
        self.config = config or load_config()

    def load_instance(self, path: str) -> FairInstance:
        """
        Читает экземпляр из JSON файла.

        Raises:
            ParseError: при ошибке чтения или формата
        """
        data = load_from_json_file(path)
        if not isinstance(data, dict):
            raise ParseError(f"Файл {path} должен содержать JSON-объект")
        return FairInstance.from_dict(data)

    def _oracle_cost(self, inst: FairInstance) -> Optional[float]:
        try:
            return brute_force_opt(inst, budget=self.config["oracle_budget"]).cost
        except BudgetExceeded:
            logger.info("Перебор для оракула слишком велик, отношение не вычисляется")
            return None

    @measure_execution_time
    def _solve(self, algo: str, inst: FairInstance, seed: int, open_facilities: Optional[Sequence[int]],
               counts: Optional[Dict[int, Sequence[int]]]):
        config = self.config
        if algo == "brute":
            return brute_force_opt(inst, budget=config["oracle_budget"]), [], 0
        if algo == "hst":
            run = solve_log_k_run(inst, seed, config["hst_trees"], reduce_threshold=config["reduce_threshold"],
                                  max_states=config["max_states"], max_levels=config["max_levels"],
                                  estimator=config["estimator"])
            return run.solution, run.tree_costs, run.states
        if algo == "qptas":
            run = solve_qptas_run(inst, config["epsilon"], seed, config["trees"], rho=config["rho"],
                                  max_states=config["max_states"], max_levels=config["max_levels"],
                                  estimator=config["estimator"])
            return run.solution, run.tree_costs, run.states
        if algo == "assign":
            if not open_facilities:
                raise InvalidParams("Для режима assign нужен список --open")
            unknown = set(open_facilities) - set(inst.facilities)
            if unknown:
                raise InvalidParams(f"Неизвестные центры: {sorted(unknown)}")
            if counts is not None:
                return assign_clients(inst, open_facilities, counts), [], 0
            return repair_fairness(inst, open_facilities), [], 0
        raise InvalidParams(f"Неизвестный алгоритм: {algo}")

    def run(self, algo: str, input_path: str, seed: int = 0, open_facilities: Optional[Sequence[int]] = None,
            counts: Optional[Dict[int, Sequence[int]]] = None, with_oracle: bool = True) -> RunReport:
        """
        Решает экземпляр выбранным алгоритмом и проверяет справедливость.

        Args:
            algo: brute, hst, qptas или assign
            input_path: Путь к экземпляру
            seed: Зерно
            open_facilities: Центры для режима assign
            counts: Векторы цветов для режима assign
            with_oracle: Вычислять ли стоимость оракула

        Returns:
            Отчет о запуске
        """
        inst = self.load_instance(input_path)
        logger.info(f"Запуск {algo} на {input_path} (seed={seed})")
        solution, tree_costs, states = self._solve(algo, inst, seed, open_facilities, counts)
        wall_ms = self._solve.last_wall_ms
        fairness = validate_fairness(solution, inst)
        if not fairness.feasible:
            logger.error(f"Решение нарушает справедливость: {len(fairness.violations)} нарушений")

        oracle_cost = solution.cost if algo == "brute" else (self._oracle_cost(inst) if with_oracle else None)
        ratio = None
        if oracle_cost is not None:
            ratio = 1.0 if oracle_cost == 0 and solution.cost == 0 else (
                solution.cost / oracle_cost if oracle_cost > 0 else None)

        trees = {"hst": self.config["hst_trees"], "qptas": self.config["trees"]}.get(algo, 0)
        report = RunReport(os.path.basename(input_path), algo, seed, trees, wall_ms, solution.cost,
                           oracle_cost, ratio, fairness.to_dict(), states, solution.to_dict(), tree_costs)
        logger.info(f"{algo}: стоимость {solution.cost:.6f}, справедливо: {fairness.feasible}")
        return report

    def bench(self, directory: str, output: str, algorithms: Sequence[str], seed: int = 0,
              workers: int = 1, reports_dir: Optional[str] = None) -> List[Dict[str, Any]]:
        """
        Запускает алгоритмы на всех экземплярах каталога и пишет CSV.

        Args:
            directory: Каталог с файлами *.json
            output: Путь к CSV
            algorithms: Алгоритмы
            seed: Зерно
            workers: Число процессов
            reports_dir: Каталог для JSON-отчетов отдельных запусков

        Returns:
            Строки CSV
        """
        paths = sorted(glob.glob(os.path.join(directory, "*.json")))
        tasks = [(self.config, algo, path, seed, reports_dir) for path in paths for algo in algorithms]
        logger.info(f"Бенчмарк: {len(paths)} экземпляров, {len(tasks)} запусков, процессов {workers}")
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                rows = list(pool.map(_bench_task, tasks))
        else:
            rows = [_bench_task(task) for task in tasks]

        directory_name = os.path.dirname(output)
        if directory_name:
            os.makedirs(directory_name, exist_ok=True)
        with open(output, 'w', newline='', encoding='utf-8') as file:
            writer = csv.DictWriter(file, fieldnames=CSV_COLUMNS)
            writer.writeheader()
            writer.writerows(rows)
        logger.info(f"Результаты сохранены в {output}")
        return rows


def _bench_task(task) -> Dict[str, Any]:
    config, algo, path, seed, reports_dir = task
    runner = FairMedianRunner(config)
    try:
        report = runner.run(algo, path, seed)
    except FairMedianError as e:
        logger.warning(f"{algo} на {path}: {type(e).__name__}: {e}")
        return {"instance": os.path.basename(path), "algo": algo, "seed": seed, "cost": "",
                "oracle_cost": "", "ratio": "", "feasible": "", "wall_ms": "", "states": type(e).__name__}
    if reports_dir:
        name = f"{os.path.splitext(os.path.basename(path))[0]}.{algo}.json"
        save_to_json_file(report.to_dict(), os.path.join(reports_dir, name))
    return report.csv_row()


def _parse_counts(raw: Optional[str]) -> Optional[Dict[int, List[int]]]:
    if raw is None:
        return None
    if os.path.exists(raw):
        data = load_from_json_file(raw)
    else:
        try:
            data = json.loads(raw)
        except ValueError as e:
            raise ParseError(f"Некорректные векторы цветов: {e}")
    if not isinstance(data, dict):
        raise ParseError("Векторы цветов должны быть объектом {центр: [числа]}")
    try:
        return {int(f): [int(x) for x in q] for f, q in data.items()}
    except (TypeError, ValueError) as e:
        raise ParseError(f"Некорректные векторы цветов: {e}")


def _parse_bounds(raw: Optional[str]) -> Optional[List[float]]:
    if raw is None:
        return None
    try:
        return [float(x) for x in raw.split(',')]
    except ValueError:
        raise InvalidParams(f"Границы долей должны быть числами через запятую: {raw}")


def build_parser() -> argparse.ArgumentParser:
    """Парсер аргументов командной строки."""
    parser = argparse.ArgumentParser(description='FairMedian - справедливая k-медиана')

    # Общие аргументы
    parser.add_argument('--config', type=str, help='Путь к JSON-файлу конфигурации')
    parser.add_argument('--verbose', action='store_true', help='Подробный журнал')
    parser.add_argument('--version', action='version', version=f'FairMedian {get_version_string()}')

    # Подкоманды
    subparsers = parser.add_subparsers(dest='command', help='Команды')

    # Команда solve (решить экземпляр)
    solve_parser = subparsers.add_parser('solve', help='Решить экземпляр')
    solve_parser.add_argument('--algo', choices=ALGORITHMS, required=True, help='Алгоритм')
    solve_parser.add_argument('--input', type=str, required=True, help='Файл экземпляра')
    solve_parser.add_argument('--seed', type=int, default=0, help='Зерно генератора')
    solve_parser.add_argument('--epsilon', type=float, help='Точность QPTAS')
    solve_parser.add_argument('--trees', type=int, help='Число деревьев')
    solve_parser.add_argument('--rho', type=float, help='Плотность порталов')
    solve_parser.add_argument('--max-states', type=int, help='Предел числа состояний DP')
    solve_parser.add_argument('--open', type=str, help='Центры для режима assign через запятую')
    solve_parser.add_argument('--counts', type=str, help='Векторы цветов (JSON или путь к файлу)')
    solve_parser.add_argument('--no-oracle', action='store_true', help='Не вычислять стоимость оракула')
    solve_parser.add_argument('--output', type=str, help='Файл отчета')

    # Команда gen (сгенерировать экземпляр)
    gen_parser = subparsers.add_parser('gen', help='Сгенерировать экземпляр')
    gen_parser.add_argument('--n', type=int, required=True, help='Число клиентов')
    gen_parser.add_argument('--k', type=int, required=True, help='Число центров')
    gen_parser.add_argument('--l', type=int, default=2, help='Число цветов')
    gen_parser.add_argument('--colors', choices=('uniform', 'skewed'), default='uniform', help='Распределение цветов')
    gen_parser.add_argument('--space', choices=('euclidean2d', 'matrix'), default='euclidean2d', help='Тип пространства')
    gen_parser.add_argument('--facilities', type=int, help='Число кандидатов в центры')
    gen_parser.add_argument('--alpha', type=str, help='Нижние границы долей через запятую')
    gen_parser.add_argument('--beta', type=str, help='Верхние границы долей через запятую')
    gen_parser.add_argument('--seed', type=int, default=0, help='Зерно генератора')
    gen_parser.add_argument('--output', type=str, required=True, help='Файл экземпляра')

    # Команда bench (прогон по каталогу)
    bench_parser = subparsers.add_parser('bench', help='Прогнать алгоритмы по каталогу экземпляров')
    bench_parser.add_argument('--dir', type=str, required=True, help='Каталог экземпляров')
    bench_parser.add_argument('--output', type=str, required=True, help='Файл CSV')
    bench_parser.add_argument('--algo', type=str, default='brute,hst,qptas', help='Алгоритмы через запятую')
    bench_parser.add_argument('--seed', type=int, default=0, help='Зерно генератора')
    bench_parser.add_argument('--workers', type=int, help='Число процессов')
    bench_parser.add_argument('--reports', type=str, help='Каталог для JSON-отчетов')

    # Команда dump-tree (диагностический дамп дерева)
    dump_parser = subparsers.add_parser('dump-tree', help='Сохранить дерево разбиения или HST')
    dump_parser.add_argument('--kind', choices=('split', 'hst'), default='split', help='Тип дерева')
    dump_parser.add_argument('--input', type=str, required=True, help='Файл экземпляра')
    dump_parser.add_argument('--seed', type=int, default=0, help='Зерно генератора')
    dump_parser.add_argument('--rho', type=float, default=0.5, help='Плотность порталов')
    dump_parser.add_argument('--output', type=str, required=True, help='Файл дампа')

    # Команда stats (статистика деревьев)
    stats_parser = subparsers.add_parser('stats', help='Вероятность разделения и искажение HST')
    stats_parser.add_argument('--input', type=str, required=True, help='Файл экземпляра')
    stats_parser.add_argument('--samples', type=int, default=200, help='Число деревьев')
    stats_parser.add_argument('--seed', type=int, default=0, help='Зерно генератора')
    stats_parser.add_argument('--output', type=str, required=True, help='Файл отчета')
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    if args.command == 'solve':
        return {"epsilon": args.epsilon, "rho": args.rho, "max_states": args.max_states,
                "trees": args.trees, "hst_trees": args.trees}
    if args.command == 'bench':
        return {"workers": args.workers}
    return {}


def dispatch(args: argparse.Namespace, config: Dict[str, Any]) -> int:
    """
    Выполняет подкоманду.

    Args:
        args: Разобранные аргументы
        config: Конфигурация

    Returns:
        Код завершения
    """
    runner = FairMedianRunner(config)

    if args.command == 'solve':
        try:
            open_facilities = [int(x) for x in args.open.split(',')] if args.open else None
        except ValueError:
            raise InvalidParams(f"Центры должны быть целыми числами через запятую: {args.open}")
        report = runner.run(args.algo, args.input, args.seed, open_facilities,
                            _parse_counts(args.counts), with_oracle=not args.no_oracle)
        if args.output:
            save_to_json_file(report.to_dict(), args.output)
            logger.info(f"Отчет сохранен в {args.output}")
        else:
            print(f"Стоимость: {report.cost:.6f}")
            print(f"Справедливо: {report.fairness['feasible']}")
            if report.ratio is not None:
                print(f"Отношение к оптимуму: {report.ratio:.4f}")

    elif args.command == 'gen':
        inst = generate(args.n, args.k, args.l, args.space, args.colors, args.seed, args.facilities,
                        _parse_bounds(args.alpha), _parse_bounds(args.beta))
        if not save_to_json_file(inst.to_dict(), args.output):
            return EXIT_ERROR
        logger.info(f"Экземпляр сохранен в {args.output}")

    elif args.command == 'bench':
        algorithms = [a.strip() for a in args.algo.split(',') if a.strip()]
        for algo in algorithms:
            if algo not in ALGORITHMS or algo == "assign":
                raise InvalidParams(f"Алгоритм {algo} недоступен в бенчмарке")
        runner.bench(args.dir, args.output, algorithms, args.seed, config["workers"], args.reports)

    elif args.command == 'dump-tree':
        inst = runner.load_instance(args.input)
        factor = normalize_scale(inst.metric, inst.points)
        metric = inst.metric.scaled(factor)
        if args.kind == 'split':
            tree = build_split_tree(metric, args.rho, args.seed, points=inst.points, max_levels=config["max_levels"])
        else:
            tree = build_hst(metric, args.seed, points=inst.points, max_levels=config["max_levels"])
        data = tree.to_dict()
        data["scale"] = factor
        data["violations"] = tree_invariant_report(tree)
        save_to_json_file(data, args.output)
        logger.info(f"Дерево ({args.kind}) сохранено в {args.output}")

    elif args.command == 'stats':
        inst = runner.load_instance(args.input)
        points = list(inst.points)
        factor = normalize_scale(inst.metric, points)
        metric = inst.metric.scaled(factor)
        # Самая близкая пара различных точек
        pairs = [(metric.dist(u, v), u, v) for i, u in enumerate(points) for v in points[i + 1:]
                 if metric.dist(u, v) > 0]
        if not pairs:
            raise InvalidParams("Нужны хотя бы две различные точки")
        _, u, v = min(pairs)
        rho = default_rho(config["epsilon"], inst.n, inst.metric.doubling_dim_hint)
        data = {
            "separation": separation_profile(metric, points, u, v, args.samples, args.seed, rho,
                                             max_levels=config["max_levels"]).to_dict(),
            "distortion": distortion_profile(metric, points, max(1, args.samples // 10), args.seed).to_dict(),
        }
        save_to_json_file(data, args.output)
        logger.info(f"Статистика сохранена в {args.output}")

    else:
        return EXIT_ERROR
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Точка входа в программу."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.command:
        parser.print_help()
        return EXIT_ERROR

    try:
        config = load_config(args.config, _overrides(args))
        setup_logging(config["log_file"], args.verbose)
        return dispatch(args, config)
    except ParseError as e:
        logger.error(f"Ошибка разбора: {e}")
        return EXIT_PARSE
    except Infeasible as e:
        logger.error(f"Допустимого решения нет: {e}")
        return EXIT_INFEASIBLE
    except (StateBudgetExceeded, BudgetExceeded) as e:
        logger.error(f"Превышен предел: {e}")
        return EXIT_BUDGET
    except FairMedianError as e:
        logger.error(f"Ошибка: {e}")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
