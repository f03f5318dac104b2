"""
FairMedian Solver - Configuration
"""

import os
import json
import logging
from typing import Dict, Any, Optional

from dotenv import load_dotenv

from core_model import FairMedianError, TOLERANCE

# Настройка логирования
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger('FairMedianConfig')

# Версия пакета
VERSION = {
    "major": 0,
    "minor": 3,
    "patch": 0,
    "release": "beta"
}

# Константы решателей
MAX_LEVELS = 48                   # Максимальное число уровней дерева разбиения
MAX_STATES = 2_000_000            # Ограничение на число состояний ДП
ORACLE_BUDGET = 10 ** 7           # Ограничение на число перебираемых назначений
REDUCE_THRESHOLD = 12             # Порог n, выше которого точки стягиваются к центрам
BRUTE_ESTIMATE_LIMIT = 10         # Порог |C|+|F| для точной оценки стоимости
DEFAULT_EPSILON = 0.5             # Точность QPTAS по умолчанию
DEFAULT_TREES = 10                # Число деревьев разбиения по умолчанию
DEFAULT_HST_TREES = 20            # Число HST по умолчанию
DEFAULT_DOUBLING_DIM = 2          # Удвоенная размерность, если она не задана
LOCAL_SEARCH_ROUNDS = 50          # Число раундов локального поиска
REPORT_SCHEMA_VERSION = "1.0"     # Версия формата отчета

DEFAULT_CONFIG: Dict[str, Any] = {
    "epsilon": DEFAULT_EPSILON,
    "trees": DEFAULT_TREES,
    "hst_trees": DEFAULT_HST_TREES,
    "rho": None,
    "max_states": MAX_STATES,
    "max_levels": MAX_LEVELS,
    "oracle_budget": ORACLE_BUDGET,
    "reduce_threshold": REDUCE_THRESHOLD,
    "estimator": "auto",
    "workers": 1,
    "log_file": "fairmedian.log",
}

ENV_PREFIX = "FAIRMEDIAN_"


class InvalidParams(FairMedianError):
    """Ошибка при некорректных параметрах запуска."""
    pass


def _coerce(key: str, value: Any) -> Any:
    """
    Приводит значение параметра к типу значения по умолчанию.

    Args:
        key: Имя параметра
        value: Исходное значение (строка из окружения или значение из JSON)

    Returns:
        Значение нужного типа
    """
    default = DEFAULT_CONFIG[key]
    if value is None:
        return None
    try:
        if key == "rho":
            return float(value)
        if isinstance(default, bool):
            return str(value).lower() in ("1", "true", "yes")
        if isinstance(default, int):
            return int(value)
        if isinstance(default, float):
            return float(value)
        return str(value)
    except (TypeError, ValueError):
        raise InvalidParams(f"Параметр {key}: недопустимое значение {value!r}")


def load_config(path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """
    Собирает конфигурацию: значения по умолчанию, переменные окружения
    FAIRMEDIAN_*, JSON-файл и явные переопределения (в этом порядке).

    Args:
        path: Путь к JSON-файлу конфигурации
        overrides: Явные значения, например из аргументов командной строки

    Returns:
        Словарь конфигурации
    """
    load_dotenv()
    config = dict(DEFAULT_CONFIG)

    for key in DEFAULT_CONFIG:
        env_value = os.getenv(ENV_PREFIX + key.upper())
        if env_value is not None:
            config[key] = _coerce(key, env_value)
            logger.debug(f"Параметр {key} взят из окружения: {config[key]}")

    if path:
        try:
            with open(path, 'r', encoding='utf-8') as file:
                file_config = json.load(file)
        except (OSError, json.JSONDecodeError) as e:
            raise InvalidParams(f"Не удалось прочитать конфигурацию {path}: {e}")
        if not isinstance(file_config, dict):
            raise InvalidParams(f"Конфигурация {path} должна быть JSON-объектом")
        for key, value in file_config.items():
            if key not in DEFAULT_CONFIG:
                logger.warning(f"Неизвестный параметр конфигурации: {key}")
                continue
            config[key] = _coerce(key, value)

    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in DEFAULT_CONFIG:
            logger.warning(f"Неизвестный параметр конфигурации: {key}")
            continue
        config[key] = _coerce(key, value)

    if not 0 < config["epsilon"] < 1:
        raise InvalidParams(f"epsilon должен лежать в (0, 1), получено {config['epsilon']}")
    if config["rho"] is not None and not 0 < config["rho"] <= 0.5:
        raise InvalidParams(f"rho должен лежать в (0, 1/2], получено {config['rho']}")
    for key in ("trees", "hst_trees", "max_states", "oracle_budget", "workers"):
        if config[key] < 1:
            raise InvalidParams(f"{key} должен быть положительным, получено {config[key]}")
    return config


def get_version_string() -> str:
    """
    Возвращает строку версии.

    Returns:
        Версия в формате major.minor.patch-release
    """
    version = f"{VERSION['major']}.{VERSION['minor']}.{VERSION['patch']}"
    if VERSION["release"] != "final":
        version += f"-{VERSION['release']}"
    return version
