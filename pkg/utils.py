"""
FairMedian Solver - Utility Functions
"""

import os
import json
import time
import logging
import functools
from typing import Any, List

import numpy as np

from core_model import ParseError

# Настройка логирования
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger('FairMedianUtils')


def _to_builtin(value: Any) -> Any:
    """Приводит скаляры и массивы numpy к типам, понятным json."""
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (set, frozenset)):
        return sorted(value)
    raise TypeError(f"Тип {type(value).__name__} не сериализуется в JSON")


def save_to_json_file(data: Any, filepath: str) -> bool:
    """
    Записывает отчет, экземпляр или дамп дерева в JSON с сортировкой ключей.
    Родительский каталог создается при необходимости.

    Args:
        data: Сериализуемые данные (допускаются типы numpy)
        filepath: Путь к файлу

    Returns:
        False, если записать не удалось
    """
    parent = os.path.dirname(filepath)
    try:
        if parent:
            os.makedirs(parent, exist_ok=True)
        with open(filepath, 'w', encoding='utf-8') as file:
            json.dump(data, file, indent=4, sort_keys=True, default=_to_builtin)
    except (OSError, TypeError) as e:
        logger.error(f"Не удалось записать {filepath}: {e}")
        return False
    logger.debug(f"Записан файл {filepath}")
    return True


def load_from_json_file(filepath: str) -> Any:
    """
    Читает JSON-файл экземпляра, отчета или векторов цветов.

    Args:
        filepath: Путь к файлу

    Returns:
        Загруженные данные

    Raises:
        ParseError: если файла нет или он не является корректным JSON
    """
    if not os.path.exists(filepath):
        raise ParseError(f"Файл {filepath} не существует")
    try:
        with open(filepath, 'r', encoding='utf-8') as file:
            data = json.load(file)
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ParseError(f"Некорректный JSON в {filepath}: {e}")

    logger.debug(f"Прочитан файл {filepath}")
    return data


def derive_seeds(seed: int, count: int) -> List[int]:
    """
    Порождает независимые зерна для отдельных деревьев.

    Args:
        seed: Исходное зерно
        count: Количество зерен

    Returns:
        Список целых зерен
    """
    children = np.random.SeedSequence(seed).spawn(count)
    return [int(child.generate_state(1)[0]) for child in children]


def measure_execution_time(func):
    """
    Декоратор для измерения времени выполнения функции.
    Последнее время в миллисекундах сохраняется в атрибуте last_wall_ms.

    Args:
        func: Функция для измерения

    Returns:
        Обернутая функция
    """
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        start_time = time.perf_counter()
        try:
            return func(*args, **kwargs)
        finally:
            elapsed = time.perf_counter() - start_time
            wrapper.last_wall_ms = elapsed * 1000.0
            logger.debug(f"{func.__name__} выполнено за {elapsed:.6f} сек.")
    wrapper.last_wall_ms = 0.0
    return wrapper
