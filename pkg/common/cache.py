"""
Декоратор для кэширования результатов методов в памяти инстанса.

Использование:
    class HarvestEnv:
        @cached(key="los:{ix}:{iy}:{altitude_m}:{k}")
        def device_los(self, ix: int, iy: int, altitude_m: float, k: int) -> bool:
            ...

Кэш живёт в атрибуте `_cache` инстанса, поэтому разные инстансы
(например, среды разных федеративных учеников) ничего не делят.
"""

import functools
import inspect
from typing import Callable

_CACHE_ATTR = "_cache"


def _storage(instance) -> dict:
    storage = instance.__dict__.get(_CACHE_ATTR)
    if storage is None:
        storage = {}
        instance.__dict__[_CACHE_ATTR] = storage
    return storage


def cached(key: str):
    """
    Декоратор для кэширования.

    Работает с методами инстанса (self). Ключ строится по шаблону из
    аргументов вызова, например "field:{altitude_m}".

    Args:
        key: Шаблон ключа
    """

    def decorator(func: Callable):
        sig = inspect.signature(func)

        @functools.wraps(func)
        def wrapper(self, *args, **kwargs):
            bound = sig.bind(self, *args, **kwargs)
            bound.apply_defaults()
            params = dict(bound.arguments)
            params.pop("self")
            cache_key = key.format(**params)

            storage = _storage(self)
            if cache_key in storage:
                return storage[cache_key]

            result = func(self, *args, **kwargs)
            storage[cache_key] = result
            return result

        return wrapper

    return decorator


def invalidate(instance, key: str | None = None) -> None:
    """Инвалидировать кэш (весь, если key не задан)."""
    storage = _storage(instance)
    if key is None:
        storage.clear()
    else:
        storage.pop(key, None)
