"""
Независимые потоки случайных чисел.

Все генераторы выводятся из одного сида через numpy SeedSequence:
глобальное состояние random / np.random нигде не используется.
"""

import numpy as np

# Именованные потоки верхнего уровня
_STREAMS = ("real_world", "init", "pso", "learners", "eval")


def seed_sequence(seed: int) -> dict[str, np.random.SeedSequence]:
    """Разбить сид на именованные дочерние последовательности."""
    children = np.random.SeedSequence(seed).spawn(len(_STREAMS))
    return dict(zip(_STREAMS, children))


def make_rng(seed: int, stream: str) -> np.random.Generator:
    """Генератор для именованного потока."""
    return np.random.default_rng(seed_sequence(seed)[stream])


def learner_rngs(seed: int, count: int, explicit: list[int] | None = None) -> list[np.random.Generator]:
    """
    Генераторы федеративных учеников.

    Args:
        seed: Сид эксперимента
        count: Число учеников
        explicit: Явные сиды учеников (перекрывают выведенные)
    """
    if explicit is not None:
        return [np.random.default_rng(s) for s in explicit]
    children = seed_sequence(seed)["learners"].spawn(count)
    return [np.random.default_rng(c) for c in children]
