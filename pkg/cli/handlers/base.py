"""Базовый класс для всех обработчиков"""

import argparse

from common.storage import RunStore
from config import Config


class BaseHandler:
    """
    Базовый класс для всех обработчиков.

    Все хэндлеры наследуют этот класс и получают конфиг эксперимента
    и хранилище артефактов выходной директории.
    """

    def __init__(self, config: Config, store: RunStore):
        """
        Инициализация обработчика.

        Args:
            config: Провалидированный конфиг эксперимента
            store: Хранилище артефактов (--out или config.out_dir)
        """
        self.config = config
        self.store = store

    def handle(self, args: argparse.Namespace) -> None:
        raise NotImplementedError
