"""Обработчики подкоманд"""

from cli.handlers.base import BaseHandler
from cli.handlers.eval import EvalHandler
from cli.handlers.localize import LocalizeHandler
from cli.handlers.plot import PlotHandler
from cli.handlers.train import ALGORITHMS, TrainHandler

__all__ = ["ALGORITHMS", "BaseHandler", "EvalHandler", "LocalizeHandler", "PlotHandler", "TrainHandler"]
