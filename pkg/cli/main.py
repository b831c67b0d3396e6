"""
Точка входа: python -m cli.main <train|eval|localize|plot> [флаги]

Коды выхода: 0 успех, 1 ошибка использования, 2 невалидные входные
данные, 3 ошибка выполнения.
"""

import argparse
import logging
import sys
from pathlib import Path

from pydantic import ValidationError

from cli.handlers import ALGORITHMS, BaseHandler, EvalHandler, LocalizeHandler, PlotHandler, TrainHandler
from common.exceptions import CheckpointMismatchError, ConfigError, InsufficientMeasurementsError
from common.storage import RunStore
from config import Config, config

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3

HANDLERS: dict[str, type[BaseHandler]] = {
    "train": TrainHandler,
    "eval": EvalHandler,
    "localize": LocalizeHandler,
    "plot": PlotHandler,
}


class UsageError(Exception):
    pass


class ArgumentParser(argparse.ArgumentParser):
    """argparse без sys.exit(2): ошибка использования отдаётся наверх"""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def build_parser() -> ArgumentParser:
    common = ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="Experiment config JSON")
    common.add_argument("--seed", type=int, help="Overrides the config seed")
    common.add_argument("--out", type=Path, help="Output directory (default: config out_dir)")
    common.add_argument("--algo", choices=ALGORITHMS, default="fedqmix", help="Training algorithm")

    parser = ArgumentParser(prog="uav-fedqmix", description="Model-aided FedQMIX workbench")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)

    sub.add_parser("train", parents=[common], help="Train a policy and write metrics, checkpoints, plots")

    p_eval = sub.add_parser("eval", parents=[common], help="Greedy rollout of a checkpoint in the real environment")
    p_eval.add_argument("--checkpoint", type=Path, help="Checkpoint file (default: <out>/checkpoints/final.pvec)")

    p_loc = sub.add_parser("localize", parents=[common], help="Fit the channel and localize devices from a CSV")
    p_loc.add_argument("--measurements", type=Path, help="Measurement CSV (default: <out>/measurements.csv)")

    p_plot = sub.add_parser("plot", parents=[common], help="Re-render plots from metrics CSVs and trajectory JSONs")
    p_plot.add_argument("--metrics", type=Path, nargs="+", help="Metrics CSVs, one curve each")
    p_plot.add_argument("--trajectory", type=Path, nargs="+", help="Trajectory JSON files")
    return parser


def load_config(args: argparse.Namespace) -> Config:
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.config is not None:
        if not args.config.exists():
            raise ConfigError(f"config: file not found: {args.config}")
        return Config.from_file(args.config, **overrides)
    return config.model_copy(update=overrides)


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE

    try:
        cfg = load_config(args)
    except (ConfigError, ValidationError, ValueError) as e:
        print(f"invalid configuration: {e}", file=sys.stderr)
        return EXIT_VALIDATION

    logging.basicConfig(level=cfg.log.level, format=cfg.log.format, force=True)
    store = RunStore(args.out or cfg.out_dir)
    handler = HANDLERS[args.command](cfg, store)

    try:
        handler.handle(args)
    except (ConfigError, ValidationError, InsufficientMeasurementsError, CheckpointMismatchError) as e:
        logger.error("Invalid input: %s", e)
        return EXIT_VALIDATION
    except Exception as e:
        logger.exception(e)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
