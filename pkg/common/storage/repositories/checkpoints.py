"""
Репозиторий чекпоинтов: ParamVector-блобы с отпечатком архитектуры.
"""

import logging
from pathlib import Path
from typing import Any

from common.exceptions import CheckpointMismatchError
from common.nn import ParamVector

logger = logging.getLogger(__name__)


class CheckpointRepository:
    """
    Раскладка: <dir>/iter_0000.pvec, <dir>/iter_0001.pvec, ..., <dir>/final.pvec

    Использование:
        repo = CheckpointRepository(out_dir / "checkpoints")
        repo.save(params, learner.fingerprint(), iteration=3)
        params = repo.load(repo.final_path, expected=learner.fingerprint())
    """

    def __init__(self, directory: Path):
        self.directory = directory

    @property
    def final_path(self) -> Path:
        return self.directory / "final.pvec"

    def iteration_path(self, iteration: int) -> Path:
        return self.directory / f"iter_{iteration:04d}.pvec"

    def save(self, params: ParamVector, fingerprint: dict[str, Any], iteration: int | None = None) -> Path:
        """Сохранить глобальные параметры; iteration=None пишет final.pvec."""
        path = self.final_path if iteration is None else self.iteration_path(iteration)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(params.to_bytes({"fingerprint": fingerprint}))
        logger.debug("Checkpoint written: %s", path)
        return path

    @staticmethod
    def load(path: Path, expected: dict[str, Any] | None = None) -> ParamVector:
        """
        Загрузить чекпоинт.

        Raises:
            CheckpointMismatchError: файл повреждён или отпечаток не совпадает
        """
        try:
            blob = Path(path).read_bytes()
        except OSError as e:
            raise CheckpointMismatchError(f"{path}: {e.strerror}") from e
        params, meta = ParamVector.from_bytes(blob)
        if expected is not None:
            found = meta.get("fingerprint")
            if found != expected:
                diff = sorted(k for k in set(expected) | set(found or {}) if (found or {}).get(k) != expected.get(k))
                raise CheckpointMismatchError(f"{path}: checkpoint does not match the configuration ({', '.join(diff)})")
        return params
