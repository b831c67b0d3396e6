"""Исключения проекта"""


class FedQmixError(Exception):
    """Базовое исключение."""


class ConfigError(FedQmixError, ValueError):
    """Невалидная конфигурация; сообщение называет поле."""


class MapFormatError(ConfigError):
    """Файл карты не парсится или нарушает инварианты."""


class ContractViolation(FedQmixError, RuntimeError):
    """Нарушен контракт вызова (например, недопустимое действие)."""


class InsufficientMeasurementsError(FedQmixError):
    """Слишком мало измерений для обучения канала или локализации."""


class LayoutMismatchError(FedQmixError, ValueError):
    """Векторы параметров имеют разную раскладку."""


class CheckpointMismatchError(FedQmixError):
    """Отпечаток конфига в чекпоинте не совпадает с текущим."""


class BufferUnderflowError(FedQmixError):
    """В буфере меньше эпизодов, чем размер батча."""
