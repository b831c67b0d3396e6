"""
Симулятор Dec-POMDP сбора данных с IoT-устройств.

Каждый инстанс среды однопоточный и владеет своим кэшем видимости.
"""

from common.env.models import (
    N_ACTIONS,
    Action,
    EnvSpec,
    EnvState,
    LinkTable,
    MeasurementRecord,
    StepOutcome,
)
from common.env.observations import build_global_state, build_observation, obs_dim, state_dim
from common.env.scheduler import UNASSIGNED, schedule
from common.env.simulator import HarvestEnv

__all__ = [
    "N_ACTIONS",
    "Action",
    "EnvSpec",
    "EnvState",
    "HarvestEnv",
    "LinkTable",
    "MeasurementRecord",
    "StepOutcome",
    "UNASSIGNED",
    "build_global_state",
    "build_observation",
    "obs_dim",
    "schedule",
    "state_dim",
]
