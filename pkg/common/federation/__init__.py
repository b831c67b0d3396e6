"""Model-aided FedQMIX: федеративное усреднение и внешний цикл."""

from common.federation.aggregation import aggregate
from common.federation.baselines import run_baseline, single_learner_config
from common.federation.runner import (
    FedRunState,
    LearnerWorker,
    RunResult,
    init_run_state,
    learn_environment,
    make_learner,
    run_algorithm1,
    run_outer_iteration,
    train_round,
)

__all__ = [
    "FedRunState",
    "LearnerWorker",
    "RunResult",
    "aggregate",
    "init_run_state",
    "learn_environment",
    "make_learner",
    "run_algorithm1",
    "run_baseline",
    "run_outer_iteration",
    "single_learner_config",
    "train_round",
]
