"""Рекуррентные ученики QMIX и IQL."""

from common.learner.agent import AgentNet, act, act_many, agent_input_dim, agent_layout
from common.learner.buffer import Episode, EpisodeBatch, EpisodeBuffer, EpisodeRecorder
from common.learner.mixer import MixerNet, mixer_layout
from common.learner.qlearner import NO_ACTION, QLearner
from common.learner.rollout import EpisodeResult, greedy_rollout, run_episode, trajectory_document

__all__ = [
    "NO_ACTION",
    "AgentNet",
    "Episode",
    "EpisodeBatch",
    "EpisodeBuffer",
    "EpisodeRecorder",
    "EpisodeResult",
    "MixerNet",
    "QLearner",
    "act",
    "act_many",
    "agent_input_dim",
    "agent_layout",
    "greedy_rollout",
    "mixer_layout",
    "run_episode",
    "trajectory_document",
]
