"""Training loops and their supporting pieces."""

from .ddqn import DdqnConfig, ddqn_loss, ddqn_train, epsilon_greedy, validate
from .ppo import PpoConfig, gae_advantages, ppo_loss, ppo_train
from .replay import ReplayBuffer
from .runlog import LogEntry, RunLog, run_filename

__all__ = [
    "DdqnConfig",
    "PpoConfig",
    "LogEntry",
    "ReplayBuffer",
    "RunLog",
    "ddqn_loss",
    "ddqn_train",
    "epsilon_greedy",
    "gae_advantages",
    "ppo_loss",
    "ppo_train",
    "run_filename",
    "validate",
]
