"""Beam-management episode: a receiver rides a random trajectory while
the agent picks which antenna serves it.

One episode = one trajectory traversed in ``horizon`` equal arc-length
steps.  The action selects the serving antenna; the environment then
sweeps that antenna's codebook and applies the best element, so the
reward is the best intensity the chosen antenna can deliver at the new
receiver position.  Observations are (antenna index, codebook index,
intensity), all normalized to [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .beam import AntennaConfig, intensity_grid
from .trajectory import Trajectory, position, sample_trajectory

DEFAULT_HORIZON = 200
DEFAULT_TRAJECTORY_DEGREE = 3
OBS_DIM = 3


def normalize_index(index: int, count: int) -> float:
    """Map index in [0, count) to [0, 1]; degenerate single-entry sets map to 0."""
    if count <= 1:
        return 0.0
    return index / (count - 1)


@dataclass
class EpisodeRecord:
    """Per-step rewards and per-step global optima for one episode."""

    rewards: list = field(default_factory=list)
    optima: list = field(default_factory=list)


def relative_return(record: EpisodeRecord) -> float:
    """Episode return divided by the best achievable return, in [0, 1]."""
    if not record.rewards:
        raise ValueError("empty episode")
    total = float(np.sum(record.rewards))
    best = float(np.sum(record.optima))
    if best <= 0.0:
        return 0.0
    return total / best


class BeamEnv:
    """Sequential antenna-selection environment over a fixed scene.

    reset() draws a fresh trajectory and precomputes the full intensity
    table over its (horizon + 1) positions, making step() a table lookup.
    """

    def __init__(
        self,
        config: AntennaConfig,
        trajectory_degree: int = DEFAULT_TRAJECTORY_DEGREE,
        horizon: int = DEFAULT_HORIZON,
    ):
        if horizon < 1:
            raise ValueError("horizon must be positive")
        self.config = config
        self.trajectory_degree = trajectory_degree
        self.horizon = horizon
        self.n_actions = config.n_antennas
        self._table: Optional[np.ndarray] = None  # (horizon + 1, A, C)
        self._step_index = 0
        self._trajectory: Optional[Trajectory] = None
        self.record = EpisodeRecord()

    def reset(self, seed: Union[int, np.random.Generator, None] = None) -> np.ndarray:
        """Start a new episode; returns the initial observation.

        The receiver starts at tau = 0 served by antenna 0 with that
        antenna's best codebook element.
        """
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        traj = sample_trajectory(self.trajectory_degree, rng, self.config.domain_size)
        return self.reset_with_trajectory(traj)

    def reset_with_trajectory(self, traj: Trajectory) -> np.ndarray:
        self._trajectory = traj
        taus = np.arange(self.horizon + 1) / self.horizon
        points = position(traj, taus)
        self._table = intensity_grid(self.config, points)
        self._step_index = 0
        self.record = EpisodeRecord()
        row = self._table[0, 0]
        c_idx = int(np.argmax(row))
        self._obs = self._make_obs(0, c_idx, float(row[c_idx]))
        return self._obs

    def _make_obs(self, a_idx: int, c_idx: int, value: float) -> np.ndarray:
        return np.array(
            [
                normalize_index(a_idx, self.config.n_antennas),
                normalize_index(c_idx, self.config.codebook.n_elements),
                value,
            ]
        )

    def step(self, action: int) -> tuple[np.ndarray, float, bool]:
        """Advance one arc-length step serving antenna ``action``."""
        if self._table is None:
            raise RuntimeError("call reset() before step()")
        if self._step_index >= self.horizon:
            raise RuntimeError("episode is over; call reset()")
        if not 0 <= action < self.n_actions:
            raise ValueError(f"action {action} out of range [0, {self.n_actions})")
        self._step_index += 1
        row = self._table[self._step_index, action]
        c_idx = int(np.argmax(row))
        reward = float(row[c_idx])
        self.record.rewards.append(reward)
        self.record.optima.append(float(self._table[self._step_index].max()))
        self._obs = self._make_obs(action, c_idx, reward)
        done = self._step_index >= self.horizon
        return self._obs, reward, done

    def relative_return(self) -> float:
        return relative_return(self.record)

    # Snapshot/restore expose the full Markov state for testing and for
    # search-style consumers; the table is shared, not copied.
    def get_state(self) -> dict:
        return {
            "step_index": self._step_index,
            "obs": None if self._table is None else self._obs.copy(),
            "rewards": list(self.record.rewards),
            "optima": list(self.record.optima),
        }

    def set_state(self, state: dict) -> None:
        if self._table is None:
            raise RuntimeError("call reset() before set_state()")
        self._step_index = state["step_index"]
        self._obs = state["obs"].copy()
        self.record = EpisodeRecord(list(state["rewards"]), list(state["optima"]))
