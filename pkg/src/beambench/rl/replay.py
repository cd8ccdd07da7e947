"""FIFO experience replay with uniform minibatch sampling."""

from __future__ import annotations

import numpy as np


class ReplayBuffer:
    """Ring buffer of transitions backed by preallocated arrays.

    Arrays are allocated lazily on the first add so the buffer adapts to
    the observation dimensionality.
    """

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._size = 0
        self._next = 0
        self._states = None
        self._actions = np.empty(capacity, dtype=np.int64)
        self._rewards = np.empty(capacity, dtype=float)
        self._next_states = None
        self._dones = np.empty(capacity, dtype=bool)

    def __len__(self) -> int:
        return self._size

    def add(self, state, action: int, reward: float, next_state, done: bool) -> None:
        state = np.asarray(state, dtype=float)
        next_state = np.asarray(next_state, dtype=float)
        if self._states is None:
            self._states = np.empty((self.capacity, state.shape[0]))
            self._next_states = np.empty((self.capacity, state.shape[0]))
        i = self._next
        self._states[i] = state
        self._actions[i] = action
        self._rewards[i] = reward
        self._next_states[i] = next_state
        self._dones[i] = done
        self._next = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def sample(self, rng: np.random.Generator, batch_size: int):
        """Uniform sample with replacement: (states, actions, rewards,
        next_states, dones) as stacked arrays."""
        if self._size == 0:
            raise ValueError("cannot sample from an empty buffer")
        idx = rng.integers(0, self._size, size=batch_size)
        return (
            self._states[idx].copy(),
            self._actions[idx].copy(),
            self._rewards[idx].copy(),
            self._next_states[idx].copy(),
            self._dones[idx].copy(),
        )
