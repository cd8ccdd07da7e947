"""Deterministic RNG streams per training run.

Every run expands its master seed into fixed, disjoint substreams via
SeedSequence spawn keys.  Identical (seed, config) pairs therefore
reproduce runs bit for bit, and a re-executed run regenerates exactly
the trajectories and minibatches of the original — which is what makes
interrupted sweeps resumable by simply rerunning missing seeds.
"""

from __future__ import annotations

import numpy as np

# Stream indices are part of the on-disk reproducibility contract:
# renumbering them silently changes every run.
STREAMS = {
    "weights": 0,  # model initialization
    "train_env": 1,  # training trajectory seeds
    "val_env": 2,  # validation trajectory seeds
    "explore": 3,  # action sampling / epsilon noise
    "batch": 4,  # replay sampling and minibatch shuffles
}


def stream_rng(master_seed: int, stream: str) -> np.random.Generator:
    """Independent generator for one named stream of a run."""
    try:
        key = STREAMS[stream]
    except KeyError:
        raise ValueError(f"unknown stream {stream!r}, pick one of {sorted(STREAMS)}") from None
    seq = np.random.SeedSequence(master_seed, spawn_key=(key,))
    return np.random.default_rng(seq)


def run_streams(master_seed: int) -> dict[str, np.random.Generator]:
    """All named streams for one run."""
    return {name: stream_rng(master_seed, name) for name in STREAMS}


def draw_seed(rng: np.random.Generator) -> int:
    """A fresh 63-bit child seed (e.g. one trajectory's seed)."""
    return int(rng.integers(0, 2**63))
