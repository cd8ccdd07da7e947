"""Beam-management RL benchmark: environment, models, trainers, and a
sample-complexity estimator with cluster-bootstrap significance tests."""

__version__ = "0.1.0"

from .beam import (
    Antenna,
    AntennaConfig,
    Codebook,
    InfeasibleError,
    best_codebook,
    codebook_phase,
    ground_truth,
    intensity,
    sample_configuration,
)
from .env import BeamEnv, relative_return
from .models import ClassicalModel, HybridModel
from .qsim import AnsatzSpec, VqcParams
from .stats import EpsDeltaGrid, RunMatrix, Verdict, sample_complexity
from .trajectory import Trajectory, sample_trajectory

__all__ = [
    "Antenna",
    "AntennaConfig",
    "AnsatzSpec",
    "BeamEnv",
    "ClassicalModel",
    "Codebook",
    "EpsDeltaGrid",
    "HybridModel",
    "InfeasibleError",
    "RunMatrix",
    "Trajectory",
    "Verdict",
    "VqcParams",
    "best_codebook",
    "codebook_phase",
    "ground_truth",
    "intensity",
    "relative_return",
    "sample_complexity",
    "sample_configuration",
    "sample_trajectory",
]
