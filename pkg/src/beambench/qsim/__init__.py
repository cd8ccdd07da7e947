"""Batched statevector simulator for the variational circuits."""

from .ansatz import (
    GATE_FAMILIES,
    STRUCTURES,
    AnsatzSpec,
    VqcParams,
    ansatz_gradients,
    gate_matrices,
    rotation_matrix,
    run_ansatz,
    z_expectations,
)
from .kernels import BACKEND, make_state

__all__ = [
    "AnsatzSpec",
    "VqcParams",
    "BACKEND",
    "GATE_FAMILIES",
    "STRUCTURES",
    "ansatz_gradients",
    "gate_matrices",
    "make_state",
    "rotation_matrix",
    "run_ansatz",
    "z_expectations",
]
