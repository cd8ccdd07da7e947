"""Backend dispatch for the statevector gate kernels.

Prefers the compiled Cython kernels; silently falls back to the numpy
implementation when the extension is absent.  Set BEAMBENCH_PURE_PYTHON=1
to force the numpy backend regardless.
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernels_np

if os.environ.get("BEAMBENCH_PURE_PYTHON", "").strip() not in ("", "0"):
    _impl = _kernels_np
else:
    try:
        from . import _kernels_cy as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _kernels_np

BACKEND: str = _impl.BACKEND


def make_state(n_qubits: int, batch: int = 1) -> np.ndarray:
    """Batched |0...0> statevectors, shape (batch, 2**n_qubits)."""
    if n_qubits < 1:
        raise ValueError("need at least one qubit")
    state = np.zeros((batch, 1 << n_qubits), dtype=np.complex128)
    state[:, 0] = 1.0
    return state


def _gate(u: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(u, dtype=np.complex128)


def apply_1q(state: np.ndarray, target: int, u: np.ndarray) -> None:
    _impl.apply_1q(state, target, _gate(u))


def apply_1q_shared(state: np.ndarray, target: int, u: np.ndarray) -> None:
    _impl.apply_1q_shared(state, target, _gate(u))


def apply_controlled_1q(
    state: np.ndarray, control: int, target: int, u: np.ndarray, zero_uncontrolled: bool = False
) -> None:
    _impl.apply_controlled_1q(state, control, target, _gate(u), zero_uncontrolled)


def apply_cx(state: np.ndarray, control: int, target: int) -> None:
    _impl.apply_cx(state, control, target)


def apply_cz(state: np.ndarray, control: int, target: int) -> None:
    _impl.apply_cz(state, control, target)


_SIGN_CACHE: dict[int, np.ndarray] = {}


def sign_matrix(n_qubits: int) -> np.ndarray:
    """(2**n, n) matrix with entry (i, q) = +1 if bit q of i is 0 else -1."""
    cached = _SIGN_CACHE.get(n_qubits)
    if cached is None:
        idx = np.arange(1 << n_qubits)
        bits = (idx[:, None] >> np.arange(n_qubits)[None, :]) & 1
        cached = 1.0 - 2.0 * bits
        _SIGN_CACHE[n_qubits] = cached
    return cached


def z_expectations(state: np.ndarray) -> np.ndarray:
    """Per-qubit <Z_q> for a batched state, shape (batch, n_qubits)."""
    dim = state.shape[1]
    n = int(dim).bit_length() - 1
    if 1 << n != dim:
        raise ValueError(f"state dim {dim} is not a power of two")
    probs = state.real**2 + state.imag**2
    return probs @ sign_matrix(n)
