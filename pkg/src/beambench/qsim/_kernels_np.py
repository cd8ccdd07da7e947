"""Pure-numpy statevector gate kernels.

States are batched little-endian statevectors of shape (batch, 2**n)
(qubit 0 is the least significant bit of the basis index), complex128,
modified in place.  The reshape tricks below expose the target/control
bit as its own axis so gate application is plain broadcasting.
"""

from __future__ import annotations

import numpy as np

BACKEND = "numpy"


def _check_state(state: np.ndarray) -> None:
    if state.ndim != 2 or state.dtype != np.complex128:
        raise ValueError("state must be a (batch, 2**n) complex128 array")


def _bit_view(state: np.ndarray, qubit: int) -> np.ndarray:
    """View of shape (batch, high, 2, low) with the qubit as axis 2."""
    batch, dim = state.shape
    low = 1 << qubit
    if low >= dim:
        raise ValueError(f"qubit {qubit} out of range for dim {dim}")
    return state.reshape(batch, dim // (2 * low), 2, low)


def apply_1q(state: np.ndarray, target: int, u: np.ndarray) -> None:
    """Apply a per-batch-element 2x2 unitary u of shape (batch, 2, 2)."""
    _check_state(state)
    v = _bit_view(state, target)
    a0 = v[:, :, 0, :].copy()
    a1 = v[:, :, 1, :]
    u00 = u[:, 0, 0][:, None, None]
    u01 = u[:, 0, 1][:, None, None]
    u10 = u[:, 1, 0][:, None, None]
    u11 = u[:, 1, 1][:, None, None]
    v[:, :, 0, :] = u00 * a0 + u01 * a1
    v[:, :, 1, :] = u10 * a0 + u11 * a1


def apply_1q_shared(state: np.ndarray, target: int, u: np.ndarray) -> None:
    """Apply one 2x2 unitary u to every batch element."""
    _check_state(state)
    v = _bit_view(state, target)
    a0 = v[:, :, 0, :].copy()
    a1 = v[:, :, 1, :]
    v[:, :, 0, :] = u[0, 0] * a0 + u[0, 1] * a1
    v[:, :, 1, :] = u[1, 0] * a0 + u[1, 1] * a1


def _control_target_view(state: np.ndarray, control: int, target: int):
    """View (batch, a, 2, b, 2, c) with control/target bits as own axes.

    Returns (view, control_axis, target_axis).
    """
    if control == target:
        raise ValueError("control and target must differ")
    batch, dim = state.shape
    hi, lo = max(control, target), min(control, target)
    if (1 << hi) >= dim:
        raise ValueError(f"qubit {hi} out of range for dim {dim}")
    shape = (batch, dim // (1 << (hi + 1)), 2, (1 << hi) // (1 << (lo + 1)), 2, 1 << lo)
    v = state.reshape(shape)
    if control > target:
        return v, 2, 4
    return v, 4, 2


def apply_controlled_1q(
    state: np.ndarray,
    control: int,
    target: int,
    u: np.ndarray,
    zero_uncontrolled: bool = False,
) -> None:
    """Apply per-batch u on the target within the control=1 subspace.

    With zero_uncontrolled the control=0 subspace is zeroed instead of
    kept, which turns the gate into its derivative building block.
    """
    _check_state(state)
    v, c_ax, t_ax = _control_target_view(state, control, target)
    one = v[(slice(None),) * c_ax + (1,)]  # control = 1 block, target axis shifts down
    t_sub = t_ax if t_ax < c_ax else t_ax - 1
    a0 = one[(slice(None),) * t_sub + (0,)].copy()
    a1 = one[(slice(None),) * t_sub + (1,)]
    extra = a0.ndim - 1  # broadcast u over remaining axes
    u00 = u[:, 0, 0].reshape((-1,) + (1,) * extra)
    u01 = u[:, 0, 1].reshape((-1,) + (1,) * extra)
    u10 = u[:, 1, 0].reshape((-1,) + (1,) * extra)
    u11 = u[:, 1, 1].reshape((-1,) + (1,) * extra)
    one[(slice(None),) * t_sub + (0,)] = u00 * a0 + u01 * a1
    one[(slice(None),) * t_sub + (1,)] = u10 * a0 + u11 * a1
    if zero_uncontrolled:
        v[(slice(None),) * c_ax + (0,)] = 0.0


def apply_cx(state: np.ndarray, control: int, target: int) -> None:
    """Controlled-X: swap target amplitudes within the control=1 subspace."""
    _check_state(state)
    v, c_ax, t_ax = _control_target_view(state, control, target)
    one = v[(slice(None),) * c_ax + (1,)]
    t_sub = t_ax if t_ax < c_ax else t_ax - 1
    a0 = one[(slice(None),) * t_sub + (0,)].copy()
    one[(slice(None),) * t_sub + (0,)] = one[(slice(None),) * t_sub + (1,)]
    one[(slice(None),) * t_sub + (1,)] = a0


def apply_cz(state: np.ndarray, control: int, target: int) -> None:
    """Controlled-Z: negate the control=1, target=1 subspace."""
    _check_state(state)
    v, c_ax, t_ax = _control_target_view(state, control, target)
    both = v[(slice(None),) * min(c_ax, t_ax) + (1,)]
    shift = max(c_ax, t_ax) - 1
    both[(slice(None),) * shift + (1,)] *= -1.0
