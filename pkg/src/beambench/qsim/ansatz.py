"""Variational circuits with data re-uploading and adjoint gradients.

A circuit is described by an AnsatzSpec: an entangling structure, a
three-angle single-qubit gate family, a qubit count, and a layer count.
Every layer re-uploads the inputs: the k-th angle of the gate on qubit q
in layer l is  scale[l,q,k] * x[q] + theta[l,q,k].

Structures
    ENT_CX / ENT_CZ: per-qubit rotations followed by an open chain of
        CX / CZ entanglers (q -> q+1).
    IQP: controlled rotations on a ring (control q, target (q+1) mod n,
        angles indexed by q) followed by a Hadamard on every qubit.
All circuits open with one Hadamard layer on |0...0>.

Gradients use the adjoint method: one forward pass, then a backward
sweep that un-applies gates while accumulating 2 Re <bra| dG |ket>.
Cost is O(#gates) state operations total instead of O(#params) forward
passes, and it is exact (no shot noise, no parameter-shift grid).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels

STRUCTURES = ("IQP", "ENT_CX", "ENT_CZ")
GATE_FAMILIES = ("ROT", "XYZ", "U3")

_H = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=np.complex128) / np.sqrt(2.0)
_MIX2 = np.array([[0.0, -0.5j], [-0.5j, 0.0]], dtype=np.complex128)  # -i X / 2
_MIY2 = np.array([[0.0, -0.5], [0.5, 0.0]], dtype=np.complex128)  # -i Y / 2
_MIZ2 = np.array([[-0.5j, 0.0], [0.0, 0.5j]], dtype=np.complex128)  # -i Z / 2


@dataclass(frozen=True)
class AnsatzSpec:
    structure: str
    gate_family: str
    n_qubits: int
    n_layers: int

    def __post_init__(self):
        if self.structure not in STRUCTURES:
            raise ValueError(f"unknown structure {self.structure!r}, pick one of {STRUCTURES}")
        if self.gate_family not in GATE_FAMILIES:
            raise ValueError(f"unknown gate family {self.gate_family!r}, pick one of {GATE_FAMILIES}")
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        if self.n_layers < 1:
            raise ValueError("n_layers must be positive")
        if self.structure == "IQP" and self.n_qubits < 2:
            raise ValueError("IQP needs at least 2 qubits (its ring of controlled gates)")

    @property
    def n_parameters(self) -> int:
        """Trainable circuit parameters: angles plus input scales."""
        return 6 * self.n_layers * self.n_qubits


@dataclass
class VqcParams:
    """Trainable angles theta and input scales, both (layers, qubits, 3)."""

    theta: np.ndarray
    scale: np.ndarray

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)
        self.scale = np.asarray(self.scale, dtype=float)
        if self.theta.shape != self.scale.shape or self.theta.ndim != 3 or self.theta.shape[2] != 3:
            raise ValueError(
                f"theta/scale must share shape (layers, qubits, 3), "
                f"got {self.theta.shape} and {self.scale.shape}"
            )

    @classmethod
    def init_random(cls, spec: AnsatzSpec, rng: np.random.Generator) -> "VqcParams":
        shape = (spec.n_layers, spec.n_qubits, 3)
        return cls(theta=rng.uniform(0.0, 2.0 * np.pi, size=shape), scale=np.ones(shape))


def _rz(a: np.ndarray) -> np.ndarray:
    out = np.zeros(a.shape + (2, 2), dtype=np.complex128)
    out[..., 0, 0] = np.exp(-0.5j * a)
    out[..., 1, 1] = np.exp(0.5j * a)
    return out


def _ry(a: np.ndarray) -> np.ndarray:
    c, s = np.cos(a / 2.0), np.sin(a / 2.0)
    out = np.empty(a.shape + (2, 2), dtype=np.complex128)
    out[..., 0, 0] = c
    out[..., 0, 1] = -s
    out[..., 1, 0] = s
    out[..., 1, 1] = c
    return out


def _rx(a: np.ndarray) -> np.ndarray:
    c, s = np.cos(a / 2.0), np.sin(a / 2.0)
    out = np.empty(a.shape + (2, 2), dtype=np.complex128)
    out[..., 0, 0] = c
    out[..., 0, 1] = -1j * s
    out[..., 1, 0] = -1j * s
    out[..., 1, 1] = c
    return out


def gate_matrices(gate_family: str, angles: np.ndarray, derivs: bool = False):
    """Batched 2x2 unitaries for angle triples of shape (B, 3).

    Returns u of shape (B, 2, 2); with derivs also du of shape (3, B, 2, 2)
    where du[k] = dU/d(angles[:, k]).

    Conventions (R_a(phi) = exp(-i phi sigma_a / 2)):
        ROT: Rz(a2) Ry(a1) Rz(a0)
        XYZ: Rz(a2) Ry(a1) Rx(a0)
        U3:  theta = a2, phi = a1, delta = a0 with
             [[cos(t/2),            -e^{i delta} sin(t/2)],
              [e^{i phi} sin(t/2),   e^{i(phi + delta)} cos(t/2)]]
    """
    angles = np.asarray(angles, dtype=float)
    if angles.ndim != 2 or angles.shape[1] != 3:
        raise ValueError(f"angles must have shape (B, 3), got {angles.shape}")
    a0, a1, a2 = angles[:, 0], angles[:, 1], angles[:, 2]
    if gate_family in ("ROT", "XYZ"):
        left = _rz(a2)
        mid = _ry(a1)
        right = _rz(a0) if gate_family == "ROT" else _rx(a0)
        u = left @ mid @ right
        if not derivs:
            return u
        gen0 = _MIZ2 if gate_family == "ROT" else _MIX2
        du = np.empty((3,) + u.shape, dtype=np.complex128)
        du[0] = u @ gen0  # the a0 generator commutes with its own rotation
        du[1] = left @ (_MIY2 @ mid) @ right
        du[2] = _MIZ2 @ u
        return u, du
    if gate_family == "U3":
        theta, phi, delta = a2, a1, a0
        c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
        ed, ep = np.exp(1j * delta), np.exp(1j * phi)
        epd = ep * ed
        u = np.empty((len(angles), 2, 2), dtype=np.complex128)
        u[:, 0, 0] = c
        u[:, 0, 1] = -ed * s
        u[:, 1, 0] = ep * s
        u[:, 1, 1] = epd * c
        if not derivs:
            return u
        du = np.zeros((3,) + u.shape, dtype=np.complex128)
        du[0, :, 0, 1] = -1j * ed * s  # d/d delta
        du[0, :, 1, 1] = 1j * epd * c
        du[1, :, 1, 0] = 1j * ep * s  # d/d phi
        du[1, :, 1, 1] = 1j * epd * c
        du[2, :, 0, 0] = -s / 2.0  # d/d theta
        du[2, :, 0, 1] = -ed * c / 2.0
        du[2, :, 1, 0] = ep * c / 2.0
        du[2, :, 1, 1] = -epd * s / 2.0
        return u, du
    raise ValueError(f"unknown gate family {gate_family!r}")


def rotation_matrix(gate_family: str, angles) -> np.ndarray:
    """Single 2x2 unitary for one angle triple."""
    return gate_matrices(gate_family, np.asarray(angles, dtype=float)[None, :])[0]


def _layer_angles(params: VqcParams, layer: int, inputs: np.ndarray) -> np.ndarray:
    """(B, n, 3) angles for one layer given inputs (B, n)."""
    return params.scale[layer][None] * inputs[:, :, None] + params.theta[layer][None]


def _dagger(u: np.ndarray) -> np.ndarray:
    return np.conjugate(np.swapaxes(u, -1, -2))


def run_ansatz(spec: AnsatzSpec, inputs, params: VqcParams) -> np.ndarray:
    """Final statevector(s) for inputs of shape (n,) or (B, n)."""
    x = np.asarray(inputs, dtype=float)
    squeeze = x.ndim == 1
    x = np.atleast_2d(x)
    _check_shapes(spec, x, params)
    state = kernels.make_state(spec.n_qubits, batch=x.shape[0])
    for q in range(spec.n_qubits):
        kernels.apply_1q_shared(state, q, _H)
    for layer in range(spec.n_layers):
        angles = _layer_angles(params, layer, x)
        if spec.structure == "IQP":
            for q in range(spec.n_qubits):
                u = gate_matrices(spec.gate_family, angles[:, q, :])
                kernels.apply_controlled_1q(state, q, (q + 1) % spec.n_qubits, u)
            for q in range(spec.n_qubits):
                kernels.apply_1q_shared(state, q, _H)
        else:
            for q in range(spec.n_qubits):
                u = gate_matrices(spec.gate_family, angles[:, q, :])
                kernels.apply_1q(state, q, u)
            entangle = kernels.apply_cx if spec.structure == "ENT_CX" else kernels.apply_cz
            for q in range(spec.n_qubits - 1):
                entangle(state, q, q + 1)
    return state[0] if squeeze else state


def z_expectations(state: np.ndarray) -> np.ndarray:
    """Per-qubit <Z_q>; accepts (dim,) or (batch, dim)."""
    squeeze = state.ndim == 1
    out = kernels.z_expectations(np.atleast_2d(state))
    return out[0] if squeeze else out


def _check_shapes(spec: AnsatzSpec, x: np.ndarray, params: VqcParams) -> None:
    if x.shape[1] != spec.n_qubits:
        raise ValueError(f"inputs have {x.shape[1]} features, spec has {spec.n_qubits} qubits")
    if params.theta.shape != (spec.n_layers, spec.n_qubits, 3):
        raise ValueError(
            f"params shaped {params.theta.shape}, spec wants "
            f"({spec.n_layers}, {spec.n_qubits}, 3)"
        )


def ansatz_gradients(
    spec: AnsatzSpec,
    inputs,
    params: VqcParams,
    obs_weights,
    final_state: Optional[np.ndarray] = None,
):
    """Adjoint-method gradients of E_b = sum_q w[b,q] <Z_q> per batch row.

    obs_weights (B, n) holds the observable weights (equivalently the
    upstream d loss / d z_q of sample b).  Returns (dtheta, dscale,
    dinputs): dtheta and dscale are summed over the batch with params'
    shape (layers, qubits, 3); dinputs matches the inputs' shape.

    Passing the final_state from run_ansatz (same inputs/params) skips
    the internal forward pass; the caller owns that consistency.
    """
    x = np.asarray(inputs, dtype=float)
    squeeze = x.ndim == 1
    x = np.atleast_2d(x)
    _check_shapes(spec, x, params)
    w = np.atleast_2d(np.asarray(obs_weights, dtype=float))
    if w.shape != (x.shape[0], spec.n_qubits):
        raise ValueError(f"obs_weights must have shape {(x.shape[0], spec.n_qubits)}, got {w.shape}")

    if final_state is None:
        ket = np.atleast_2d(run_ansatz(spec, x, params)).copy()
    else:
        ket = np.atleast_2d(final_state).astype(np.complex128).copy()
    # O is diagonal: O|psi>_i = (sum_q w_q sign_q(i)) psi_i.
    diag = w @ kernels.sign_matrix(spec.n_qubits).T
    bra = diag * ket

    n, n_layers = spec.n_qubits, spec.n_layers
    dtheta = np.zeros_like(params.theta)
    dscale = np.zeros_like(params.scale)
    dinputs = np.zeros_like(x)
    iqp = spec.structure == "IQP"

    for layer in range(n_layers - 1, -1, -1):
        angles = _layer_angles(params, layer, x)
        if iqp:
            for q in range(n):
                kernels.apply_1q_shared(ket, q, _H)
                kernels.apply_1q_shared(bra, q, _H)
        else:
            entangle = kernels.apply_cx if spec.structure == "ENT_CX" else kernels.apply_cz
            for q in range(n - 2, -1, -1):
                entangle(ket, q, q + 1)
                entangle(bra, q, q + 1)
        for q in range(n - 1, -1, -1):
            u, du = gate_matrices(spec.gate_family, angles[:, q, :], derivs=True)
            udag = _dagger(u)
            if iqp:
                kernels.apply_controlled_1q(ket, q, (q + 1) % n, udag)
            else:
                kernels.apply_1q(ket, q, udag)
            for k in range(3):
                tmp = ket.copy()
                if iqp:
                    kernels.apply_controlled_1q(tmp, q, (q + 1) % n, du[k], zero_uncontrolled=True)
                else:
                    kernels.apply_1q(tmp, q, du[k])
                dangle = 2.0 * np.real(np.sum(np.conjugate(bra) * tmp, axis=1))
                dtheta[layer, q, k] += dangle.sum()
                dscale[layer, q, k] += float(dangle @ x[:, q])
                dinputs[:, q] += dangle * params.scale[layer, q, k]
            if iqp:
                kernels.apply_controlled_1q(bra, q, (q + 1) % n, udag)
            else:
                kernels.apply_1q(bra, q, udag)
    return dtheta, dscale, dinputs[0] if squeeze else dinputs
