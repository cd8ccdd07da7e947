"""Compiled statevector gate kernels.

Drop-in twin of _kernels_np: batched little-endian complex128 states of
shape (batch, 2**n) mutated in place.  Index enumeration visits each
basis-state pair once, so every kernel is a single linear sweep.
"""

import numpy as np

cimport numpy as cnp

BACKEND = "cython"

ctypedef double complex cplx


def apply_1q(cplx[:, ::1] state, int target, cplx[:, :, ::1] u):
    cdef Py_ssize_t batch = state.shape[0]
    cdef Py_ssize_t dim = state.shape[1]
    cdef Py_ssize_t half = dim >> 1
    cdef Py_ssize_t tbit = (<Py_ssize_t>1) << target
    cdef Py_ssize_t mask_low = tbit - 1
    cdef Py_ssize_t b, idx, i0, i1
    cdef cplx a0, a1, u00, u01, u10, u11
    if tbit >= dim:
        raise ValueError(f"qubit {target} out of range for dim {dim}")
    for b in range(batch):
        u00 = u[b, 0, 0]
        u01 = u[b, 0, 1]
        u10 = u[b, 1, 0]
        u11 = u[b, 1, 1]
        for idx in range(half):
            i0 = ((idx & ~mask_low) << 1) | (idx & mask_low)
            i1 = i0 | tbit
            a0 = state[b, i0]
            a1 = state[b, i1]
            state[b, i0] = u00 * a0 + u01 * a1
            state[b, i1] = u10 * a0 + u11 * a1


def apply_1q_shared(cplx[:, ::1] state, int target, cplx[:, ::1] u):
    cdef Py_ssize_t batch = state.shape[0]
    cdef Py_ssize_t dim = state.shape[1]
    cdef Py_ssize_t half = dim >> 1
    cdef Py_ssize_t tbit = (<Py_ssize_t>1) << target
    cdef Py_ssize_t mask_low = tbit - 1
    cdef Py_ssize_t b, idx, i0, i1
    cdef cplx a0, a1
    cdef cplx u00 = u[0, 0]
    cdef cplx u01 = u[0, 1]
    cdef cplx u10 = u[1, 0]
    cdef cplx u11 = u[1, 1]
    if tbit >= dim:
        raise ValueError(f"qubit {target} out of range for dim {dim}")
    for b in range(batch):
        for idx in range(half):
            i0 = ((idx & ~mask_low) << 1) | (idx & mask_low)
            i1 = i0 | tbit
            a0 = state[b, i0]
            a1 = state[b, i1]
            state[b, i0] = u00 * a0 + u01 * a1
            state[b, i1] = u10 * a0 + u11 * a1


def apply_controlled_1q(cplx[:, ::1] state, int control, int target,
                        cplx[:, :, ::1] u, bint zero_uncontrolled=False):
    cdef Py_ssize_t batch = state.shape[0]
    cdef Py_ssize_t dim = state.shape[1]
    cdef Py_ssize_t half = dim >> 1
    cdef Py_ssize_t tbit = (<Py_ssize_t>1) << target
    cdef Py_ssize_t cbit = (<Py_ssize_t>1) << control
    cdef Py_ssize_t mask_low = tbit - 1
    cdef Py_ssize_t b, idx, i0, i1
    cdef cplx a0, a1, u00, u01, u10, u11
    if control == target:
        raise ValueError("control and target must differ")
    if tbit >= dim or cbit >= dim:
        raise ValueError("qubit out of range")
    for b in range(batch):
        u00 = u[b, 0, 0]
        u01 = u[b, 0, 1]
        u10 = u[b, 1, 0]
        u11 = u[b, 1, 1]
        for idx in range(half):
            i0 = ((idx & ~mask_low) << 1) | (idx & mask_low)
            i1 = i0 | tbit
            if i0 & cbit:
                a0 = state[b, i0]
                a1 = state[b, i1]
                state[b, i0] = u00 * a0 + u01 * a1
                state[b, i1] = u10 * a0 + u11 * a1
            elif zero_uncontrolled:
                state[b, i0] = 0.0
                state[b, i1] = 0.0


def apply_cx(cplx[:, ::1] state, int control, int target):
    cdef Py_ssize_t batch = state.shape[0]
    cdef Py_ssize_t dim = state.shape[1]
    cdef Py_ssize_t half = dim >> 1
    cdef Py_ssize_t tbit = (<Py_ssize_t>1) << target
    cdef Py_ssize_t cbit = (<Py_ssize_t>1) << control
    cdef Py_ssize_t mask_low = tbit - 1
    cdef Py_ssize_t b, idx, i0, i1
    cdef cplx tmp
    if control == target:
        raise ValueError("control and target must differ")
    if tbit >= dim or cbit >= dim:
        raise ValueError("qubit out of range")
    for b in range(batch):
        for idx in range(half):
            i0 = ((idx & ~mask_low) << 1) | (idx & mask_low)
            if i0 & cbit:
                i1 = i0 | tbit
                tmp = state[b, i0]
                state[b, i0] = state[b, i1]
                state[b, i1] = tmp


def apply_cz(cplx[:, ::1] state, int control, int target):
    cdef Py_ssize_t batch = state.shape[0]
    cdef Py_ssize_t dim = state.shape[1]
    cdef Py_ssize_t tbit = (<Py_ssize_t>1) << target
    cdef Py_ssize_t cbit = (<Py_ssize_t>1) << control
    cdef Py_ssize_t both = tbit | cbit
    cdef Py_ssize_t b, i
    if control == target:
        raise ValueError("control and target must differ")
    if tbit >= dim or cbit >= dim:
        raise ValueError("qubit out of range")
    for b in range(batch):
        for i in range(dim):
            if (i & both) == both:
                state[b, i] = -state[b, i]
