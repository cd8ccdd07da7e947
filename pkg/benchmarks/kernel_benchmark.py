"""Compare the compiled and numpy statevector backends.

Micro-benchmarks time the individual gate kernels by importing both
implementation modules side by side; the end-to-end row re-runs this
script in a subprocess with BEAMBENCH_PURE_PYTHON toggled, since the
ansatz layer binds its backend at import time.

Usage: python3 benchmarks/kernel_benchmark.py [--qubits 8 12 14] [--batch 8]
"""

import argparse
import os
import statistics
import subprocess
import sys
import time

import numpy as np

from beambench.qsim import _kernels_np

try:
    from beambench.qsim import _kernels_cy
except ImportError:
    _kernels_cy = None


def _random_state(n_qubits: int, batch: int, rng) -> np.ndarray:
    state = rng.standard_normal((batch, 1 << n_qubits)) * 1j
    state += rng.standard_normal((batch, 1 << n_qubits))
    state /= np.linalg.norm(state, axis=1, keepdims=True)
    return np.ascontiguousarray(state, dtype=np.complex128)


def _time(fn, repeats: int = 7) -> float:
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return statistics.median(samples)


def micro_rows(n_qubits: int, batch: int):
    rng = np.random.default_rng(0)
    u_shared = np.ascontiguousarray(
        np.linalg.qr(rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)))[0]
    )
    u_batch = np.ascontiguousarray(np.broadcast_to(u_shared, (batch, 2, 2)).copy())
    target, control = n_qubits // 2, 0

    cases = {
        "apply_1q": lambda impl, s: impl.apply_1q(s, target, u_batch),
        "apply_1q_shared": lambda impl, s: impl.apply_1q_shared(s, target, u_shared),
        "apply_controlled_1q": lambda impl, s: impl.apply_controlled_1q(
            s, control, target, u_batch, False
        ),
        "apply_cx": lambda impl, s: impl.apply_cx(s, control, target),
        "apply_cz": lambda impl, s: impl.apply_cz(s, control, target),
    }
    impls = [("numpy", _kernels_np)] + ([("cython", _kernels_cy)] if _kernels_cy else [])
    for name, call in cases.items():
        times = {}
        for label, impl in impls:
            state = _random_state(n_qubits, batch, np.random.default_rng(1))
            times[label] = _time(lambda: call(impl, state))
        yield name, times


def circuit_seconds() -> float:
    """Forward + gradient pass timing under the currently selected backend."""
    from beambench.qsim.ansatz import AnsatzSpec, VqcParams, ansatz_gradients, run_ansatz

    spec = AnsatzSpec(n_qubits=12, n_layers=4, structure="ENT_CX", gate_family="ROT")
    rng = np.random.default_rng(0)
    params = VqcParams.init_random(spec, rng)
    x = rng.random((16, 12))
    w = rng.standard_normal((16, 12))

    def work():
        state = run_ansatz(spec, x, params)
        ansatz_gradients(spec, x, params, w, final_state=state)

    work()  # warm up
    return _time(work, repeats=5)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--qubits", type=int, nargs="+", default=[8, 12, 14])
    parser.add_argument("--batch", type=int, default=8)
    parser.add_argument("--circuit", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args()

    if args.circuit:
        from beambench.qsim.kernels import BACKEND

        print(f"{BACKEND} {circuit_seconds():.6f}")
        return

    if _kernels_cy is None:
        print("compiled extension not available; timing numpy backend only\n")

    for n in args.qubits:
        print(f"n_qubits={n}, batch={args.batch} (median seconds per call)")
        for name, times in micro_rows(n, args.batch):
            parts = [f"{label} {t * 1e6:9.1f} us" for label, t in times.items()]
            if "cython" in times:
                parts.append(f"speedup {times['numpy'] / times['cython']:5.1f}x")
            print(f"  {name:<22} " + "   ".join(parts))
        print()

    print("end-to-end ansatz forward+gradient (12 qubits, 4 layers, batch 16)")
    for forced, label in ((None, "default"), ("1", "pure-python")):
        env = dict(os.environ)
        env.pop("BEAMBENCH_PURE_PYTHON", None)
        if forced:
            env["BEAMBENCH_PURE_PYTHON"] = forced
        out = subprocess.run(
            [sys.executable, os.path.abspath(__file__), "--circuit"],
            capture_output=True, text=True, env=env, check=True,
        ).stdout.split()
        print(f"  {label:<12} backend={out[0]:<7} {float(out[1]) * 1e3:8.2f} ms")


if __name__ == "__main__":
    main()
