"""Function approximators and their shared optimizer.

Two families with one calling convention (forward -> (output, cache);
backward(cache, upstream) -> grads keyed like parameters()):

* ClassicalModel: plain MLP, He-initialized, hidden activations only.
* HybridModel: linear encoder -> variational circuit (per-qubit <Z>
  readout) -> linear head, with an optional activation between stages.

Parameters live in dicts keyed by name so the Adam step and the
checkpoint format stay model-agnostic.  Each name belongs to a group
("classical" or "quantum") because the two groups train with different
learning rates.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass

import numpy as np

from .qsim import AnsatzSpec, VqcParams, ansatz_gradients, run_ansatz, z_expectations

ACTIVATIONS = ("none", "relu", "tanh")


def _activate(name: str, x: np.ndarray) -> np.ndarray:
    if name == "none":
        return x
    if name == "relu":
        return np.maximum(x, 0.0)
    if name == "tanh":
        return np.tanh(x)
    raise ValueError(f"unknown activation {name!r}, pick one of {ACTIVATIONS}")


def _activate_grad(name: str, pre: np.ndarray, post: np.ndarray) -> np.ndarray:
    if name == "none":
        return np.ones_like(pre)
    if name == "relu":
        return (pre > 0.0).astype(float)
    if name == "tanh":
        return 1.0 - post**2
    raise ValueError(f"unknown activation {name!r}")


def param_count_classical(width: int, depth: int, dim_in: int = 3, dim_out: int = 3) -> int:
    """Weights + biases of an MLP with `depth` hidden layers of `width`."""
    return (
        dim_in * width + width
        + (depth - 1) * (width**2 + width)
        + width * dim_out + dim_out
    )


def param_count_quantum(n_qubits: int, n_layers: int, dim_in: int = 3, dim_out: int = 3) -> int:
    """Circuit angles and scales plus the two linear adapter layers."""
    return 6 * n_layers * n_qubits + (dim_in + 1) * n_qubits + (n_qubits + 1) * dim_out


def he_init(fan_in: int, fan_out: int, rng: np.random.Generator) -> np.ndarray:
    return rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, fan_out))


class ClassicalModel:
    """MLP with He-initialized weights, zero biases, linear output head."""

    group = "classical"

    def __init__(
        self,
        dim_in: int,
        dim_out: int,
        width: int,
        depth: int,
        rng: np.random.Generator,
        activation: str = "relu",
    ):
        if depth < 1 or width < 1:
            raise ValueError("width and depth must be positive")
        if activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        self.widths = (dim_in,) + (width,) * depth + (dim_out,)
        self.activation = activation
        self.weights = [
            he_init(self.widths[i], self.widths[i + 1], rng)
            for i in range(len(self.widths) - 1)
        ]
        self.biases = [np.zeros(w) for w in self.widths[1:]]

    @property
    def dim_in(self) -> int:
        return self.widths[0]

    @property
    def dim_out(self) -> int:
        return self.widths[-1]

    @property
    def n_parameters(self) -> int:
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)

    def parameters(self) -> dict[str, np.ndarray]:
        out: dict[str, np.ndarray] = {}
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            out[f"w{i}"] = w
            out[f"b{i}"] = b
        return out

    def param_groups(self) -> dict[str, str]:
        return {name: "classical" for name in self.parameters()}

    def forward(self, x) -> tuple[np.ndarray, dict]:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        pres, posts = [], [x]
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            pre = h @ w + b
            h = pre if i == last else _activate(self.activation, pre)
            pres.append(pre)
            posts.append(h)
        return h, {"pres": pres, "posts": posts}

    def backward(self, cache: dict, upstream) -> dict[str, np.ndarray]:
        grads: dict[str, np.ndarray] = {}
        delta = np.atleast_2d(np.asarray(upstream, dtype=float))
        last = len(self.weights) - 1
        for i in range(last, -1, -1):
            if i != last:
                delta = delta * _activate_grad(self.activation, cache["pres"][i], cache["posts"][i + 1])
            grads[f"w{i}"] = cache["posts"][i].T @ delta
            grads[f"b{i}"] = delta.sum(axis=0)
            if i > 0:
                delta = delta @ self.weights[i].T
        return grads

    def clone(self) -> "ClassicalModel":
        return copy.deepcopy(self)

    def to_doc(self) -> dict:
        return {
            "type": "classical",
            "widths": list(self.widths),
            "activation": self.activation,
            "params": {k: v.tolist() for k, v in self.parameters().items()},
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "ClassicalModel":
        widths = doc["widths"]
        model = cls.__new__(cls)
        model.widths = tuple(widths)
        model.activation = doc["activation"]
        model.weights = [
            np.asarray(doc["params"][f"w{i}"], dtype=float) for i in range(len(widths) - 1)
        ]
        model.biases = [
            np.asarray(doc["params"][f"b{i}"], dtype=float) for i in range(len(widths) - 1)
        ]
        for i in range(len(widths) - 1):
            if model.weights[i].shape != (widths[i], widths[i + 1]):
                raise ValueError(f"checkpoint weight w{i} has shape {model.weights[i].shape}")
        return model


class HybridModel:
    """Linear encoder -> data-re-uploading circuit -> linear head."""

    group = "quantum"

    def __init__(
        self,
        dim_in: int,
        dim_out: int,
        spec: AnsatzSpec,
        rng: np.random.Generator,
        activation: str = "none",
    ):
        if activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        self.spec = spec
        self.activation = activation
        self._dim_in = dim_in
        self._dim_out = dim_out
        self.w_pre = he_init(dim_in, spec.n_qubits, rng)
        self.b_pre = np.zeros(spec.n_qubits)
        self.vqc = VqcParams.init_random(spec, rng)
        self.w_post = he_init(spec.n_qubits, dim_out, rng)
        self.b_post = np.zeros(dim_out)

    @property
    def dim_in(self) -> int:
        return self._dim_in

    @property
    def dim_out(self) -> int:
        return self._dim_out

    @property
    def n_parameters(self) -> int:
        return (
            self.w_pre.size + self.b_pre.size
            + self.vqc.theta.size + self.vqc.scale.size
            + self.w_post.size + self.b_post.size
        )

    def parameters(self) -> dict[str, np.ndarray]:
        return {
            "w_pre": self.w_pre,
            "b_pre": self.b_pre,
            "theta": self.vqc.theta,
            "scale": self.vqc.scale,
            "w_post": self.w_post,
            "b_post": self.b_post,
        }

    def param_groups(self) -> dict[str, str]:
        # The linear adapters are classical parameters; only the circuit
        # angles and scales train at the quantum rate.
        return {
            "w_pre": "classical",
            "b_pre": "classical",
            "theta": "quantum",
            "scale": "quantum",
            "w_post": "classical",
            "b_post": "classical",
        }

    def forward(self, x) -> tuple[np.ndarray, dict]:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        pre_raw = x @ self.w_pre + self.b_pre
        pre_act = _activate(self.activation, pre_raw)
        state = run_ansatz(self.spec, pre_act, self.vqc)
        z_raw = z_expectations(state)
        z_act = _activate(self.activation, z_raw)
        out = z_act @ self.w_post + self.b_post
        cache = {
            "x": x,
            "pre_raw": pre_raw,
            "pre_act": pre_act,
            "state": state,
            "z_raw": z_raw,
            "z_act": z_act,
        }
        return out, cache

    def backward(self, cache: dict, upstream) -> dict[str, np.ndarray]:
        delta = np.atleast_2d(np.asarray(upstream, dtype=float))  # (B, out)
        grads: dict[str, np.ndarray] = {}
        grads["w_post"] = cache["z_act"].T @ delta
        grads["b_post"] = delta.sum(axis=0)
        dz_act = delta @ self.w_post.T
        dz_raw = dz_act * _activate_grad(self.activation, cache["z_raw"], cache["z_act"])
        dtheta, dscale, dpre_act = ansatz_gradients(
            self.spec, cache["pre_act"], self.vqc, dz_raw, final_state=cache["state"]
        )
        grads["theta"] = dtheta
        grads["scale"] = dscale
        dpre_raw = dpre_act * _activate_grad(self.activation, cache["pre_raw"], cache["pre_act"])
        grads["w_pre"] = cache["x"].T @ dpre_raw
        grads["b_pre"] = dpre_raw.sum(axis=0)
        return grads

    def clone(self) -> "HybridModel":
        return copy.deepcopy(self)

    def to_doc(self) -> dict:
        return {
            "type": "hybrid",
            "dim_in": self._dim_in,
            "dim_out": self._dim_out,
            "activation": self.activation,
            "spec": {
                "structure": self.spec.structure,
                "gate_family": self.spec.gate_family,
                "n_qubits": self.spec.n_qubits,
                "n_layers": self.spec.n_layers,
            },
            "params": {k: v.tolist() for k, v in self.parameters().items()},
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "HybridModel":
        spec = AnsatzSpec(**doc["spec"])
        model = cls.__new__(cls)
        model.spec = spec
        model.activation = doc["activation"]
        model._dim_in = doc["dim_in"]
        model._dim_out = doc["dim_out"]
        p = doc["params"]
        model.w_pre = np.asarray(p["w_pre"], dtype=float)
        model.b_pre = np.asarray(p["b_pre"], dtype=float)
        model.vqc = VqcParams(
            theta=np.asarray(p["theta"], dtype=float),
            scale=np.asarray(p["scale"], dtype=float),
        )
        model.w_post = np.asarray(p["w_post"], dtype=float)
        model.b_post = np.asarray(p["b_post"], dtype=float)
        if model.w_pre.shape != (doc["dim_in"], spec.n_qubits):
            raise ValueError(f"checkpoint w_pre has shape {model.w_pre.shape}")
        return model


def model_to_doc(model) -> dict:
    return model.to_doc()


def model_from_doc(doc: dict):
    if doc["type"] == "classical":
        return ClassicalModel.from_doc(doc)
    if doc["type"] == "hybrid":
        return HybridModel.from_doc(doc)
    raise ValueError(f"unknown model type {doc['type']!r}")


@dataclass
class AdamState:
    """Per-parameter Adam moments with group-resolved learning rates."""

    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    groups: dict[str, str]
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_model(cls, model) -> "AdamState":
        params = model.parameters()
        return cls(
            m={k: np.zeros_like(v) for k, v in params.items()},
            v={k: np.zeros_like(v) for k, v in params.items()},
            groups=model.param_groups(),
        )


def adam_step(state: AdamState, params: dict[str, np.ndarray], grads: dict[str, np.ndarray], lr) -> None:
    """One Adam update in place.  lr is a float or a {group: rate} map."""
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    bias1 = 1.0 - b1**state.step
    bias2 = 1.0 - b2**state.step
    for name, g in grads.items():
        rate = lr[state.groups[name]] if isinstance(lr, dict) else lr
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g**2
        params[name] -= rate * (m / bias1) / (np.sqrt(v / bias2) + state.eps)
