"""Experiment configuration: strict JSON schema, hashing, factories.

A config JSON has five blocks (environment, algorithm, model, sweep,
estimator) plus an experiment name and output directory.  Unknown keys
anywhere are rejected with their dotted path — sweep configs are copied
around too much for silent typos to be survivable.

The config hash covers exactly the blocks that change a run's dynamics
(environment, algorithm, model), so widening a sweep or moving the
output directory keeps existing run files valid and resumable.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .beam import AntennaConfig, sample_configuration
from .env import DEFAULT_HORIZON, DEFAULT_TRAJECTORY_DEGREE, OBS_DIM, BeamEnv
from .models import ACTIVATIONS, ClassicalModel, HybridModel
from .qsim import AnsatzSpec
from .rl import DdqnConfig, PpoConfig
from .stats import DEFAULT_N_RESAMPLES, EpsDeltaGrid

MAX_QUBITS = 20


class ConfigError(ValueError):
    """Schema violation, reported with the offending dotted field path."""


def _require(doc: dict, path: str, allowed: set, required: set = frozenset()) -> None:
    unknown = set(doc) - allowed
    if unknown:
        name = sorted(unknown)[0]
        raise ConfigError(f"unknown field {path}.{name}" if path else f"unknown field {name}")
    missing = required - set(doc)
    if missing:
        name = sorted(missing)[0]
        raise ConfigError(f"missing field {path}.{name}" if path else f"missing field {name}")


@dataclass(frozen=True)
class EnvironmentBlock:
    antennas: dict  # {"seed": int, "count": int} or inline antenna-config doc
    trajectory_degree: int = DEFAULT_TRAJECTORY_DEGREE
    horizon: int = DEFAULT_HORIZON

    def resolve_config(self) -> AntennaConfig:
        doc = self.antennas
        if "seed" in doc:
            extras = {
                k: doc[k]
                for k in ("domain_size", "min_distance", "n_senders", "n_elements", "cutoff_radius")
                if k in doc
            }
            return sample_configuration(
                int(doc["count"]), np.random.default_rng(int(doc["seed"])), **extras
            )
        return AntennaConfig.from_json(json.dumps(doc))


@dataclass(frozen=True)
class SweepBlock:
    n_seeds: int = 10
    base_seed: int = 0

    def seeds(self) -> range:
        return range(self.base_seed, self.base_seed + self.n_seeds)


@dataclass(frozen=True)
class EstimatorBlock:
    grid: EpsDeltaGrid = field(default_factory=EpsDeltaGrid.default)
    n_resamples: int = DEFAULT_N_RESAMPLES


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    output_dir: str
    environment: EnvironmentBlock
    algorithm_name: str  # "ddqn" | "ppo"
    algorithm: Union[DdqnConfig, PpoConfig]
    model: dict
    sweep: SweepBlock
    estimator: EstimatorBlock
    checkpoint_every: int = 0
    raw: dict = field(default_factory=dict, compare=False)

    def config_hash(self) -> str:
        core = {
            "environment": self.raw.get("environment", {}),
            "algorithm": self.raw.get("algorithm", {}),
            "model": self.raw.get("model", {}),
        }
        canon = json.dumps(core, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:12]

    def run_dir(self, output_root: Optional[Union[str, Path]] = None) -> Path:
        root = Path(output_root) if output_root is not None else Path(self.output_dir)
        return root / self.experiment / self.config_hash()

    def env_factory(self):
        antenna_config = self.environment.resolve_config()
        degree = self.environment.trajectory_degree
        horizon = self.environment.horizon
        return lambda: BeamEnv(antenna_config, trajectory_degree=degree, horizon=horizon)

    def n_actions(self) -> int:
        return self.environment.resolve_config().n_antennas

    def model_factory(self, dim_out: Optional[int] = None):
        """Factory rng -> model with OBS_DIM inputs and dim_out outputs."""
        doc = self.model
        out = dim_out if dim_out is not None else self.n_actions()
        if doc["type"] == "classical":
            width, depth = int(doc["width"]), int(doc["depth"])
            activation = doc.get("activation", "relu")
            return lambda rng: ClassicalModel(OBS_DIM, out, width, depth, rng, activation)
        spec = AnsatzSpec(
            structure=doc.get("structure", "ENT_CX"),
            gate_family=doc.get("gate_family", "ROT"),
            n_qubits=int(doc["qubits"]),
            n_layers=int(doc["layers"]),
        )
        activation = doc.get("activation", "none")
        return lambda rng: HybridModel(OBS_DIM, out, spec, rng, activation)


_ALGO_FIELDS_DDQN = {
    "name", "epsilon_greedy", "lr_classical", "lr_quantum", "gamma", "n_sync",
    "n_buffer", "n_batch", "epochs", "steps_per_epoch", "envs_per_epoch",
    "validation_envs", "variant", "fixed_validation_set",
}
_ALGO_FIELDS_PPO = {
    "name", "clip_ratio", "lr_classical", "lr_quantum", "gamma", "gae_lambda",
    "n_batch", "n_repeat", "epochs", "steps_per_epoch", "envs_per_epoch",
    "validation_envs", "value_coef", "fixed_validation_set",
}


def _parse_algorithm(doc: dict) -> tuple[str, Union[DdqnConfig, PpoConfig]]:
    _require(doc, "algorithm", _ALGO_FIELDS_DDQN | _ALGO_FIELDS_PPO, {"name"})
    name = doc["name"]
    kwargs = {k: v for k, v in doc.items() if k != "name"}
    try:
        if name == "ddqn":
            _require(doc, "algorithm", _ALGO_FIELDS_DDQN, {"name"})
            return name, DdqnConfig(**kwargs)
        if name == "ppo":
            _require(doc, "algorithm", _ALGO_FIELDS_PPO, {"name"})
            return name, PpoConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"algorithm: {exc}") from None
    raise ConfigError(f"algorithm.name must be 'ddqn' or 'ppo', got {name!r}")


def _parse_model(doc: dict) -> dict:
    if "type" not in doc:
        raise ConfigError("missing field model.type")
    if doc["type"] == "classical":
        _require(doc, "model", {"type", "width", "depth", "activation"}, {"type", "width", "depth"})
    elif doc["type"] == "hybrid":
        _require(
            doc, "model",
            {"type", "qubits", "layers", "structure", "gate_family", "activation"},
            {"type", "qubits", "layers"},
        )
        if int(doc["qubits"]) > MAX_QUBITS:
            raise ConfigError(f"model.qubits exceeds the {MAX_QUBITS}-qubit simulator limit")
    else:
        raise ConfigError(f"model.type must be 'classical' or 'hybrid', got {doc['type']!r}")
    if "activation" in doc and doc["activation"] not in ACTIVATIONS:
        raise ConfigError(f"model.activation must be one of {ACTIVATIONS}")
    return dict(doc)


def _parse_environment(doc: dict) -> EnvironmentBlock:
    _require(doc, "environment", {"antennas", "trajectory_degree", "horizon"}, {"antennas"})
    antennas = doc["antennas"]
    if not isinstance(antennas, dict):
        raise ConfigError("environment.antennas must be an object")
    if "seed" in antennas:
        _require(
            antennas, "environment.antennas",
            {"seed", "count", "domain_size", "min_distance", "n_senders", "n_elements",
             "cutoff_radius"},
            {"seed", "count"},
        )
    elif "antennas" not in antennas:
        raise ConfigError(
            "environment.antennas needs either {seed, count} or an inline antenna list"
        )
    return EnvironmentBlock(
        antennas=antennas,
        trajectory_degree=int(doc.get("trajectory_degree", DEFAULT_TRAJECTORY_DEGREE)),
        horizon=int(doc.get("horizon", DEFAULT_HORIZON)),
    )


def parse_config(doc: dict) -> ExperimentConfig:
    _require(
        doc, "",
        {"experiment", "output_dir", "environment", "algorithm", "model", "sweep",
         "estimator", "checkpoint_every"},
        {"environment", "algorithm", "model"},
    )
    sweep_doc = doc.get("sweep", {})
    _require(sweep_doc, "sweep", {"n_seeds", "base_seed"})
    est_doc = doc.get("estimator", {})
    _require(est_doc, "estimator", {"epsilons", "deltas", "n_resamples"})
    grid = EpsDeltaGrid.default()
    if "epsilons" in est_doc or "deltas" in est_doc:
        grid = EpsDeltaGrid(
            epsilons=tuple(est_doc.get("epsilons", grid.epsilons)),
            deltas=tuple(est_doc.get("deltas", grid.deltas)),
        )
    name, algo = _parse_algorithm(doc["algorithm"])
    return ExperimentConfig(
        experiment=str(doc.get("experiment", "experiment")),
        output_dir=str(doc.get("output_dir", "runs")),
        environment=_parse_environment(doc["environment"]),
        algorithm_name=name,
        algorithm=algo,
        model=_parse_model(doc["model"]),
        sweep=SweepBlock(
            n_seeds=int(sweep_doc.get("n_seeds", 10)),
            base_seed=int(sweep_doc.get("base_seed", 0)),
        ),
        estimator=EstimatorBlock(
            grid=grid, n_resamples=int(est_doc.get("n_resamples", DEFAULT_N_RESAMPLES))
        ),
        checkpoint_every=int(doc.get("checkpoint_every", 0)),
        raw=doc,
    )


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    return parse_config(doc)
