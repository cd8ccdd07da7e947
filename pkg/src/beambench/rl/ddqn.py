"""Double deep Q-learning on the beam-management environment.

Each epoch interleaves 10 logical environment streams, pushing every
transition into a FIFO replay buffer and taking one Adam step per
environment step once the buffer can fill a minibatch.  The target
network syncs to the online network every `n_sync` gradient steps, and
each epoch ends with a greedy evaluation on fresh validation
environments whose mean relative return is what the estimator consumes.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Union

import numpy as np

from ..models import AdamState, adam_step
from ..seeding import draw_seed, run_streams
from .replay import ReplayBuffer
from .runlog import LogEntry, RunLog

DDQN_VARIANTS = ("paper", "conventional")


@dataclass
class DdqnConfig:
    epsilon_greedy: float = 0.1
    lr_classical: float = 0.0005
    lr_quantum: float = 0.001
    gamma: float = 0.95
    n_sync: int = 1000
    n_buffer: int = 1000
    n_batch: int = 64
    epochs: int = 100
    steps_per_epoch: int = 2000
    envs_per_epoch: int = 10
    validation_envs: int = 100
    variant: str = "paper"
    fixed_validation_set: bool = False

    def __post_init__(self):
        if not 0.0 <= self.epsilon_greedy <= 1.0:
            raise ValueError("epsilon_greedy must lie in [0, 1]")
        if self.variant not in DDQN_VARIANTS:
            raise ValueError(f"variant must be one of {DDQN_VARIANTS}")
        for name in ("lr_classical", "lr_quantum", "gamma", "n_sync", "n_buffer",
                     "n_batch", "epochs", "steps_per_epoch", "envs_per_epoch",
                     "validation_envs"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.steps_per_epoch % self.envs_per_epoch != 0:
            raise ValueError("steps_per_epoch must be a multiple of envs_per_epoch")


def epsilon_greedy(q_values, epsilon: float, rng: np.random.Generator) -> int:
    """Uniform action with probability epsilon, else first-index argmax."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must lie in [0, 1]")
    q = np.asarray(q_values, dtype=float)
    if epsilon > 0.0 and rng.random() < epsilon:
        return int(rng.integers(0, q.shape[0]))
    return int(np.argmax(q))


def ddqn_loss(batch, online, target, gamma: float, variant: str = "paper"):
    """TD loss and online-network gradients for one minibatch.

    The bootstrap target y = r + gamma * Q_online(s', argmax_b
    Q_target(s', b)) is treated as a constant (semi-gradient): only the
    Q(s, a) path is differentiated.  variant="conventional" swaps the
    two networks' roles (online selects, target evaluates).
    """
    states, actions, rewards, next_states, dones = batch
    if len(states) == 0:
        raise ValueError("empty batch")
    if variant not in DDQN_VARIANTS:
        raise ValueError(f"variant must be one of {DDQN_VARIANTS}")
    q, cache = online.forward(states)
    q_next_online, _ = online.forward(next_states)
    q_next_target, _ = target.forward(next_states)
    rows = np.arange(len(states))
    if variant == "paper":
        best = np.argmax(q_next_target, axis=1)
        bootstrap = q_next_online[rows, best]
    else:
        best = np.argmax(q_next_online, axis=1)
        bootstrap = q_next_target[rows, best]
    y = rewards + gamma * np.where(dones, 0.0, bootstrap)
    q_sa = q[rows, actions]
    err = q_sa - y
    loss = float(np.mean(err**2))
    upstream = np.zeros_like(q)
    upstream[rows, actions] = 2.0 * err / len(states)
    return loss, online.backward(cache, upstream)


def validate(model, env_factory, n_envs: int, seeds) -> float:
    """Mean relative return of the greedy policy over n_envs episodes."""
    envs = [env_factory() for _ in range(n_envs)]
    obs = np.stack([env.reset(seed) for env, seed in zip(envs, seeds)])
    horizon = envs[0].horizon
    for _ in range(horizon):
        q, _ = model.forward(obs)
        actions = np.argmax(q, axis=1)
        obs = np.stack([env.step(int(a))[0] for env, a in zip(envs, actions)])
    return float(np.mean([env.relative_return() for env in envs]))


def ddqn_train(
    env_factory: Callable,
    model_factory: Callable[[np.random.Generator], object],
    config: DdqnConfig,
    run_seed: int,
    run_id: str = "ddqn",
    log_path: Optional[Union[str, Path]] = None,
    checkpoint_cb: Optional[Callable[[int, object], None]] = None,
) -> tuple[RunLog, object]:
    """Full training run; returns the run log and the trained model.

    Determinism: all randomness derives from run_seed through fixed
    named streams, so identical (seed, config) reproduce the log bit for
    bit.  With log_path each epoch is appended as it finishes.
    """
    streams = run_streams(run_seed)
    model = model_factory(streams["weights"])
    target = model.clone()
    adam = AdamState.for_model(model)
    lr = {"classical": config.lr_classical, "quantum": config.lr_quantum}

    envs = [env_factory() for _ in range(config.envs_per_epoch)]
    obs = np.stack([env.reset(draw_seed(streams["train_env"])) for env in envs])
    buffer = ReplayBuffer(config.n_buffer)
    log = RunLog(run_id=run_id, seed=run_seed)
    fixed_seeds = None
    if config.fixed_validation_set:
        fixed_seeds = [draw_seed(streams["val_env"]) for _ in range(config.validation_envs)]

    total_steps = 0
    grad_steps = 0
    rounds = config.steps_per_epoch // config.envs_per_epoch
    for epoch in range(1, config.epochs + 1):
        for _ in range(rounds):
            q, _ = model.forward(obs)
            for i, env in enumerate(envs):
                action = epsilon_greedy(q[i], config.epsilon_greedy, streams["explore"])
                next_obs, reward, done = env.step(action)
                buffer.add(obs[i], action, reward, next_obs, done)
                obs[i] = (
                    env.reset(draw_seed(streams["train_env"])) if done else next_obs
                )
                total_steps += 1
                if len(buffer) >= config.n_batch:
                    batch = buffer.sample(streams["batch"], config.n_batch)
                    _, grads = ddqn_loss(batch, model, target, config.gamma, config.variant)
                    adam_step(adam, model.parameters(), grads, lr)
                    grad_steps += 1
                    if grad_steps % config.n_sync == 0:
                        target = model.clone()
        if fixed_seeds is not None:
            val_seeds = fixed_seeds
        else:
            val_seeds = [draw_seed(streams["val_env"]) for _ in range(config.validation_envs)]
        value = validate(model, env_factory, config.validation_envs, val_seeds)
        log.append(LogEntry(epoch=epoch, steps=total_steps, value=value), path=log_path)
        if checkpoint_cb is not None:
            checkpoint_cb(epoch, model)
    return log, model
