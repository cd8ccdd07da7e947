"""Proximal policy optimization with separate actor and critic nets.

Each epoch collects an on-policy rollout of `steps_per_epoch`
transitions from 10 interleaved environment streams, computes GAE
advantages per stream, then runs `n_repeat` shuffled minibatch passes
of the clipped-surrogate update.  Validation is the argmax policy on
fresh environments, logged per epoch like the DDQN loop.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Union

import numpy as np

from ..models import AdamState, adam_step
from ..seeding import draw_seed, run_streams
from .ddqn import validate as _greedy_validate
from .runlog import LogEntry, RunLog


@dataclass
class PpoConfig:
    clip_ratio: float = 0.1
    lr_classical: float = 0.001
    lr_quantum: float = 0.001
    gamma: float = 0.95
    gae_lambda: float = 0.95
    n_batch: int = 64
    n_repeat: int = 10
    epochs: int = 500
    steps_per_epoch: int = 2000
    envs_per_epoch: int = 10
    validation_envs: int = 100
    value_coef: float = 0.5
    fixed_validation_set: bool = False

    def __post_init__(self):
        if not 0.0 < self.clip_ratio < 1.0:
            raise ValueError("clip_ratio must lie in (0, 1)")
        if not 0.0 <= self.gae_lambda <= 1.0:
            raise ValueError("gae_lambda must lie in [0, 1]")
        for name in ("lr_classical", "lr_quantum", "gamma", "n_batch", "n_repeat",
                     "epochs", "steps_per_epoch", "envs_per_epoch", "validation_envs"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.steps_per_epoch % self.envs_per_epoch != 0:
            raise ValueError("steps_per_epoch must be a multiple of envs_per_epoch")


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def sample_categorical(probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One action per row of probs, drawn by inverse CDF."""
    cdf = np.cumsum(probs, axis=1)
    u = rng.random(size=(probs.shape[0], 1))
    return np.minimum((u >= cdf).sum(axis=1), probs.shape[1] - 1)


def gae_advantages(
    rewards: np.ndarray,
    values: np.ndarray,
    dones: np.ndarray,
    last_values: np.ndarray,
    gamma: float,
    lam: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Generalized advantage estimates per environment stream.

    All inputs are (T, n_envs); last_values is (n_envs,) bootstrapping
    unfinished episodes.  Returns (advantages, returns), both (T, n_envs).
    """
    T = rewards.shape[0]
    adv = np.zeros_like(rewards)
    running = np.zeros(rewards.shape[1])
    next_values = last_values
    for t in range(T - 1, -1, -1):
        not_done = 1.0 - dones[t]
        delta = rewards[t] + gamma * next_values * not_done - values[t]
        running = delta + gamma * lam * not_done * running
        adv[t] = running
        next_values = values[t]
    return adv, adv + values


def ppo_loss(batch: dict, actor, critic, clip_ratio: float, value_coef: float = 0.5):
    """Clipped-surrogate loss and gradients for one minibatch.

    batch holds states, actions, advantages, returns, logp_old.  Returns
    (total loss, actor gradients, critic gradients); total = surrogate
    + value_coef * value MSE, no entropy term.
    """
    states = batch["states"]
    actions = batch["actions"]
    adv = batch["advantages"]
    returns = batch["returns"]
    logp_old = batch["logp_old"]
    if not np.all(np.isfinite(adv)):
        raise ValueError("advantages must be finite")
    B = len(states)
    rows = np.arange(B)

    logits, actor_cache = actor.forward(states)
    logp = log_softmax(logits)
    probs = np.exp(logp)
    ratio = np.exp(logp[rows, actions] - logp_old)
    clipped = np.clip(ratio, 1.0 - clip_ratio, 1.0 + clip_ratio)
    surrogate = np.minimum(ratio * adv, clipped * adv)
    actor_loss = -float(np.mean(surrogate))
    # Gradient flows only where the unclipped branch attains the min;
    # in the interior both branches coincide, so ties keep the gradient.
    active = (ratio * adv <= clipped * adv).astype(float)
    dlogp_a = -(active * ratio * adv) / B  # d actor_loss / d logp(a|s)
    upstream = dlogp_a[:, None] * (-probs)
    upstream[rows, actions] += dlogp_a
    actor_grads = actor.backward(actor_cache, upstream)

    v, critic_cache = critic.forward(states)
    v = v[:, 0]
    err = v - returns
    critic_loss = float(np.mean(err**2))
    critic_grads = critic.backward(critic_cache, (value_coef * 2.0 * err / B)[:, None])

    return actor_loss + value_coef * critic_loss, actor_grads, critic_grads


def ppo_train(
    env_factory: Callable,
    actor_factory: Callable[[np.random.Generator], object],
    critic_factory: Callable[[np.random.Generator], object],
    config: PpoConfig,
    run_seed: int,
    run_id: str = "ppo",
    log_path: Optional[Union[str, Path]] = None,
    checkpoint_cb: Optional[Callable[[int, object], None]] = None,
) -> tuple[RunLog, object, object]:
    """Full PPO run; returns (run log, actor, critic)."""
    streams = run_streams(run_seed)
    actor = actor_factory(streams["weights"])
    critic = critic_factory(streams["weights"])
    actor_adam = AdamState.for_model(actor)
    critic_adam = AdamState.for_model(critic)
    lr = {"classical": config.lr_classical, "quantum": config.lr_quantum}

    n_envs = config.envs_per_epoch
    envs = [env_factory() for _ in range(n_envs)]
    obs = np.stack([env.reset(draw_seed(streams["train_env"])) for env in envs])
    log = RunLog(run_id=run_id, seed=run_seed)
    fixed_seeds = None
    if config.fixed_validation_set:
        fixed_seeds = [draw_seed(streams["val_env"]) for _ in range(config.validation_envs)]

    T = config.steps_per_epoch // n_envs
    total_steps = 0
    for epoch in range(1, config.epochs + 1):
        states = np.empty((T, n_envs, obs.shape[1]))
        actions = np.empty((T, n_envs), dtype=np.int64)
        rewards = np.empty((T, n_envs))
        dones = np.empty((T, n_envs))
        values = np.empty((T, n_envs))
        logps = np.empty((T, n_envs))
        for t in range(T):
            logits, _ = actor.forward(obs)
            v, _ = critic.forward(obs)
            logp_all = log_softmax(logits)
            acts = sample_categorical(np.exp(logp_all), streams["explore"])
            states[t] = obs
            actions[t] = acts
            values[t] = v[:, 0]
            logps[t] = logp_all[np.arange(n_envs), acts]
            for i, env in enumerate(envs):
                next_obs, reward, done = env.step(int(acts[i]))
                rewards[t, i] = reward
                dones[t, i] = float(done)
                obs[i] = env.reset(draw_seed(streams["train_env"])) if done else next_obs
            total_steps += n_envs
        last_v, _ = critic.forward(obs)
        adv, returns = gae_advantages(
            rewards, values, dones, last_v[:, 0], config.gamma, config.gae_lambda
        )

        flat = {
            "states": states.reshape(-1, obs.shape[1]),
            "actions": actions.reshape(-1),
            "advantages": adv.reshape(-1),
            "returns": returns.reshape(-1),
            "logp_old": logps.reshape(-1),
        }
        n = len(flat["actions"])
        for _ in range(config.n_repeat):
            order = streams["batch"].permutation(n)
            for start in range(0, n, config.n_batch):
                idx = order[start : start + config.n_batch]
                batch = {k: v[idx] for k, v in flat.items()}
                _, actor_grads, critic_grads = ppo_loss(
                    batch, actor, critic, config.clip_ratio, config.value_coef
                )
                adam_step(actor_adam, actor.parameters(), actor_grads, lr)
                adam_step(critic_adam, critic.parameters(), critic_grads, lr)

        if fixed_seeds is not None:
            val_seeds = fixed_seeds
        else:
            val_seeds = [draw_seed(streams["val_env"]) for _ in range(config.validation_envs)]
        value = _greedy_validate(actor, env_factory, config.validation_envs, val_seeds)
        log.append(LogEntry(epoch=epoch, steps=total_steps, value=value), path=log_path)
        if checkpoint_cb is not None:
            checkpoint_cb(epoch, actor)
    return log, actor, critic
