"""Training machinery: replay buffer, run logs, seed streams, the two
loss functions (checked against hand-computed values and finite
differences), and short end-to-end training runs."""

import numpy as np
import pytest

from beambench.beam import sample_configuration
from beambench.env import BeamEnv
from beambench.models import ClassicalModel
from beambench.rl.ddqn import (
    DdqnConfig,
    ddqn_loss,
    ddqn_train,
    epsilon_greedy,
    validate,
)
from beambench.rl.ppo import (
    PpoConfig,
    gae_advantages,
    log_softmax,
    ppo_loss,
    ppo_train,
    sample_categorical,
    softmax,
)
from beambench.rl.replay import ReplayBuffer
from beambench.rl.runlog import LogEntry, RunLog, run_filename
from beambench.seeding import STREAMS, draw_seed, run_streams, stream_rng


class _TableModel:
    """Q/logit table keyed by the first state coordinate; backward returns
    the upstream signal so loss tests can inspect the exact gradient feed."""

    def __init__(self, rows):
        self.rows = {k: np.asarray(v, dtype=float) for k, v in rows.items()}

    def forward(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.stack([self.rows[r[0]] for r in x])
        return out, {}

    def backward(self, cache, upstream):
        return {"upstream": np.array(upstream)}


def _env_factory():
    cfg = sample_configuration(2, np.random.default_rng(7))
    return lambda: BeamEnv(cfg, trajectory_degree=3, horizon=10)


class TestSeeding:
    def test_named_streams_exist(self):
        streams = run_streams(123)
        assert set(streams) == set(STREAMS)

    def test_streams_are_independent(self):
        a = stream_rng(0, "weights").random(5)
        b = stream_rng(0, "train_env").random(5)
        assert not np.allclose(a, b)

    def test_reproducible(self):
        assert stream_rng(9, "explore").random() == stream_rng(9, "explore").random()
        assert stream_rng(9, "explore").random() != stream_rng(10, "explore").random()

    def test_draw_seed_range(self):
        rng = stream_rng(0, "val_env")
        for _ in range(100):
            s = draw_seed(rng)
            assert 0 <= s < 2**63

    def test_unknown_stream_rejected(self):
        with pytest.raises(ValueError):
            stream_rng(0, "bogus")


class TestReplayBuffer:
    def test_fill_and_len(self):
        buf = ReplayBuffer(5)
        for i in range(3):
            buf.add(np.full(3, i), i, float(i), np.full(3, i + 1), False)
        assert len(buf) == 3

    def test_ring_overwrite(self):
        buf = ReplayBuffer(4)
        for i in range(7):
            buf.add(np.full(3, i), 0, float(i), np.zeros(3), False)
        assert len(buf) == 4
        rewards = buf.sample(np.random.default_rng(0), 256)[2]
        assert set(np.unique(rewards)) <= {3.0, 4.0, 5.0, 6.0}

    def test_sample_shapes_and_replacement(self):
        buf = ReplayBuffer(10)
        for i in range(4):
            buf.add(np.full(3, i), i % 2, float(i), np.full(3, -i), i == 3)
        s, a, r, ns, d = buf.sample(np.random.default_rng(1), 64)
        assert s.shape == (64, 3) and ns.shape == (64, 3)
        assert a.shape == (64,) and r.shape == (64,) and d.shape == (64,)
        assert d.dtype == bool
        # With replacement: 64 draws from 4 items must repeat.
        assert len(np.unique(r)) <= 4

    def test_transitions_survive_round_trip(self):
        buf = ReplayBuffer(8)
        buf.add(np.array([1.0, 2.0, 3.0]), 1, 0.5, np.array([4.0, 5.0, 6.0]), True)
        s, a, r, ns, d = buf.sample(np.random.default_rng(2), 3)
        np.testing.assert_array_equal(s, np.tile([1.0, 2.0, 3.0], (3, 1)))
        np.testing.assert_array_equal(ns, np.tile([4.0, 5.0, 6.0], (3, 1)))
        assert list(a) == [1, 1, 1] and list(r) == [0.5] * 3 and list(d) == [True] * 3

    def test_sampled_arrays_are_copies(self):
        buf = ReplayBuffer(4)
        buf.add(np.zeros(3), 0, 0.0, np.zeros(3), False)
        s, *_ = buf.sample(np.random.default_rng(3), 2)
        s[0, 0] = 99.0
        s2, *_ = buf.sample(np.random.default_rng(3), 2)
        assert s2[0, 0] == 0.0


class TestRunLog:
    def test_append_enforces_increasing_steps(self):
        log = RunLog(run_id="r", seed=0)
        log.append(LogEntry(0, 2000, 0.5))
        with pytest.raises(ValueError):
            log.append(LogEntry(1, 2000, 0.6))

    def test_value_bounds(self):
        with pytest.raises(ValueError):
            LogEntry(0, 100, 1.5)
        with pytest.raises(ValueError):
            LogEntry(0, 100, -0.1)

    def test_jsonl_round_trip(self, tmp_path):
        log = RunLog(run_id="exp:abc", seed=3)
        for t in range(4):
            log.append(LogEntry(t, 2000 * (t + 1), 0.1 * t))
        p = tmp_path / run_filename(3)
        log.write_jsonl(p)
        back = RunLog.read_jsonl(p)
        assert back.run_id == "exp:abc" and back.seed == 3
        assert back.values == log.values
        assert [e.steps for e in back.entries] == [2000, 4000, 6000, 8000]

    def test_incremental_append_equals_bulk_write(self, tmp_path):
        p = tmp_path / "run-0.jsonl"
        log = RunLog(run_id="x", seed=0)
        for t in range(3):
            log.append(LogEntry(t, 10 * (t + 1), 0.2), path=p)
        assert RunLog.read_jsonl(p).values == log.values

    def test_mixed_run_ids_rejected(self, tmp_path):
        p = tmp_path / "bad.jsonl"
        a = RunLog(run_id="a", seed=0)
        a.append(LogEntry(0, 10, 0.1), path=p)
        b = RunLog(run_id="b", seed=0)
        with open(p, "a") as fh:
            fh.write(b._line(LogEntry(1, 20, 0.2)) + "\n")
        with pytest.raises(ValueError):
            RunLog.read_jsonl(p)

    def test_empty_file_rejected(self, tmp_path):
        p = tmp_path / "empty.jsonl"
        p.write_text("")
        with pytest.raises(ValueError):
            RunLog.read_jsonl(p)


class TestEpsilonGreedy:
    def test_zero_epsilon_is_argmax(self):
        rng = np.random.default_rng(0)
        assert epsilon_greedy([0.1, 0.9, 0.3], 0.0, rng) == 1

    def test_ties_take_lowest_index(self):
        rng = np.random.default_rng(0)
        assert epsilon_greedy([0.5, 0.5, 0.1], 0.0, rng) == 0

    def test_full_exploration_is_uniform(self):
        rng = np.random.default_rng(1)
        n, draws = 4, 10**5
        counts = np.bincount(
            [epsilon_greedy([9.0, 0.0, 0.0, 0.0], 1.0, rng) for _ in range(draws)],
            minlength=n,
        )
        sigma = np.sqrt(draws * (1 / n) * (1 - 1 / n))
        assert np.all(np.abs(counts - draws / n) < 3 * sigma)

    def test_epsilon_validation(self):
        with pytest.raises(ValueError):
            epsilon_greedy([1.0], 1.5, np.random.default_rng(0))


class TestDdqnLoss:
    """Hand-computed single-transition targets pin the exact algebra."""

    S, SP = 0.0, 1.0  # state markers

    def _batch(self, reward=0.5, done=False, action=0):
        states = np.array([[self.S, 0.0, 0.0]])
        next_states = np.array([[self.SP, 0.0, 0.0]])
        return (
            states,
            np.array([action]),
            np.array([reward]),
            next_states,
            np.array([done]),
        )

    def _models(self):
        online = _TableModel({self.S: [0.5, -1.0], self.SP: [0.2, 0.8]})
        target = _TableModel({self.S: [0.0, 0.0], self.SP: [0.9, 0.1]})
        return online, target

    def test_hand_example(self):
        """Target net picks argmax (index 0), online evaluates it: y = 0.5 +
        0.95 * 0.2 = 0.69, loss = (0.5 - 0.69)^2 = 0.0361."""
        online, target = self._models()
        loss, grads = ddqn_loss(self._batch(), online, target, gamma=0.95)
        assert loss == pytest.approx(0.0361, abs=1e-12)
        upstream = grads["upstream"]
        np.testing.assert_allclose(upstream, [[2 * (0.5 - 0.69), 0.0]], atol=1e-12)

    def test_conventional_variant_swaps_roles(self):
        """Online picks argmax (index 1), target evaluates: y = 0.5 +
        0.95 * 0.1 = 0.595."""
        online, target = self._models()
        loss, _ = ddqn_loss(self._batch(), online, target, gamma=0.95, variant="conventional")
        assert loss == pytest.approx((0.5 - 0.595) ** 2, abs=1e-12)

    def test_done_transition_has_no_bootstrap(self):
        online, target = self._models()
        loss, _ = ddqn_loss(self._batch(done=True), online, target, gamma=0.95)
        assert loss == pytest.approx(0.0, abs=1e-15)  # Q(s, 0) = r = 0.5

    def test_zero_loss_when_q_matches_target(self):
        online, target = self._models()
        loss, _ = ddqn_loss(self._batch(reward=1.0, done=True, action=0),
                            _TableModel({self.S: [1.0, 0.0], self.SP: [0.0, 0.0]}),
                            target, gamma=0.0)
        assert loss == pytest.approx(0.0, abs=1e-15)

    def test_gradient_only_at_taken_action(self):
        online, target = self._models()
        _, grads = ddqn_loss(self._batch(action=1), online, target, gamma=0.95)
        upstream = grads["upstream"]
        assert upstream[0, 0] == 0.0
        assert upstream[0, 1] != 0.0

    def test_empty_batch_rejected(self):
        online, target = self._models()
        empty = (np.zeros((0, 3)), np.zeros(0, int), np.zeros(0), np.zeros((0, 3)), np.zeros(0, bool))
        with pytest.raises(ValueError):
            ddqn_loss(empty, online, target, gamma=0.95)

    def test_descends_on_real_model(self):
        """Optimizer steps on a fixed batch shrink the TD loss.  gamma = 0
        keeps the target constant so descent is guaranteed."""
        from beambench.models import AdamState, adam_step

        rng = np.random.default_rng(4)
        model = ClassicalModel(3, 2, 16, 2, rng, "relu")
        target = model.clone()
        batch = (
            rng.uniform(size=(32, 3)), rng.integers(0, 2, 32),
            rng.uniform(size=32), rng.uniform(size=(32, 3)),
            np.zeros(32, dtype=bool),
        )
        adam = AdamState.for_model(model)
        first, _ = ddqn_loss(batch, model, target, gamma=0.0)
        for _ in range(50):
            _, grads = ddqn_loss(batch, model, target, gamma=0.0)
            adam_step(adam, model.parameters(), grads, lr=0.01)
        last, _ = ddqn_loss(batch, model, target, gamma=0.0)
        assert last < first * 0.5


class TestSoftmaxSampling:
    def test_softmax_normalizes_and_is_stable(self):
        p = softmax(np.array([[1000.0, 1000.0, 999.0]]))
        assert np.isfinite(p).all()
        assert p.sum() == pytest.approx(1.0)
        np.testing.assert_allclose(np.exp(log_softmax(np.array([[1.0, 2.0, 3.0]]))),
                                   softmax(np.array([[1.0, 2.0, 3.0]])), atol=1e-12)

    def test_categorical_frequencies(self):
        rng = np.random.default_rng(5)
        probs = np.tile([0.2, 0.5, 0.3], (10**5, 1))
        draws = sample_categorical(probs, rng)
        freq = np.bincount(draws, minlength=3) / len(draws)
        np.testing.assert_allclose(freq, [0.2, 0.5, 0.3], atol=0.01)

    def test_categorical_is_deterministic(self):
        probs = np.tile([0.5, 0.5], (8, 1))
        a = sample_categorical(probs, np.random.default_rng(6))
        b = sample_categorical(probs, np.random.default_rng(6))
        np.testing.assert_array_equal(a, b)


class TestGae:
    @staticmethod
    def _naive(rewards, values, dones, last_values, gamma, lam):
        """Direct double-sum definition, one stream at a time."""
        T, E = rewards.shape
        nv = np.vstack([values, last_values[None, :]])
        adv = np.zeros_like(rewards)
        for e in range(E):
            for t in range(T):
                acc, discount = 0.0, 1.0
                for l in range(t, T):
                    delta = rewards[l, e] + gamma * nv[l + 1, e] * (1 - dones[l, e]) - values[l, e]
                    acc += discount * delta
                    if dones[l, e]:
                        break
                    discount *= gamma * lam
                adv[t, e] = acc
        return adv

    def test_matches_naive_definition(self):
        rng = np.random.default_rng(7)
        T, E = 12, 3
        rewards = rng.uniform(size=(T, E))
        values = rng.normal(size=(T, E))
        dones = (rng.random(size=(T, E)) < 0.2).astype(float)
        last = rng.normal(size=E)
        adv, rets = gae_advantages(rewards, values, dones, last, 0.95, 0.9)
        expect = self._naive(rewards, values, dones, last, 0.95, 0.9)
        np.testing.assert_allclose(adv, expect, atol=1e-12)
        np.testing.assert_allclose(rets, expect + values, atol=1e-12)

    def test_single_step(self):
        adv, _ = gae_advantages(
            np.array([[1.0]]), np.array([[0.3]]), np.array([[0.0]]),
            np.array([0.5]), 0.9, 0.8,
        )
        assert adv[0, 0] == pytest.approx(1.0 + 0.9 * 0.5 - 0.3)

    def test_done_blocks_bootstrap(self):
        adv, _ = gae_advantages(
            np.array([[1.0]]), np.array([[0.3]]), np.array([[1.0]]),
            np.array([99.0]), 0.9, 0.8,
        )
        assert adv[0, 0] == pytest.approx(1.0 - 0.3)


class TestPpoLoss:
    def _real_setup(self, clip_ratio, seed=8):
        rng = np.random.default_rng(seed)
        actor = ClassicalModel(3, 2, 8, 2, rng, "tanh")
        critic = ClassicalModel(3, 1, 8, 2, rng, "tanh")
        states = rng.uniform(size=(6, 3))
        actions = rng.integers(0, 2, 6)
        logits, _ = actor.forward(states)
        logp = log_softmax(logits)[np.arange(6), actions]
        batch = {
            "states": states,
            "actions": actions,
            "advantages": rng.normal(size=6),
            "returns": rng.uniform(size=6),
            "logp_old": logp + rng.uniform(-0.05, 0.05, size=6),
        }
        return actor, critic, batch

    def test_unit_ratio_recovers_mean_advantage(self):
        """With logp_old equal to the current policy the surrogate is
        exactly -mean(advantages)."""
        actor, critic, batch = self._real_setup(0.1)
        logits, _ = actor.forward(batch["states"])
        batch["logp_old"] = log_softmax(logits)[np.arange(6), batch["actions"]]
        total, _, _ = ppo_loss(batch, actor, critic, clip_ratio=0.1, value_coef=0.0)
        assert total == pytest.approx(-np.mean(batch["advantages"]), abs=1e-12)

    def test_clipped_positive_advantage_freezes_gradient(self):
        """ratio above 1 + clip with positive advantage: the clipped branch
        is active, so that sample contributes zero actor gradient."""
        actor = _TableModel({0.0: [2.0, 0.0]})
        critic = _TableModel({0.0: [0.0]})
        p = softmax(np.array([[2.0, 0.0]]))[0]
        batch = {
            "states": np.array([[0.0, 0.0, 0.0]]),
            "actions": np.array([0]),
            "advantages": np.array([1.0]),
            "returns": np.array([0.0]),
            # Old log-prob much lower -> ratio far above the clip ceiling.
            "logp_old": np.array([np.log(p[0]) - 1.0]),
        }
        _, actor_grads, _ = ppo_loss(batch, actor, critic, clip_ratio=0.1)
        np.testing.assert_array_equal(actor_grads["upstream"], 0.0)

    def test_clipped_negative_advantage_keeps_gradient(self):
        """Same inflated ratio but negative advantage: the unclipped branch
        attains the min, so the gradient stays live."""
        actor = _TableModel({0.0: [2.0, 0.0]})
        critic = _TableModel({0.0: [0.0]})
        p = softmax(np.array([[2.0, 0.0]]))[0]
        batch = {
            "states": np.array([[0.0, 0.0, 0.0]]),
            "actions": np.array([0]),
            "advantages": np.array([-1.0]),
            "returns": np.array([0.0]),
            "logp_old": np.array([np.log(p[0]) - 1.0]),
        }
        _, actor_grads, _ = ppo_loss(batch, actor, critic, clip_ratio=0.1)
        assert np.abs(actor_grads["upstream"]).max() > 0.0

    @pytest.mark.parametrize("clip_ratio", [0.1, 0.02])
    def test_actor_gradient_vs_fd(self, clip_ratio):
        """Central differences on the full loss; the second clip ratio
        pushes some samples onto the clipped branch."""
        actor, critic, batch = self._real_setup(clip_ratio)

        def loss():
            return ppo_loss(batch, actor, critic, clip_ratio)[0]

        _, actor_grads, critic_grads = ppo_loss(batch, actor, critic, clip_ratio)
        h = 1e-6
        rng = np.random.default_rng(9)
        for model, grads in ((actor, actor_grads), (critic, critic_grads)):
            for name, arr in model.parameters().items():
                flat = arr.reshape(-1)
                for idx in rng.choice(flat.size, size=min(3, flat.size), replace=False):
                    old = flat[idx]
                    flat[idx] = old + h
                    up = loss()
                    flat[idx] = old - h
                    dn = loss()
                    flat[idx] = old
                    assert grads[name].reshape(-1)[idx] == pytest.approx(
                        (up - dn) / (2 * h), abs=5e-7
                    ), name

    def test_nonfinite_advantages_rejected(self):
        actor, critic, batch = self._real_setup(0.1)
        batch["advantages"] = np.full(6, np.nan)
        with pytest.raises(ValueError):
            ppo_loss(batch, actor, critic, 0.1)


class TestTrainingLoops:
    def _ddqn_config(self):
        return DdqnConfig(
            epochs=2, steps_per_epoch=40, envs_per_epoch=4, n_buffer=64,
            n_batch=8, n_sync=20, validation_envs=3,
        )

    def _model_factory(self):
        return lambda rng: ClassicalModel(3, 2, 8, 1, rng, "relu")

    def test_ddqn_log_structure(self):
        log, model = ddqn_train(_env_factory(), self._model_factory(), self._ddqn_config(), run_seed=0)
        assert len(log.entries) == 2
        assert [e.steps for e in log.entries] == [40, 80]
        assert all(0.0 <= v <= 1.0 for v in log.values)
        assert isinstance(model, ClassicalModel)

    def test_ddqn_is_deterministic(self):
        a, ma = ddqn_train(_env_factory(), self._model_factory(), self._ddqn_config(), run_seed=5)
        b, mb = ddqn_train(_env_factory(), self._model_factory(), self._ddqn_config(), run_seed=5)
        assert a.values == b.values
        for k, v in ma.parameters().items():
            np.testing.assert_array_equal(v, mb.parameters()[k])

    def test_ddqn_seed_changes_run(self):
        a, _ = ddqn_train(_env_factory(), self._model_factory(), self._ddqn_config(), run_seed=1)
        b, _ = ddqn_train(_env_factory(), self._model_factory(), self._ddqn_config(), run_seed=2)
        assert a.values != b.values

    def test_ddqn_streaming_log_and_checkpoints(self, tmp_path):
        p = tmp_path / "run-0.jsonl"
        seen = []
        log, _ = ddqn_train(
            _env_factory(), self._model_factory(), self._ddqn_config(),
            run_seed=0, log_path=p, checkpoint_cb=lambda epoch, m: seen.append(epoch),
        )
        assert RunLog.read_jsonl(p).values == log.values
        assert seen == [1, 2]  # reported after each completed epoch

    def test_ddqn_config_validation(self):
        with pytest.raises(ValueError):
            DdqnConfig(epsilon_greedy=1.5)
        with pytest.raises(ValueError):
            DdqnConfig(steps_per_epoch=45, envs_per_epoch=10)
        with pytest.raises(ValueError):
            DdqnConfig(variant="triple")

    def test_validate_scores_greedy_policy(self):
        factory = _env_factory()
        model = ClassicalModel(3, 2, 8, 1, np.random.default_rng(0), "relu")
        v = validate(model, factory, n_envs=4, seeds=[10, 11, 12, 13])
        assert 0.0 <= v <= 1.0
        assert v == validate(model, factory, n_envs=4, seeds=[10, 11, 12, 13])

    def test_ppo_log_structure_and_determinism(self):
        cfg = PpoConfig(
            epochs=2, steps_per_epoch=40, envs_per_epoch=4, n_batch=16,
            n_repeat=2, validation_envs=3,
        )
        factory = _env_factory()
        actor_factory = lambda rng: ClassicalModel(3, 2, 8, 1, rng, "relu")
        critic_factory = lambda rng: ClassicalModel(3, 1, 8, 1, rng, "relu")
        a, actor, critic = ppo_train(factory, actor_factory, critic_factory, cfg, run_seed=0)
        assert len(a.entries) == 2
        assert [e.steps for e in a.entries] == [40, 80]
        assert all(0.0 <= v <= 1.0 for v in a.values)
        b, _, _ = ppo_train(factory, actor_factory, critic_factory, cfg, run_seed=0)
        assert a.values == b.values

    def test_ppo_config_validation(self):
        with pytest.raises(ValueError):
            PpoConfig(clip_ratio=0.0)
        with pytest.raises(ValueError):
            PpoConfig(clip_ratio=1.0)
