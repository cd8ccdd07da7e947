"""Episode mechanics: observation layout, reward = best steered intensity,
table-lookup consistency, and relative-return accounting."""

import numpy as np
import pytest

from beambench.beam import best_codebook, intensity_grid, sample_configuration
from beambench.env import (
    OBS_DIM,
    BeamEnv,
    EpisodeRecord,
    normalize_index,
    relative_return,
)
from beambench.trajectory import position, sample_trajectory


@pytest.fixture(scope="module")
def config():
    return sample_configuration(2, np.random.default_rng(7))


class TestNormalization:
    def test_endpoints(self):
        assert normalize_index(0, 9) == 0.0
        assert normalize_index(8, 9) == 1.0
        assert normalize_index(4, 9) == 0.5

    def test_single_entry_maps_to_zero(self):
        assert normalize_index(0, 1) == 0.0


class TestEpisode:
    def test_reset_observation(self, config):
        """Initial obs: antenna 0, that antenna's best element, its value."""
        env = BeamEnv(config, horizon=50)
        obs = env.reset(seed=0)
        assert obs.shape == (OBS_DIM,)
        assert obs[0] == 0.0
        start = position(env._trajectory, 0.0)
        idx, val = best_codebook(config.antennas[0], start, config.codebook)
        assert obs[1] == pytest.approx(normalize_index(idx, config.codebook.n_elements))
        assert obs[2] == pytest.approx(val)

    def test_rewards_are_best_steered_intensity(self, config):
        """Each reward equals the chosen antenna's codebook sweep maximum at
        the receiver's new position, recomputed here from raw physics."""
        env = BeamEnv(config, horizon=20)
        env.reset(seed=1)
        traj = env._trajectory
        rng = np.random.default_rng(0)
        for k in range(1, 21):
            action = int(rng.integers(env.n_actions))
            obs, reward, done = env.step(action)
            pt = position(traj, k / 20)
            table = intensity_grid(config, pt[None, :])[0]
            assert reward == pytest.approx(table[action].max(), rel=1e-12)
            assert obs[0] == pytest.approx(normalize_index(action, env.n_actions))
            assert 0.0 <= reward <= 1.0
        assert done

    def test_observations_stay_in_unit_cube(self, config):
        env = BeamEnv(config, horizon=30)
        obs = env.reset(seed=3)
        rng = np.random.default_rng(5)
        while True:
            assert obs.min() >= 0.0 and obs.max() <= 1.0
            obs, _, done = env.step(int(rng.integers(env.n_actions)))
            if done:
                break

    def test_horizon_and_done_flag(self, config):
        env = BeamEnv(config, horizon=5)
        env.reset(seed=2)
        flags = [env.step(0)[2] for _ in range(5)]
        assert flags == [False, False, False, False, True]
        with pytest.raises(RuntimeError):
            env.step(0)

    def test_step_before_reset_rejected(self, config):
        with pytest.raises(RuntimeError):
            BeamEnv(config).step(0)

    def test_action_validation(self, config):
        env = BeamEnv(config, horizon=5)
        env.reset(seed=0)
        with pytest.raises(ValueError):
            env.step(env.n_actions)
        with pytest.raises(ValueError):
            env.step(-1)

    def test_deterministic_given_seed(self, config):
        a = BeamEnv(config, horizon=10)
        b = BeamEnv(config, horizon=10)
        np.testing.assert_array_equal(a.reset(seed=42), b.reset(seed=42))
        for _ in range(10):
            oa, ra, da = a.step(1)
            ob, rb, db = b.step(1)
            np.testing.assert_array_equal(oa, ob)
            assert ra == rb and da == db

    def test_shared_trajectory_reset(self, config):
        """reset_with_trajectory pins the episode to a caller-chosen path."""
        traj = sample_trajectory(3, np.random.default_rng(9), config.domain_size)
        a = BeamEnv(config, horizon=10)
        b = BeamEnv(config, horizon=10)
        np.testing.assert_array_equal(
            a.reset_with_trajectory(traj), b.reset_with_trajectory(traj)
        )


class TestRelativeReturn:
    def test_optimal_policy_scores_one(self, config):
        """Always picking the globally best antenna gives ratio 1."""
        env = BeamEnv(config, horizon=25)
        env.reset(seed=11)
        done = False
        k = 0
        while not done:
            k += 1
            pt = position(env._trajectory, k / 25)
            table = intensity_grid(config, pt[None, :])[0]
            best_antenna = int(np.argmax(table.max(axis=1)))
            _, _, done = env.step(best_antenna)
        assert env.relative_return() == pytest.approx(1.0)

    def test_suboptimal_policy_scores_below_one(self, config):
        env = BeamEnv(config, horizon=25)
        env.reset(seed=11)
        for _ in range(25):
            env.step(0)
        assert env.relative_return() <= 1.0

    def test_bounds_on_random_policy(self, config):
        env = BeamEnv(config, horizon=40)
        rng = np.random.default_rng(1)
        for seed in range(5):
            env.reset(seed=seed)
            done = False
            while not done:
                _, _, done = env.step(int(rng.integers(env.n_actions)))
            assert 0.0 <= env.relative_return() <= 1.0

    def test_empty_record_rejected(self):
        with pytest.raises(ValueError):
            relative_return(EpisodeRecord())

    def test_accounting_matches_record(self, config):
        env = BeamEnv(config, horizon=8)
        env.reset(seed=4)
        for _ in range(8):
            env.step(1)
        expect = np.sum(env.record.rewards) / np.sum(env.record.optima)
        assert env.relative_return() == pytest.approx(expect)


class TestSnapshots:
    def test_save_restore_replays_identically(self, config):
        env = BeamEnv(config, horizon=12)
        env.reset(seed=6)
        for _ in range(4):
            env.step(0)
        snap = env.get_state()
        tail_a = [env.step(1) for _ in range(8)]
        env.set_state(snap)
        tail_b = [env.step(1) for _ in range(8)]
        for (oa, ra, da), (ob, rb, db) in zip(tail_a, tail_b):
            np.testing.assert_array_equal(oa, ob)
            assert ra == rb and da == db

    def test_restore_requires_reset(self, config):
        env = BeamEnv(config)
        with pytest.raises(RuntimeError):
            env.set_state({"step_index": 0, "obs": np.zeros(3), "rewards": [], "optima": []})
