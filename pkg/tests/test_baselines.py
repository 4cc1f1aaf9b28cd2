"""MPPI and CEM update-rule and episode tests."""

import numpy as np
import pytest

from steinmpc.baselines import BaselineConfig, cem_update, mppi_update, run_baseline_episode
from steinmpc.envs import PlanarNavEnv
from steinmpc.policy import RolloutBatch


def _batch(controls, costs):
    controls = np.asarray(controls, dtype=np.float64)
    n = controls.shape[0]
    states = np.zeros((n, controls.shape[1] + 1, 4))
    return RolloutBatch(controls=controls, states=states, costs=np.asarray(costs, dtype=np.float64))


class TestBaselineConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            BaselineConfig(kind="random-shooting")
        with pytest.raises(ValueError):
            BaselineConfig(kind="mppi", n_samples=0)


class TestMppiUpdate:
    def test_equal_costs_arithmetic_mean(self):
        rng = np.random.default_rng(0)
        controls = rng.standard_normal((6, 4, 2))
        out = mppi_update(np.zeros((4, 2)), _batch(controls, np.full(6, 2.0)), alpha=1.0)
        np.testing.assert_allclose(out, np.mean(controls, axis=0), rtol=1e-12)

    def test_single_sample(self):
        controls = np.ones((1, 3, 2))
        out = mppi_update(np.zeros((3, 2)), _batch(controls, [5.0]), alpha=0.1)
        assert np.array_equal(out, controls[0])

    def test_softmax_saturation(self):
        controls = np.stack([np.zeros((2, 2)), np.ones((2, 2))])
        out = mppi_update(np.zeros((2, 2)), _batch(controls, [0.0, 1e9]), alpha=1.0)
        assert np.array_equal(out, controls[0])


class TestCemUpdate:
    def test_full_elite_mean(self):
        rng = np.random.default_rng(1)
        controls = rng.standard_normal((5, 4, 2))
        out = cem_update(np.zeros((4, 2)), _batch(controls, np.arange(5.0)), 1.0)
        np.testing.assert_allclose(out, np.mean(controls, axis=0), rtol=1e-12)

    def test_single_best_sample(self):
        rng = np.random.default_rng(2)
        controls = rng.standard_normal((10, 3, 2))
        costs = np.array([5.0, 1.0, 3.0, 9.0, 2.0, 8.0, 4.0, 7.0, 6.0, 0.5])
        out = cem_update(np.zeros((3, 2)), _batch(controls, costs), 0.1)
        assert np.array_equal(out, controls[9])

    def test_tie_broken_by_index(self):
        controls = np.stack([np.full((2, 2), v) for v in (1.0, 2.0, 3.0, 4.0)])
        out = cem_update(np.zeros((2, 2)), _batch(controls, [7.0, 3.0, 3.0, 9.0]), 0.5)
        # ceil(0.5 * 4) = 2 elites; tied costs keep sample order (indices 1, 2).
        np.testing.assert_allclose(out, np.full((2, 2), 2.5), rtol=1e-15)


class TestBaselineEpisode:
    def _cfg(self, kind, **over):
        base = dict(
            kind=kind,
            horizon=8,
            n_samples=8,
            warm_start_iters=2,
            iters_per_timestep=1,
            episode_length=5,
        )
        base.update(over)
        return BaselineConfig(**base)

    @pytest.mark.parametrize("kind", ["mppi", "cem"])
    def test_identical_seeds_bit_identical(self, kind):
        env = PlanarNavEnv(obstacles=np.zeros((0, 3)))
        cfg = self._cfg(kind)
        assert run_baseline_episode(env, cfg, 3) == run_baseline_episode(env, cfg, 3)

    def test_noiseless_convex_task_converges_to_goal(self):
        # Zero dynamics noise, no obstacles: the final stretch of the episode
        # must close in on the goal monotonically.
        env = PlanarNavEnv(obstacles=np.zeros((0, 3)), sigma_dyn_sq=0.0)
        cfg = self._cfg("mppi", horizon=32, n_samples=32, warm_start_iters=10, episode_length=60)
        rec = run_baseline_episode(env, cfg, 0)
        dists = np.linalg.norm(rec.states[:, :2] - env.goal, axis=1)
        tail = dists[-11:]
        assert np.all(np.diff(tail) <= 1e-9)

    def test_record_shapes(self):
        env = PlanarNavEnv(obstacles=np.zeros((0, 3)))
        rec = run_baseline_episode(env, self._cfg("cem"), 1)
        assert rec.controls.shape == (5, 2)
        assert rec.states.shape == (6, 4)
