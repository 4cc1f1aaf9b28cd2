"""Trajectory-optimizer tests: smoothness prior, gradients, convergence."""

import numpy as np
import pytest

from steinmpc.envs import GaussianCostMap, PlannerEnv
from steinmpc.planning import (
    SmoothnessPrior,
    TrajOptConfig,
    cost_gradient,
    log_posterior,
    rollout_deterministic,
    smoothness_log_grad,
    svtrajopt_run,
)


def obstacle_free_env(**over):
    """Planner world whose obstacle field has zero weight everywhere."""
    cmap = GaussianCostMap(
        means=np.zeros((1, 2)), covs=np.array([np.eye(2)]), weights=np.array([0.0])
    )
    return PlannerEnv(cost_map=cmap, **over)


class TestSmoothnessPrior:
    def test_zero_sequence(self):
        prior = SmoothnessPrior(5, 2)
        assert prior.log_density_unnorm(np.zeros((5, 2))) == 0.0
        assert np.all(prior.log_grad(np.zeros((5, 2))) == 0.0)

    def test_constant_velocity_matches_dense_oracle(self):
        prior = SmoothnessPrior(6, 2, step_variance=1.5)
        theta = np.tile(np.array([1.0, -2.0]), (6, 1))
        dense = -(prior.dense_precision() @ theta.ravel()).reshape(6, 2)
        np.testing.assert_allclose(prior.log_grad(theta), dense, atol=1e-10)

    def test_random_sequence_matches_dense_oracle(self):
        rng = np.random.default_rng(0)
        prior = SmoothnessPrior(8, 2, step_variance=0.7)
        theta = rng.standard_normal((8, 2))
        dense = -(prior.dense_precision() @ theta.ravel()).reshape(8, 2)
        np.testing.assert_allclose(prior.log_grad(theta), dense, atol=1e-10)
        quad = -0.5 * theta.ravel() @ prior.dense_precision() @ theta.ravel()
        assert prior.log_density_unnorm(theta) == pytest.approx(quad, rel=1e-10)

    def test_sample_covariance_matches_analytic(self):
        prior = SmoothnessPrior(4, 2, step_variance=2.0)
        rng = np.random.default_rng(1)
        draws = prior.sample(100_000, rng).reshape(100_000, -1)
        emp = np.cov(draws, rowvar=False)
        dense = prior.dense_cov()
        diag = np.diag(dense)
        np.testing.assert_allclose(np.diag(emp), diag, rtol=0.05)

    def test_alias(self):
        prior = SmoothnessPrior(3, 2)
        theta = np.ones((3, 2))
        assert np.array_equal(smoothness_log_grad(prior, theta), prior.log_grad(theta))

    def test_validation(self):
        with pytest.raises(ValueError):
            SmoothnessPrior(3, 2, step_variance=0.0)
        with pytest.raises(ValueError):
            SmoothnessPrior(3, 2).log_grad(np.zeros((4, 2)))


class TestCostGradient:
    def test_zero_at_optimum(self):
        env = obstacle_free_env(start=np.array([3.0, 3.0]))
        theta = np.zeros((env.horizon, 2))  # parked at the goal
        np.testing.assert_allclose(cost_gradient(theta, env.start, env), 0.0, atol=1e-12)

    def test_single_step_chain_rule(self):
        env = obstacle_free_env(horizon=1, start=np.zeros(2), goal=np.array([1.0, 0.0]))
        g = cost_gradient(np.zeros((1, 2)), env.start, env)
        # d/dtheta 1000 (dt*theta - 1)^2 = 2 * 1000 * (0 - 1) * 0.1 = -200.
        assert g[0, 0] == pytest.approx(-200.0, rel=1e-12)
        assert g[0, 1] == pytest.approx(0.0, abs=1e-12)

    def test_matches_finite_differences(self):
        env = PlannerEnv(horizon=6)
        rng = np.random.default_rng(2)
        theta = rng.standard_normal((6, 2))
        g = cost_gradient(theta, env.start, env)

        def total(th):
            return env.total_cost(rollout_deterministic(th, env.start, env))

        eps = 1e-5
        for t in range(6):
            for d in range(2):
                th = theta.copy()
                th[t, d] += eps
                hi = total(th)
                th[t, d] -= 2 * eps
                lo = total(th)
                fd = (hi - lo) / (2 * eps)
                assert abs(g[t, d] - fd) <= 1e-4 * max(1.0, abs(fd))


class TestTrajOptConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            TrajOptConfig(particles=0)
        with pytest.raises(ValueError):
            TrajOptConfig(step_size=0.0)
        with pytest.raises(ValueError):
            TrajOptConfig(refine_iters=-1)


class TestSvTrajOpt:
    def test_single_particle_is_gradient_ascent(self):
        env = obstacle_free_env()
        cfg = TrajOptConfig(particles=1, max_iters=20, refine_iters=0, tol=1e-12)
        res = svtrajopt_run(env, env.start, cfg, seed=0)

        from steinmpc import rngs
        from steinmpc.planning import _log_post_grad

        prior = SmoothnessPrior(env.horizon, 2, cfg.prior_step_variance)
        theta = prior.sample(1, rngs.substream(0, rngs.INIT))[0]
        for _ in range(20):
            theta = theta + cfg.step_size * _log_post_grad(
                theta, env.start, env, prior, cfg.alpha
            )
        np.testing.assert_allclose(res.particles[0], theta, atol=1e-12)

    def test_obstacle_free_terminal_convergence(self):
        env = obstacle_free_env()
        cfg = TrajOptConfig(particles=4, max_iters=500, refine_iters=20)
        res = svtrajopt_run(env, env.start, cfg, seed=0)
        states = rollout_deterministic(res.particles[res.best], env.start, env)
        assert np.linalg.norm(states[-1] - env.goal) < 0.05

    def test_refinement_monotone_and_best_is_argmax(self):
        env = PlannerEnv()
        cfg = TrajOptConfig(particles=4, max_iters=50, refine_iters=10)
        res = svtrajopt_run(env, env.start, cfg, seed=1)
        assert np.all(np.diff(res.refine_log_post, axis=1) >= -1e-9)
        assert res.best == int(np.argmax(res.log_post))
        for i in range(cfg.particles):
            lp = log_posterior(
                res.particles[i],
                env.start,
                env,
                SmoothnessPrior(env.horizon, 2, cfg.prior_step_variance),
                cfg.alpha,
            )
            assert res.log_post[i] == pytest.approx(lp, rel=1e-12)

    def test_snapshots_recorded(self):
        env = obstacle_free_env()
        cfg = TrajOptConfig(particles=2, max_iters=30, refine_iters=0, tol=1e-12)
        res = svtrajopt_run(env, env.start, cfg, seed=2, snapshot_iters=(0, 10))
        iters = [it for it, _ in res.snapshots]
        assert iters == [0, 10, res.iterations]

    def test_deterministic(self):
        env = PlannerEnv()
        cfg = TrajOptConfig(particles=3, max_iters=20, refine_iters=5)
        a = svtrajopt_run(env, env.start, cfg, seed=4)
        b = svtrajopt_run(env, env.start, cfg, seed=4)
        assert np.array_equal(a.particles, b.particles)
        assert a.best == b.best
