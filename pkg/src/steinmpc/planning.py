"""Batch trajectory optimization over open-loop velocity sequences.

The posterior combines a differentiable path cost (through the deterministic
single-integrator dynamics) with a zero-acceleration Gaussian smoothness
prior whose precision is block tri-diagonal. Particles are transported with
the kernelized update, then optionally polished with per-particle gradient
ascent, and the best particle is selected by exact log posterior.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import rngs
from .svgd import KernelSpec, svgd_direction, svgd_step


@dataclass
class SmoothnessPrior:
    """N(0, S) over (T, d) control sequences, S = L D L^T.

    L is the block lower-triangular all-ones matrix (controls are cumulative
    sums of white steps), so the precision is block tri-diagonal and all
    products are computed with first differences, never a dense inverse.
    """

    horizon: int
    dim: int
    step_variance: float = 1.0

    def __post_init__(self):
        if not self.step_variance > 0:
            raise ValueError("step variance must be positive")

    def sample(self, n: int, rng) -> np.ndarray:
        """n draws (n, T, d): cumulative sums of N(0, step_variance) steps."""
        w = np.sqrt(self.step_variance) * rng.standard_normal((n, self.horizon, self.dim))
        return np.cumsum(w, axis=1)

    def _diffs(self, theta: np.ndarray) -> np.ndarray:
        d = np.empty_like(theta)
        d[0] = theta[0]
        d[1:] = theta[1:] - theta[:-1]
        return d

    def log_density_unnorm(self, theta: np.ndarray) -> float:
        """-0.5 * theta^T S^-1 theta, up to the normalization constant."""
        v = self._diffs(np.asarray(theta, dtype=np.float64))
        return float(-0.5 * np.sum(v * v) / self.step_variance)

    def log_grad(self, theta: np.ndarray) -> np.ndarray:
        """-S^-1 theta via the tri-diagonal precision (two difference passes)."""
        theta = np.asarray(theta, dtype=np.float64)
        if theta.shape != (self.horizon, self.dim):
            raise ValueError("theta shape does not match the prior")
        w = self._diffs(theta) / self.step_variance
        out = np.empty_like(w)
        out[:-1] = w[:-1] - w[1:]
        out[-1] = w[-1]
        return -out

    def dense_cov(self) -> np.ndarray:
        """Dense S = L D L^T; test oracle only."""
        T, d = self.horizon, self.dim
        L = np.kron(np.tril(np.ones((T, T))), np.eye(d))
        D = self.step_variance * np.eye(T * d)
        return L @ D @ L.T

    def dense_precision(self) -> np.ndarray:
        return np.linalg.inv(self.dense_cov())


@dataclass
class TrajOptConfig:
    particles: int = 16
    step_size: float = 1e-4
    max_iters: int = 500
    tol: float = 1e-4  # max-norm of the particle displacement
    refine_iters: int = 50
    refine_step: float = 1e-4
    alpha: float = 1.0  # cost temperature in the likelihood
    kernel: KernelSpec = field(default_factory=lambda: KernelSpec(structure="full"))
    prior_step_variance: float = 1.0

    def __post_init__(self):
        for name in ("particles", "max_iters"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        for name in ("step_size", "tol", "refine_step", "alpha", "prior_step_variance"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.refine_iters < 0:
            raise ValueError("refine_iters must be >= 0")


def rollout_deterministic(theta: np.ndarray, x0, env) -> np.ndarray:
    """State trajectory (T+1, 2) of the single integrator under theta."""
    return env.rollout(np.asarray(theta, dtype=np.float64), x0=x0)


def cost_gradient(theta: np.ndarray, x0, env) -> np.ndarray:
    """d C / d theta by reverse accumulation through the linear rollout.

    C = sum_{k=1..T} c(x_k) + c_term(x_T); each x_k depends on theta_j for
    j < k with Jacobian dt * I.
    """
    theta = np.asarray(theta, dtype=np.float64)
    states = rollout_deterministic(theta, x0, env)
    T = theta.shape[0]
    grad = np.empty_like(theta)
    adj = env.plan_terminal_grad(states[T]) + env.plan_cost_grad(states[T])
    for k in range(T - 1, -1, -1):
        grad[k] = env.dt * adj
        if k >= 1:
            adj = adj + env.plan_cost_grad(states[k])
    return grad


def smoothness_log_grad(prior: SmoothnessPrior, theta: np.ndarray) -> np.ndarray:
    return prior.log_grad(theta)


def log_posterior(theta: np.ndarray, x0, env, prior: SmoothnessPrior, alpha: float) -> float:
    states = rollout_deterministic(theta, x0, env)
    return -alpha * env.total_cost(states) + prior.log_density_unnorm(theta)


def _log_post_grad(theta, x0, env, prior, alpha):
    return -alpha * cost_gradient(theta, x0, env) + prior.log_grad(theta)


@dataclass
class TrajOptResult:
    particles: np.ndarray  # (m, T, d) final control sequences
    best: int
    log_post: np.ndarray  # (m,) exact log posterior per particle
    iterations: int
    snapshots: list  # (iteration, particles copy) pairs
    refine_log_post: np.ndarray  # (m, refine_iters + 1) log posterior trace


def svtrajopt_run(env, x0, cfg: TrajOptConfig, seed: int, snapshot_iters=(0, 10, 100)) -> TrajOptResult:
    """Kernelized transport until convergence, optional refinement, MAP pick."""
    x0 = np.asarray(x0, dtype=np.float64)
    prior = SmoothnessPrior(env.horizon, env.control_dim, cfg.prior_step_variance)
    rng = rngs.substream(seed, rngs.INIT)
    particles = prior.sample(cfg.particles, rng)
    m = cfg.particles

    snapshots = []
    if 0 in snapshot_iters:
        snapshots.append((0, particles.copy()))

    iters_done = cfg.max_iters
    for it in range(1, cfg.max_iters + 1):
        grads = np.empty_like(particles)
        for i in range(m):
            g = _log_post_grad(particles[i], x0, env, prior, cfg.alpha)
            if not np.all(np.isfinite(g)):
                raise RuntimeError(f"non-finite gradient for particle {i} at iteration {it}")
            grads[i] = g
        directions = svgd_direction(particles, grads, cfg.kernel)
        particles = svgd_step(particles, directions, cfg.step_size)
        if not np.all(np.isfinite(particles)):
            raise RuntimeError(f"divergence at iteration {it}")
        if it in snapshot_iters:
            snapshots.append((it, particles.copy()))
        if np.max(np.abs(cfg.step_size * directions)) < cfg.tol:
            iters_done = it
            break

    # Per-particle polish without kernelization; step halving keeps the
    # log posterior monotone even when the configured step is too large.
    refine_log_post = np.empty((m, cfg.refine_iters + 1))
    for i in range(m):
        theta = particles[i]
        lp = log_posterior(theta, x0, env, prior, cfg.alpha)
        refine_log_post[i, 0] = lp
        for r in range(cfg.refine_iters):
            g = _log_post_grad(theta, x0, env, prior, cfg.alpha)
            step = cfg.refine_step
            for _ in range(10):
                cand = theta + step * g
                lp_cand = log_posterior(cand, x0, env, prior, cfg.alpha)
                if lp_cand >= lp:
                    theta, lp = cand, lp_cand
                    break
                step *= 0.5
            refine_log_post[i, r + 1] = lp
        particles[i] = theta

    log_post = np.array(
        [log_posterior(particles[i], x0, env, prior, cfg.alpha) for i in range(m)]
    )
    best = int(np.argmax(log_post))
    snapshots.append((iters_done, particles.copy()))
    return TrajOptResult(
        particles=particles,
        best=best,
        log_post=log_post,
        iterations=iters_done,
        snapshots=snapshots,
        refine_log_post=refine_log_post,
    )
