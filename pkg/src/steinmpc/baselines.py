"""MPPI and constant-variance CEM controllers.

Both reuse the rollout, shift, clamping and seeding machinery of the particle
controller so that benchmark comparisons isolate the update rule.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rngs
from .controller import EpisodeRecord
from .policy import RolloutBatch, elite_indices


@dataclass
class BaselineConfig:
    kind: str  # "mppi" | "cem"
    horizon: int = 64
    n_samples: int = 32  # total control samples (matches m*N of the particle controller)
    sigma_sq: float = 100.0
    alpha: float = 1e-3  # MPPI inverse temperature
    elite_fraction: float = 0.1  # CEM elite quantile
    warm_start_iters: int = 30
    iters_per_timestep: int = 1
    episode_length: int = 300

    def __post_init__(self):
        if self.kind not in ("mppi", "cem"):
            raise ValueError(f"unknown baseline kind: {self.kind!r}")
        for name in ("horizon", "n_samples", "warm_start_iters", "iters_per_timestep", "episode_length"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")


def mppi_update(theta: np.ndarray, batch: RolloutBatch, alpha: float) -> np.ndarray:
    """Exponentially-weighted mean of the sampled controls."""
    if batch.n < 1:
        raise ValueError("empty batch")
    shifted = -alpha * (batch.costs - np.min(batch.costs))
    w = np.exp(shifted)
    w /= np.sum(w)
    return np.einsum("s,shd->hd", w, batch.controls)


def cem_update(theta: np.ndarray, batch: RolloutBatch, elite_fraction: float) -> np.ndarray:
    """Mean of the elite (lowest-cost) sampled controls; variance held fixed."""
    if batch.n < 1:
        raise ValueError("empty batch")
    idx = elite_indices(batch.costs, elite_fraction)
    return np.mean(batch.controls[idx], axis=0)


def _sample_batch(theta, sigma_sq, env, state, n, rng) -> RolloutBatch:
    sig = np.sqrt(sigma_sq)
    controls = theta + sig * rng.standard_normal((n,) + theta.shape)
    clamped = env.clamp(controls)
    noise = rng.standard_normal(clamped.shape)
    states, costs, _ = env.rollout(state, clamped, noise=noise)
    return RolloutBatch(controls=clamped, states=states, costs=costs)


def run_baseline_episode(env, cfg: BaselineConfig, seed: int) -> EpisodeRecord:
    """Receding-horizon episode with the MPPI or CEM update rule."""
    T = cfg.episode_length
    d = env.control_dim
    theta = np.zeros((cfg.horizon, d))

    state = env.start.copy()
    crashed = False
    controls = np.empty((T, d))
    states = np.empty((T + 1, env.state_dim))
    states[0] = state
    total_cost = 0.0

    for t in range(T):
        n_iters = cfg.warm_start_iters if t == 0 else cfg.iters_per_timestep
        for k in range(n_iters):
            rng = rngs.substream(seed, rngs.ROLLOUT, t, k, 0)
            batch = _sample_batch(theta, cfg.sigma_sq, env, state, cfg.n_samples, rng)
            if cfg.kind == "mppi":
                theta = mppi_update(theta, batch, cfg.alpha)
            else:
                theta = cem_update(theta, batch, cfg.elite_fraction)
            if not np.all(np.isfinite(theta)):
                raise RuntimeError(f"non-finite update at timestep {t}")

        u = env.clamp(theta[0].copy())
        total_cost += env.stage_cost(state, u)
        controls[t] = u
        state, crashed = env.step(
            state, u, crashed, rng=rngs.substream(seed, rngs.EXEC, t)
        )
        states[t + 1] = state

        # Same shift rule as the particle controller: drop first, repeat last.
        theta = np.concatenate([theta[1:], theta[-1:]], axis=0)

    total_cost += env.terminal_cost(state)
    return EpisodeRecord(
        seed=seed,
        controls=controls,
        states=states,
        selected=np.zeros(T, dtype=np.int64),
        weights=np.ones((T, 1)),
        total_cost=float(total_cost),
        crashed=crashed,
        success=env.success(state, crashed),
    )
