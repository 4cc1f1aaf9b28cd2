"""Receding-horizon particle MPC: per-timestep variational optimization,
posterior weighting, action selection, particle shift and prior update.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import rngs
from .policy import (
    GaussianOpenLoopPolicy,
    LikelihoodSpec,
    PriorSpec,
    RolloutBatch,
    likelihood_grad,
    log_likelihood_estimate,
    posterior_weights,
)
from .svgd import KernelSpec, ParticleSet, svgd_direction, svgd_step


@dataclass
class MpcConfig:
    horizon: int = 64
    particles: int = 32
    samples: int = 8  # rollout samples per particle
    step_size: float = 10.0
    warm_start_iters: int = 30
    iters_per_timestep: int = 1
    episode_length: int = 300
    likelihood: LikelihoodSpec = field(default_factory=lambda: LikelihoodSpec("eu", alpha=1e-3))
    prior_kind: str = "uniform"  # "uniform" | "mixture"
    prior_component_variance: float | None = None  # None -> sigma_sq
    kernel: KernelSpec = field(default_factory=KernelSpec)
    sigma_sq: float = 100.0
    action_selection: str = "map"  # "map" | "categorical"
    sample_executed_control: bool = False
    grad_clip: float | None = None
    init_jitter_sq: float | None = None  # None -> sigma_sq / 4

    def __post_init__(self):
        for name in (
            "horizon",
            "particles",
            "samples",
            "warm_start_iters",
            "iters_per_timestep",
            "episode_length",
        ):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not self.step_size > 0:
            raise ValueError("step_size must be positive")
        if self.action_selection not in ("map", "categorical"):
            raise ValueError(f"unknown action selection: {self.action_selection!r}")


@dataclass
class EpisodeRecord:
    """Everything an episode produced; one dump line per record."""

    seed: int
    controls: np.ndarray  # (T, d) executed controls
    states: np.ndarray  # (T+1, n) visited true states
    selected: np.ndarray  # (T,) selected particle index per step
    weights: np.ndarray  # (T, m) particle weights per step
    total_cost: float
    crashed: bool
    success: bool
    failed: bool = False
    wall_clock: float | None = None

    def to_dict(self) -> dict:
        return {
            "seed": int(self.seed),
            "controls": np.asarray(self.controls).tolist(),
            "states": np.asarray(self.states).tolist(),
            "selected": np.asarray(self.selected).astype(int).tolist(),
            "weights": np.asarray(self.weights).tolist(),
            "total_cost": float(self.total_cost),
            "crashed": bool(self.crashed),
            "success": bool(self.success),
            "failed": bool(self.failed),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EpisodeRecord":
        return cls(
            seed=int(d["seed"]),
            controls=np.asarray(d["controls"], dtype=np.float64),
            states=np.asarray(d["states"], dtype=np.float64),
            selected=np.asarray(d["selected"], dtype=np.int64),
            weights=np.asarray(d["weights"], dtype=np.float64),
            total_cost=float(d["total_cost"]),
            crashed=bool(d["crashed"]),
            success=bool(d["success"]),
            failed=bool(d.get("failed", False)),
            wall_clock=d.get("wall_clock"),
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, EpisodeRecord):
            return NotImplemented
        return (
            self.seed == other.seed
            and np.array_equal(self.controls, other.controls)
            and np.array_equal(self.states, other.states)
            and np.array_equal(self.selected, other.selected)
            and np.array_equal(self.weights, other.weights)
            and self.total_cost == other.total_cost
            and self.crashed == other.crashed
            and self.success == other.success
            and self.failed == other.failed
        )


def sample_particle_batches(particles, sigma_sq, env, state, n, streams):
    """One rollout batch per particle, all propagated in a single kernel call.

    Each particle consumes its own rng stream: first the policy noise, then
    the dynamics noise, so results do not depend on batching.
    """
    m, horizon, d = particles.shape
    sig = np.sqrt(sigma_sq)
    controls = np.empty((m, n, horizon, d))
    noise = np.empty((m, n, horizon, d))
    for i, rng in enumerate(streams):
        controls[i] = particles[i] + sig * rng.standard_normal((n, horizon, d))
        noise[i] = rng.standard_normal((n, horizon, d))
    flat = env.clamp(controls.reshape(m * n, horizon, d))
    states, costs, _ = env.rollout(state, flat, noise=noise.reshape(m * n, horizon, d))
    return [
        RolloutBatch(
            controls=flat[i * n : (i + 1) * n],
            states=states[i * n : (i + 1) * n],
            costs=costs[i * n : (i + 1) * n],
        )
        for i in range(m)
    ]


def particle_log_post_grad(particle, batch, likelihood, prior, sigma_sq):
    """Log-posterior gradient of one particle: MC likelihood grad + prior score."""
    policy = GaussianOpenLoopPolicy(particle, sigma_sq)
    return likelihood_grad(policy, batch, likelihood) + prior.log_grad(particle)


def svmpc_update(particles, batches, cfg: MpcConfig, prior: PriorSpec, t: int = 0):
    """One variational update of all particles given pre-sampled batches."""
    grads = np.empty_like(particles)
    for i, batch in enumerate(batches):
        g = particle_log_post_grad(particles[i], batch, cfg.likelihood, prior, cfg.sigma_sq)
        if not np.all(np.isfinite(g)):
            raise RuntimeError(f"non-finite gradient for particle {i} at timestep {t}")
        if cfg.grad_clip is not None:
            g = np.clip(g, -cfg.grad_clip, cfg.grad_clip)
        grads[i] = g
    directions = svgd_direction(particles, grads, cfg.kernel)
    updated = svgd_step(particles, directions, cfg.step_size)
    if prior.kind == "uniform":
        # Keep means inside the prior support (clamping is a no-op otherwise).
        lo, hi = prior.bounds
        updated = np.clip(updated, lo, hi)
    return updated


def svmpc_optimize(pset: ParticleSet, state, cfg: MpcConfig, env, prior: PriorSpec, seed, t, n_iters):
    """n_iters update rounds, then fresh batches for posterior weighting."""
    particles = pset.particles.copy()
    m = particles.shape[0]
    for k in range(n_iters):
        streams = [rngs.substream(seed, rngs.ROLLOUT, t, k, i) for i in range(m)]
        batches = sample_particle_batches(particles, cfg.sigma_sq, env, state, cfg.samples, streams)
        particles = svmpc_update(particles, batches, cfg, prior, t)

    streams = [rngs.substream(seed, rngs.WEIGHT, t, i) for i in range(m)]
    batches = sample_particle_batches(particles, cfg.sigma_sq, env, state, cfg.samples, streams)
    loglik = np.array([log_likelihood_estimate(b, cfg.likelihood) for b in batches])
    weights, _ = posterior_weights(particles, loglik, prior)
    return ParticleSet(particles, weights), loglik


def select_action(pset: ParticleSet, mode: str, rng=None):
    """Pick a particle (MAP or categorical) and return its first-step mean."""
    if mode == "map":
        i = int(np.argmax(pset.weights))
    elif mode == "categorical":
        if rng is None:
            raise ValueError("categorical selection requires an rng")
        w = pset.weights / np.sum(pset.weights)
        i = int(rng.choice(pset.m, p=w))
    else:
        raise ValueError(f"unknown action selection: {mode!r}")
    return i, pset.particles[i, 0].copy()


def shift_particles(pset: ParticleSet) -> ParticleSet:
    """Advance every particle one step, repeating the final row; weights kept."""
    p = pset.particles
    shifted = np.concatenate([p[:, 1:], p[:, -1:]], axis=1)
    return ParticleSet(shifted, pset.weights.copy())


def update_prior(pset: ParticleSet, cfg: MpcConfig, env) -> PriorSpec:
    """Next-round prior: mixture over the shifted particles, or uniform."""
    if cfg.prior_kind == "uniform":
        return PriorSpec("uniform", bounds=env.control_limits)
    var = cfg.prior_component_variance
    if var is None:
        var = cfg.sigma_sq
    return PriorSpec(
        "mixture",
        component_variance=var,
        means=pset.particles.copy(),
        weights=pset.weights.copy(),
    )


def initial_particles(cfg: MpcConfig, env, seed) -> ParticleSet:
    """Zero-mean start with small jitter so particles are distinct."""
    jitter = cfg.init_jitter_sq
    if jitter is None:
        jitter = cfg.sigma_sq / 4.0
    rng = rngs.substream(seed, rngs.INIT)
    particles = np.sqrt(jitter) * rng.standard_normal(
        (cfg.particles, cfg.horizon, env.control_dim)
    )
    return ParticleSet.uniform(env.clamp(particles))


def run_episode(env, cfg: MpcConfig, seed: int) -> EpisodeRecord:
    """Full receding-horizon episode on the true (noisy) dynamics."""
    T = cfg.episode_length
    d = env.control_dim

    pset = initial_particles(cfg, env, seed)
    prior = PriorSpec("uniform", bounds=env.control_limits)

    state = env.start.copy()
    crashed = False
    controls = np.empty((T, d))
    states = np.empty((T + 1, env.state_dim))
    selected = np.empty(T, dtype=np.int64)
    weights = np.empty((T, cfg.particles))
    states[0] = state
    total_cost = 0.0

    for t in range(T):
        n_iters = cfg.warm_start_iters if t == 0 else cfg.iters_per_timestep
        pset, _ = svmpc_optimize(pset, state, cfg, env, prior, seed, t, n_iters)

        i_sel, u = select_action(
            pset, cfg.action_selection, rngs.substream(seed, rngs.SELECT, t)
        )
        if cfg.sample_executed_control:
            u = u + np.sqrt(cfg.sigma_sq) * rngs.substream(
                seed, rngs.SELECT, t, 1
            ).standard_normal(d)
        u = env.clamp(u)

        total_cost += env.stage_cost(state, u)
        controls[t] = u
        selected[t] = i_sel
        weights[t] = pset.weights

        state, crashed = env.step(
            state, u, crashed, rng=rngs.substream(seed, rngs.EXEC, t)
        )
        states[t + 1] = state

        pset = shift_particles(pset)
        prior = update_prior(pset, cfg, env)

    total_cost += env.terminal_cost(state)
    return EpisodeRecord(
        seed=seed,
        controls=controls,
        states=states,
        selected=selected,
        weights=weights,
        total_cost=float(total_cost),
        crashed=crashed,
        success=env.success(state, crashed),
    )
