"""Control policies, cost-likelihoods, priors and Monte-Carlo gradients.

The log-likelihood gradient estimator is the self-normalized score-function
estimator: a cost-likelihood-weighted average of per-sample policy scores.
Two cost-likelihoods are supported: exponentiated utility (EU) and
probability of low cost (PLC).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)


@dataclass
class GaussianOpenLoopPolicy:
    """Open-loop Gaussian with constant diagonal covariance sigma_sq * I."""

    mean: np.ndarray  # (H, d)
    sigma_sq: float

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64)
        if not self.sigma_sq > 0:
            raise ValueError("policy variance must be positive")

    def sample_controls(self, n: int, rng) -> np.ndarray:
        """Draw n raw control trajectories (N, H, d); clamping is the env's job."""
        noise = rng.standard_normal((n,) + self.mean.shape)
        return self.mean + np.sqrt(self.sigma_sq) * noise


@dataclass
class LikelihoodSpec:
    """EU(alpha) or PLC(elite_fraction) cost-likelihood."""

    kind: str  # "eu" | "plc"
    alpha: float = 1.0
    elite_fraction: float = 0.1

    def __post_init__(self):
        if self.kind not in ("eu", "plc"):
            raise ValueError(f"unknown likelihood kind: {self.kind!r}")
        if self.kind == "eu" and not self.alpha > 0:
            raise ValueError("EU temperature alpha must be positive")
        if self.kind == "plc" and not 0 < self.elite_fraction <= 1:
            raise ValueError("PLC elite fraction must be in (0, 1]")


@dataclass
class PriorSpec:
    """Prior over control sequences.

    ``uniform``: box prior with per-dimension bounds (lo, hi); flat log-density.
    ``mixture``: equal-covariance Gaussian mixture over component means
    (typically the shifted particles), weighted by the particle weights.
    """

    kind: str  # "uniform" | "mixture"
    bounds: tuple = (-np.inf, np.inf)
    component_variance: float = 1.0
    means: np.ndarray | None = None  # (m, H, d) for mixture instances
    weights: np.ndarray | None = None  # (m,)

    def __post_init__(self):
        if self.kind == "shifted_gaussian_mixture":
            self.kind = "mixture"
        if self.kind not in ("uniform", "mixture"):
            raise ValueError(f"unknown prior kind: {self.kind!r}")
        if self.kind == "uniform":
            lo, hi = self.bounds
            if not lo < hi:
                raise ValueError("uniform prior requires lower < upper")
        else:
            if not self.component_variance > 0:
                raise ValueError("component variance must be positive")
            if self.means is None or self.weights is None:
                raise ValueError("mixture prior requires component means and weights")
            self.means = np.asarray(self.means, dtype=np.float64)
            self.weights = np.asarray(self.weights, dtype=np.float64)

    def in_support(self, theta: np.ndarray) -> bool:
        if self.kind != "uniform":
            return True
        lo, hi = self.bounds
        return bool(np.all(theta >= lo) and np.all(theta <= hi))

    def log_density(self, theta: np.ndarray) -> float:
        """Log prior density; uniform support contributes a constant (0)."""
        theta = np.asarray(theta, dtype=np.float64)
        if self.kind == "uniform":
            return 0.0 if self.in_support(theta) else -np.inf
        v = self.component_variance
        p = theta.size
        sq = np.sum((theta[None] - self.means) ** 2, axis=(1, 2))
        logs = np.log(self.weights) - 0.5 * sq / v - 0.5 * p * np.log(2 * np.pi * v)
        peak = np.max(logs)
        return float(peak + np.log(np.sum(np.exp(logs - peak))))

    def log_grad(self, theta: np.ndarray) -> np.ndarray:
        """Gradient of the log prior density at theta."""
        theta = np.asarray(theta, dtype=np.float64)
        if self.kind == "uniform":
            if not self.in_support(theta):
                raise ValueError("theta outside the uniform prior support")
            return np.zeros_like(theta)
        v = self.component_variance
        sq = np.sum((theta[None] - self.means) ** 2, axis=(1, 2))
        logs = np.log(self.weights) - 0.5 * sq / v
        logs -= np.max(logs)
        resp = np.exp(logs)
        resp /= np.sum(resp)
        scores = -(theta[None] - self.means) / v  # (m, H, d)
        return np.einsum("i,ihd->hd", resp, scores)


@dataclass
class RolloutBatch:
    """N sampled control trajectories with resulting states and total costs."""

    controls: np.ndarray  # (N, H, d), clamped
    states: np.ndarray  # (N, H+1, n)
    costs: np.ndarray  # (N,)

    @property
    def n(self) -> int:
        return self.controls.shape[0]


def sample_rollouts(policy: GaussianOpenLoopPolicy, env, state, n: int, rng) -> RolloutBatch:
    """Draw N control trajectories from the policy and roll the modeled dynamics."""
    if n < 1:
        raise ValueError("need at least one rollout sample")
    raw = policy.sample_controls(n, rng)
    clamped = env.clamp(raw)
    states, costs, _ = env.rollout(state, clamped, rng=rng, stochastic=True)
    return RolloutBatch(controls=clamped, states=states, costs=costs)


def policy_score(policy: GaussianOpenLoopPolicy, controls: np.ndarray) -> np.ndarray:
    """Gradient of log pi(U) in the policy mean: (U - mean) / sigma_sq.

    Broadcasts over a leading batch dimension.
    """
    controls = np.asarray(controls, dtype=np.float64)
    return (controls - policy.mean) / policy.sigma_sq


def elite_indices(costs: np.ndarray, elite_fraction: float) -> np.ndarray:
    """Indices of the ceil(f*N) lowest-cost samples; ties broken by index."""
    costs = np.asarray(costs, dtype=np.float64)
    n_elite = int(np.ceil(elite_fraction * costs.shape[0]))
    order = np.argsort(costs, kind="stable")
    return order[:n_elite]


def sample_weights(costs: np.ndarray, spec: LikelihoodSpec) -> np.ndarray:
    """Normalized cost-likelihood weights for a batch of sampled costs."""
    costs = np.asarray(costs, dtype=np.float64)
    if costs.ndim != 1 or costs.shape[0] < 1:
        raise ValueError("costs must be a nonempty vector")
    if not np.all(np.isfinite(costs)):
        raise ValueError("costs must be finite")
    if spec.kind == "eu":
        shifted = -spec.alpha * (costs - np.min(costs))
        w = np.exp(shifted)
        return w / np.sum(w)
    idx = elite_indices(costs, spec.elite_fraction)
    w = np.zeros_like(costs)
    w[idx] = 1.0 / idx.shape[0]
    return w


def likelihood_grad(
    policy: GaussianOpenLoopPolicy, batch: RolloutBatch, spec: LikelihoodSpec
) -> np.ndarray:
    """Monte-Carlo gradient of the log marginal cost-likelihood in the mean."""
    w = sample_weights(batch.costs, spec)
    scores = policy_score(policy, batch.controls)
    return np.einsum("s,shd->hd", w, scores)


def log_likelihood_estimate(batch: RolloutBatch, spec: LikelihoodSpec) -> float:
    """Log of the estimated marginal cost-likelihood of the batch."""
    costs = batch.costs
    if spec.kind == "eu":
        z = -spec.alpha * costs
        peak = np.max(z)
        return float(peak + np.log(np.mean(np.exp(z - peak))))
    n_elite = elite_indices(costs, spec.elite_fraction).shape[0]
    return float(np.log(n_elite / costs.shape[0]))


def posterior_weights(
    particles: np.ndarray, log_likelihoods: np.ndarray, prior: PriorSpec
):
    """Normalized particle weights from log-likelihoods and the prior.

    Returns (weights, degenerate): degenerate is True when every particle had
    zero posterior mass and the weights fell back to uniform.
    """
    particles = np.asarray(particles, dtype=np.float64)
    m = particles.shape[0]
    logw = np.asarray(log_likelihoods, dtype=np.float64).copy()
    for i in range(m):
        logw[i] += prior.log_density(particles[i])
    if np.all(np.isneginf(logw)):
        log.warning("all particle weights vanished; falling back to uniform")
        return np.full(m, 1.0 / m), True
    peak = np.max(logw)
    w = np.exp(logw - peak)
    return w / np.sum(w), False
