"""RBF kernels over control sequences and the Stein variational particle update.

Particles are stacked as an (m, H, d) array: m candidate sequences, each a
horizon-H by d-dimensional control (or policy-mean) matrix. Two kernel
structures are supported:

* ``full``: a single RBF over the flattened H*d vector.
* ``factorized``: a sum of RBF kernels over cliques of timesteps -- one unary
  clique per timestep (d dims) and one pairwise clique per consecutive pair
  of timesteps (2d dims). Each clique carries its own bandwidth, which keeps
  the repulsive force alive as the horizon grows.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Bandwidth floor: keeps the median heuristic finite when particles coincide.
H_MIN = 1e-8


@dataclass
class KernelSpec:
    """Kernel configuration: RBF base, bandwidth policy and structure."""

    structure: str = "factorized"  # "full" | "factorized"
    bandwidth: float | str = "median"  # "median" | fixed positive float

    def __post_init__(self):
        if self.structure not in ("full", "factorized"):
            raise ValueError(f"unknown kernel structure: {self.structure!r}")
        if isinstance(self.bandwidth, str):
            if self.bandwidth != "median":
                raise ValueError(f"unknown bandwidth policy: {self.bandwidth!r}")
        elif not self.bandwidth > 0:
            raise ValueError("fixed bandwidth must be positive")


@dataclass
class ParticleSet:
    """m control sequences with normalized posterior weights."""

    particles: np.ndarray  # (m, H, d)
    weights: np.ndarray  # (m,), non-negative, sums to 1

    def __post_init__(self):
        self.particles = np.asarray(self.particles, dtype=np.float64)
        if self.particles.ndim != 3:
            raise ValueError("particles must have shape (m, H, d)")
        if not np.all(np.isfinite(self.particles)):
            raise ValueError("particles must be finite")
        if self.weights is None:
            m = self.particles.shape[0]
            self.weights = np.full(m, 1.0 / m)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.shape != (self.particles.shape[0],):
            raise ValueError("weights must have shape (m,)")
        if np.any(self.weights < 0):
            raise ValueError("weights must be non-negative")

    @property
    def m(self) -> int:
        return self.particles.shape[0]

    @property
    def horizon(self) -> int:
        return self.particles.shape[1]

    @property
    def dim(self) -> int:
        return self.particles.shape[2]

    @classmethod
    def uniform(cls, particles: np.ndarray) -> "ParticleSet":
        particles = np.asarray(particles, dtype=np.float64)
        m = particles.shape[0]
        return cls(particles, np.full(m, 1.0 / m))


def rbf_eval(a, b, h: float):
    """RBF kernel value k(a, b) = exp(-||a - b||^2 / h) and its gradient in a."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("inputs must have the same shape")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b)) and np.isfinite(h)):
        raise ValueError("non-finite input to rbf_eval")
    if not h > 0:
        raise ValueError("bandwidth must be positive")
    diff = a - b
    value = float(np.exp(-np.sum(diff * diff) / h))
    grad_a = -(2.0 / h) * diff * value
    return value, grad_a


def median_bandwidth(points: np.ndarray, h_min: float = H_MIN) -> float:
    """Bandwidth h = median(pairwise distances)^2 / ln(m), floored at h_min."""
    points = np.asarray(points, dtype=np.float64)
    m = points.shape[0]
    if m < 2:
        raise ValueError("median bandwidth requires at least two particles")
    flat = points.reshape(m, -1)
    iu, ju = np.triu_indices(m, k=1)
    dists = np.sqrt(np.sum((flat[iu] - flat[ju]) ** 2, axis=1))
    med = float(np.median(dists))
    return max(med * med / np.log(m), h_min)


def _clique_bandwidths(sq_dists: np.ndarray, m: int, bandwidth) -> np.ndarray:
    """Per-clique bandwidths from squared pairwise distances (m, m, n_cliques)."""
    if isinstance(bandwidth, str):
        iu, ju = np.triu_indices(m, k=1)
        med = np.median(np.sqrt(sq_dists[iu, ju, :]), axis=0)
        return np.maximum(med * med / np.log(m), H_MIN)
    n = sq_dists.shape[2]
    return np.full(n, float(bandwidth))


def kernel_matrix(particles: np.ndarray, spec: KernelSpec):
    """Gram matrix K (m, m) and kernel gradients G (m, m, H, d).

    G[i, j] holds the gradient of k(theta_j, theta_i) with respect to theta_j,
    matching the repulsive term of the particle update.
    """
    particles = np.asarray(particles, dtype=np.float64)
    m, horizon, d = particles.shape
    if m < 2 and isinstance(spec.bandwidth, str):
        raise ValueError("median bandwidth requires at least two particles")

    # diff[i, j] = theta_j - theta_i
    diff = particles[None, :, :, :] - particles[:, None, :, :]

    if spec.structure == "full":
        sq = np.sum(diff * diff, axis=(2, 3))
        if isinstance(spec.bandwidth, str):
            h = median_bandwidth(particles)
        else:
            h = float(spec.bandwidth)
        K = np.exp(-sq / h)
        G = -(2.0 / h) * diff * K[:, :, None, None]
        return K, G

    # Factorized: per-timestep squared distances feed both clique types.
    sq_t = np.sum(diff * diff, axis=3)  # (m, m, H)
    h_u = _clique_bandwidths(sq_t, m, spec.bandwidth)  # (H,)
    k_u = np.exp(-sq_t / h_u)  # (m, m, H)

    G = -(2.0 / h_u)[None, None, :, None] * diff * k_u[:, :, :, None]
    K = np.sum(k_u, axis=2)

    if horizon > 1:
        sq_p = sq_t[:, :, :-1] + sq_t[:, :, 1:]  # (m, m, H-1)
        h_p = _clique_bandwidths(sq_p, m, spec.bandwidth)
        k_p = np.exp(-sq_p / h_p)
        scale = -(2.0 / h_p)[None, None, :, None] * k_p[:, :, :, None]
        G[:, :, :-1, :] += scale * diff[:, :, :-1, :]
        G[:, :, 1:, :] += scale * diff[:, :, 1:, :]
        K = K + np.sum(k_p, axis=2)

    return K, G


def svgd_direction(
    particles: np.ndarray, log_post_grads: np.ndarray, spec: KernelSpec
) -> np.ndarray:
    """Kernel-averaged update directions phi for each particle.

    phi_i = (1/m) sum_j [ k(theta_j, theta_i) * grad_j + grad_{theta_j} k(theta_j, theta_i) ]
    """
    particles = np.asarray(particles, dtype=np.float64)
    grads = np.asarray(log_post_grads, dtype=np.float64)
    if grads.shape != particles.shape:
        raise ValueError(
            f"gradient shape {grads.shape} does not match particles {particles.shape}"
        )
    m = particles.shape[0]
    if m == 1:
        # Single particle: repulsion vanishes, direction is the raw gradient.
        return grads.copy()
    K, G = kernel_matrix(particles, spec)
    drive = np.einsum("ji,jhd->ihd", K, grads)
    repulse = np.sum(G, axis=1)
    return (drive + repulse) / m


def svgd_step(particles: np.ndarray, directions: np.ndarray, step_size: float) -> np.ndarray:
    """Translate each particle by step_size * direction."""
    if not step_size >= 0:
        raise ValueError("step size must be non-negative")
    return np.asarray(particles, dtype=np.float64) + step_size * np.asarray(
        directions, dtype=np.float64
    )
