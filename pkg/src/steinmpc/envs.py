"""Planar benchmark worlds.

Two environments are provided:

* ``PlanarNavEnv``: stochastic double-integrator navigation through a grid of
  circular obstacles. Touching an obstacle permanently freezes the robot
  (crash latch), which is what makes the task non-differentiable and
  sampling-friendly.
* ``PlannerEnv``: deterministic single-integrator world with a smooth
  Gaussian-mixture obstacle cost map, used for gradient-based trajectory
  optimization.

The obstacle layout, start/goal and success radius of the navigation task are
a documented reconstruction (the reference experiment does not publish them);
everything is overridable through the constructor / harness config.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .rollout_backend import rollout_nav


def obstacle_grid(
    rows: int = 4,
    cols: int = 4,
    radius: float = 0.4,
    spacing: float = 2.0,
    center=(0.0, 0.0),
) -> np.ndarray:
    """Axis-aligned grid of circular obstacles as an (rows*cols, 3) array."""
    xs = (np.arange(cols) - (cols - 1) / 2.0) * spacing + center[0]
    ys = (np.arange(rows) - (rows - 1) / 2.0) * spacing + center[1]
    gx, gy = np.meshgrid(xs, ys)
    out = np.column_stack([gx.ravel(), gy.ravel(), np.full(rows * cols, radius)])
    return out


@dataclass
class PlanarNavEnv:
    """Double-integrator point robot with additive velocity noise and crash latch.

    State is (px, py, vx, vy); control is the 2-D acceleration. The dynamics
    noise is a Brownian velocity increment with diffusion ``sigma_dyn_sq``,
    i.e. each step adds N(0, sigma_dyn_sq * dt) to the velocity.
    """

    dt: float = 0.015
    control_limits: tuple = (-50.0, 50.0)
    sigma_dyn_sq: float = 0.1
    obstacles: np.ndarray = field(default_factory=obstacle_grid)
    start: np.ndarray = field(default_factory=lambda: np.array([-4.5, -4.5, 0.0, 0.0]))
    goal: np.ndarray = field(default_factory=lambda: np.array([4.5, 4.5]))
    goal_radius: float = 0.5
    # Stage: w_pos*|x-g|^2 + w_vel*|v|^2 + w_ctrl*|u|^2; terminal: wt_pos, wt_vel.
    cost_coeffs: tuple = (0.5, 0.25, 0.2, 1000.0, 0.1)

    state_dim = 4
    control_dim = 2

    def __post_init__(self):
        self.obstacles = np.asarray(self.obstacles, dtype=np.float64).reshape(-1, 3)
        self.start = np.asarray(self.start, dtype=np.float64)
        self.goal = np.asarray(self.goal, dtype=np.float64)

    @property
    def sigma_dyn(self) -> float:
        """Per-step velocity noise std: Euler-Maruyama scaling sqrt(sigma^2 dt)."""
        return float(np.sqrt(self.sigma_dyn_sq * self.dt))

    def clamp(self, u: np.ndarray) -> np.ndarray:
        lo, hi = self.control_limits
        return np.clip(u, lo, hi)

    def stage_cost(self, state, u) -> float:
        w_pos, w_vel, w_ctrl, _, _ = self.cost_coeffs
        e = state[:2] - self.goal
        return float(
            w_pos * e @ e + w_vel * state[2:] @ state[2:] + w_ctrl * np.dot(u, u)
        )

    def terminal_cost(self, state) -> float:
        _, _, _, wt_pos, wt_vel = self.cost_coeffs
        e = state[:2] - self.goal
        return float(wt_pos * e @ e + wt_vel * state[2:] @ state[2:])

    def step(self, state, u, crashed: bool, rng=None, stochastic: bool = True):
        """Single dynamics step with segment-circle collision checking.

        Returns (next_state, crashed). A crashed robot never moves again.
        """
        if crashed:
            return np.asarray(state, dtype=np.float64).copy(), True
        u = self.clamp(np.asarray(u, dtype=np.float64))
        noise = None
        if stochastic:
            if rng is None:
                raise ValueError("stochastic step requires an rng")
            noise = rng.standard_normal((1, 1, 2))
        states, _, hit = rollout_nav(
            np.asarray(state, dtype=np.float64),
            u.reshape(1, 1, 2),
            noise,
            self.obstacles,
            self.dt,
            self.sigma_dyn if stochastic else 0.0,
            self.goal,
            self.cost_coeffs,
        )
        return states[0, 1], bool(hit[0])

    def rollout(self, state, controls, rng=None, stochastic: bool = True, noise=None):
        """Batched rollout of clamped controls from ``state``.

        controls: (N, H, 2). Returns (states (N, H+1, 4), costs (N,), crashed (N,)).
        Pre-drawn standard-normal ``noise`` may be supplied instead of an rng.
        """
        controls = self.clamp(np.asarray(controls, dtype=np.float64))
        sigma = 0.0
        if stochastic:
            if noise is None:
                if rng is None:
                    raise ValueError("stochastic rollout requires an rng or noise")
                noise = rng.standard_normal(controls.shape)
            sigma = self.sigma_dyn
        else:
            noise = None
        return rollout_nav(
            np.asarray(state, dtype=np.float64),
            controls,
            noise,
            self.obstacles,
            self.dt,
            sigma,
            self.goal,
            self.cost_coeffs,
        )

    def success(self, final_state, crashed: bool) -> bool:
        """Episode success: no crash and strictly inside the goal radius."""
        if crashed:
            return False
        dist = float(np.linalg.norm(np.asarray(final_state)[:2] - self.goal))
        return dist < self.goal_radius

    def geometry(self) -> dict:
        """Serializable description consumed by dump headers and plots."""
        return {
            "obstacles": self.obstacles.tolist(),
            "start": self.start.tolist(),
            "goal": self.goal.tolist(),
            "goal_radius": self.goal_radius,
            "dt": self.dt,
            "control_limits": list(self.control_limits),
            "sigma_dyn_sq": self.sigma_dyn_sq,
        }


@dataclass
class GaussianCostMap:
    """Smooth obstacle field: a weighted sum of 2-D Gaussian densities."""

    means: np.ndarray  # (K, 2)
    covs: np.ndarray  # (K, 2, 2), SPD
    weights: np.ndarray  # (K,)
    collision_scale: float = 1e5

    def __post_init__(self):
        self.means = np.asarray(self.means, dtype=np.float64).reshape(-1, 2)
        self.covs = np.asarray(self.covs, dtype=np.float64).reshape(-1, 2, 2)
        self.weights = np.asarray(self.weights, dtype=np.float64).ravel()
        self._precisions = np.linalg.inv(self.covs)
        dets = np.linalg.det(self.covs)
        if np.any(dets <= 0):
            raise ValueError("covariances must be positive definite")
        self._norms = 1.0 / (2.0 * np.pi * np.sqrt(dets))

    def p_obs(self, points: np.ndarray) -> np.ndarray:
        """Mixture density at each point; points (..., 2)."""
        pts = np.asarray(points, dtype=np.float64)
        diff = pts[..., None, :] - self.means  # (..., K, 2)
        quad = np.einsum("...ki,kij,...kj->...k", diff, self._precisions, diff)
        return np.sum(self.weights * self._norms * np.exp(-0.5 * quad), axis=-1)

    def p_obs_grad(self, points: np.ndarray) -> np.ndarray:
        """Gradient of the mixture density; same leading shape, trailing 2."""
        pts = np.asarray(points, dtype=np.float64)
        diff = pts[..., None, :] - self.means
        quad = np.einsum("...ki,kij,...kj->...k", diff, self._precisions, diff)
        dens = self.weights * self._norms * np.exp(-0.5 * quad)  # (..., K)
        scores = -np.einsum("kij,...kj->...ki", self._precisions, diff)
        return np.sum(dens[..., None] * scores, axis=-2)


def default_cost_map() -> GaussianCostMap:
    """Two Gaussian obstacles blocking the straight line from start to goal."""
    return GaussianCostMap(
        means=np.array([[-1.0, 0.8], [1.0, -0.8]]),
        covs=np.array([0.25 * np.eye(2), 0.25 * np.eye(2)]),
        weights=np.array([1.0, 1.0]),
    )


@dataclass
class PlannerEnv:
    """Velocity-controlled single integrator over a differentiable cost map."""

    dt: float = 0.1
    horizon: int = 64
    start: np.ndarray = field(default_factory=lambda: np.array([-3.0, -3.0]))
    goal: np.ndarray = field(default_factory=lambda: np.array([3.0, 3.0]))
    cost_map: GaussianCostMap = field(default_factory=default_cost_map)
    terminal_weight: float = 1000.0

    control_dim = 2
    state_dim = 2

    def __post_init__(self):
        self.start = np.asarray(self.start, dtype=np.float64)
        self.goal = np.asarray(self.goal, dtype=np.float64)

    def plan_cost(self, points) -> np.ndarray:
        return self.cost_map.collision_scale * self.cost_map.p_obs(points)

    def plan_cost_grad(self, points) -> np.ndarray:
        return self.cost_map.collision_scale * self.cost_map.p_obs_grad(points)

    def plan_terminal(self, point) -> float:
        e = np.asarray(point, dtype=np.float64) - self.goal
        return float(self.terminal_weight * e @ e)

    def plan_terminal_grad(self, point) -> np.ndarray:
        return 2.0 * self.terminal_weight * (np.asarray(point, dtype=np.float64) - self.goal)

    def rollout(self, theta: np.ndarray, x0=None) -> np.ndarray:
        """Deterministic states (T+1, 2) from a (T, 2) velocity sequence."""
        theta = np.asarray(theta, dtype=np.float64)
        x0 = self.start if x0 is None else np.asarray(x0, dtype=np.float64)
        states = np.empty((theta.shape[0] + 1, 2))
        states[0] = x0
        states[1:] = x0 + np.cumsum(theta * self.dt, axis=0)
        return states

    def total_cost(self, states: np.ndarray) -> float:
        """Obstacle cost over visited states (after the start) plus terminal."""
        return float(np.sum(self.plan_cost(states[1:]))) + self.plan_terminal(states[-1])

    def geometry(self) -> dict:
        return {
            "start": self.start.tolist(),
            "goal": self.goal.tolist(),
            "dt": self.dt,
            "horizon": self.horizon,
            "cost_map": {
                "means": self.cost_map.means.tolist(),
                "covs": self.cost_map.covs.tolist(),
                "weights": self.cost_map.weights.tolist(),
                "collision_scale": self.cost_map.collision_scale,
            },
        }
