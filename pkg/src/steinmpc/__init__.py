"""Particle-based stochastic model-predictive control.

Nonparametric variational inference over open-loop control sequences:
a set of control-sequence particles is transported with a kernelized
gradient update toward the posterior induced by a cost likelihood, with
exponentiated-utility and probability-of-low-cost variants, plus MPPI and
CEM baselines and a batch trajectory optimizer with a smoothness prior.
"""

from .baselines import BaselineConfig, cem_update, mppi_update, run_baseline_episode
from .controller import EpisodeRecord, MpcConfig, run_episode
from .envs import GaussianCostMap, PlanarNavEnv, PlannerEnv, obstacle_grid
from .planning import SmoothnessPrior, TrajOptConfig, TrajOptResult, svtrajopt_run
from .policy import GaussianOpenLoopPolicy, LikelihoodSpec, PriorSpec
from .rollout_backend import BACKEND, available_backends
from .svgd import KernelSpec, ParticleSet, svgd_direction, svgd_step

__all__ = [
    "BACKEND",
    "BaselineConfig",
    "EpisodeRecord",
    "GaussianCostMap",
    "GaussianOpenLoopPolicy",
    "KernelSpec",
    "LikelihoodSpec",
    "MpcConfig",
    "ParticleSet",
    "PlanarNavEnv",
    "PlannerEnv",
    "PriorSpec",
    "SmoothnessPrior",
    "TrajOptConfig",
    "TrajOptResult",
    "available_backends",
    "cem_update",
    "mppi_update",
    "obstacle_grid",
    "run_baseline_episode",
    "run_episode",
    "svgd_direction",
    "svgd_step",
    "svtrajopt_run",
]

__version__ = "0.1.0"
