"""Experiment runner: config parsing, multi-trial orchestration, statistics
aggregation and dump persistence.

Config files are flat ``key = value`` text with dotted section keys, e.g.::

    controller.kind = sv-mpc
    controller.particles = 32
    env.kind = planar-nav
    trials = 25
    seed = 0

Dumps are line-delimited JSON: a one-line header carrying the schema name,
version and environment geometry, then one record per trial. Floats survive
serialization exactly (JSON round-trips Python float repr).
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import rngs
from .baselines import BaselineConfig, run_baseline_episode
from .controller import EpisodeRecord, MpcConfig, run_episode
from .envs import GaussianCostMap, PlanarNavEnv, PlannerEnv, obstacle_grid
from .planning import TrajOptConfig, rollout_deterministic, svtrajopt_run
from .policy import LikelihoodSpec
from .svgd import KernelSpec

EPISODE_SCHEMA = "steinmpc-episode"
PLANNING_SCHEMA = "steinmpc-planning"
SUMMARY_SCHEMA = "steinmpc-summary"
SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Invalid experiment configuration; message names the offending key."""


def parse_config_text(text: str) -> dict:
    """Parse flat dotted key = value lines into a dict of strings."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def load_config(path) -> dict:
    return parse_config_text(Path(path).read_text())


def _get(cfg: dict, key: str, cast, default):
    if key not in cfg:
        return default
    raw = cfg[key]
    try:
        if cast is bool:
            if raw.lower() in ("true", "1", "yes"):
                return True
            if raw.lower() in ("false", "0", "no"):
                return False
            raise ValueError(raw)
        return cast(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"invalid value for {key!r}: {raw!r}") from None


# Calibrated planar-navigation benchmark settings shared by the SV-MPC presets.
_NAV_SVMPC = {
    "env.kind": "planar-nav",
    "controller.kind": "sv-mpc",
    "controller.kernel": "full",
    "controller.kernel_bandwidth": "50000.0",
    "controller.prior": "mixture",
    "controller.init_jitter": "6.25",
}

PRESETS = {
    "planar-nav-svmpc-32": {**_NAV_SVMPC, "controller.particles": "32"},
    "planar-nav-svmpc-12": {**_NAV_SVMPC, "controller.particles": "12"},
    "planar-nav-svmpc-6": {**_NAV_SVMPC, "controller.particles": "6"},
    "planar-nav-mppi": {"env.kind": "planar-nav", "controller.kind": "mppi"},
    "planar-nav-cem": {"env.kind": "planar-nav", "controller.kind": "cem"},
    "planner-svtrajopt": {"env.kind": "planner", "controller.kind": "sv-trajopt", "trials": "1"},
}


def build_env(cfg: dict):
    kind = _get(cfg, "env.kind", str, "planar-nav")
    if kind == "planar-nav":
        grid = obstacle_grid(
            rows=_get(cfg, "env.grid_rows", int, 4),
            cols=_get(cfg, "env.grid_cols", int, 4),
            radius=_get(cfg, "env.obstacle_radius", float, 0.4),
            spacing=_get(cfg, "env.obstacle_spacing", float, 2.0),
        )
        return PlanarNavEnv(
            dt=_get(cfg, "env.dt", float, 0.015),
            control_limits=(
                _get(cfg, "env.control_min", float, -50.0),
                _get(cfg, "env.control_max", float, 50.0),
            ),
            sigma_dyn_sq=_get(cfg, "env.dyn_noise", float, 0.1),
            obstacles=grid,
            start=np.array(
                [
                    _get(cfg, "env.start_x", float, -4.5),
                    _get(cfg, "env.start_y", float, -4.5),
                    0.0,
                    0.0,
                ]
            ),
            goal=np.array(
                [_get(cfg, "env.goal_x", float, 4.5), _get(cfg, "env.goal_y", float, 4.5)]
            ),
            goal_radius=_get(cfg, "env.goal_radius", float, 0.5),
        )
    if kind == "planner":
        return PlannerEnv(
            dt=_get(cfg, "env.dt", float, 0.1),
            horizon=_get(cfg, "env.horizon", int, 64),
            start=np.array(
                [_get(cfg, "env.start_x", float, -3.0), _get(cfg, "env.start_y", float, -3.0)]
            ),
            goal=np.array(
                [_get(cfg, "env.goal_x", float, 3.0), _get(cfg, "env.goal_y", float, 3.0)]
            ),
        )
    raise ConfigError(f"unknown env.kind: {kind!r}")


def _kernel_spec(cfg: dict) -> KernelSpec:
    bw = _get(cfg, "controller.kernel_bandwidth", str, "median")
    if bw != "median":
        bw = float(bw)
    return KernelSpec(
        structure=_get(cfg, "controller.kernel", str, "factorized"), bandwidth=bw
    )


def build_controller(cfg: dict):
    """(kind, config object) for the configured controller."""
    kind = _get(cfg, "controller.kind", str, "sv-mpc")
    if kind == "sv-mpc":
        likelihood = LikelihoodSpec(
            kind=_get(cfg, "controller.likelihood", str, "eu"),
            alpha=_get(cfg, "controller.alpha", float, 1e-3),
            elite_fraction=_get(cfg, "controller.elite_fraction", float, 0.1),
        )
        m = _get(cfg, "controller.particles", int, 32)
        return kind, MpcConfig(
            horizon=_get(cfg, "controller.horizon", int, 64),
            particles=m,
            samples=_get(cfg, "controller.samples", int, 8),
            step_size=_get(cfg, "controller.step_size", float, 10.0),
            warm_start_iters=_get(cfg, "controller.warm_start", int, 30),
            iters_per_timestep=_get(cfg, "controller.iters_per_step", int, 1),
            episode_length=_get(cfg, "controller.episode_length", int, 300),
            likelihood=likelihood,
            prior_kind=_get(cfg, "controller.prior", str, "uniform"),
            prior_component_variance=_get(cfg, "controller.prior_variance", float, None),
            kernel=_kernel_spec(cfg),
            sigma_sq=_get(cfg, "controller.sigma_sq", float, 100.0),
            action_selection=_get(cfg, "controller.action_selection", str, "map"),
            grad_clip=_get(cfg, "controller.grad_clip", float, None),
            init_jitter_sq=_get(cfg, "controller.init_jitter", float, None),
        )
    if kind in ("mppi", "cem"):
        # Benchmark presets hold the total sample budget at m*N of sv-mpc.
        return kind, BaselineConfig(
            kind=kind,
            horizon=_get(cfg, "controller.horizon", int, 64),
            n_samples=_get(cfg, "controller.samples", int, 32),
            sigma_sq=_get(cfg, "controller.sigma_sq", float, 100.0),
            alpha=_get(cfg, "controller.alpha", float, 1e-3),
            elite_fraction=_get(cfg, "controller.elite_fraction", float, 0.1),
            warm_start_iters=_get(cfg, "controller.warm_start", int, 30),
            iters_per_timestep=_get(cfg, "controller.iters_per_step", int, 1),
            episode_length=_get(cfg, "controller.episode_length", int, 300),
        )
    if kind == "sv-trajopt":
        return kind, TrajOptConfig(
            particles=_get(cfg, "controller.particles", int, 16),
            step_size=_get(cfg, "controller.step_size", float, 1e-4),
            max_iters=_get(cfg, "controller.max_iters", int, 500),
            tol=_get(cfg, "controller.tol", float, 1e-4),
            refine_iters=_get(cfg, "controller.refine_iters", int, 50),
            refine_step=_get(cfg, "controller.refine_step", float, 1e-4),
            alpha=_get(cfg, "controller.alpha", float, 1.0),
            kernel=KernelSpec(
                structure=_get(cfg, "controller.kernel", str, "full"),
                bandwidth="median",
            ),
            prior_step_variance=_get(cfg, "controller.prior_step_variance", float, 1.0),
        )
    raise ConfigError(f"unknown controller.kind: {kind!r}")


@dataclass
class SummaryStats:
    controller: str
    particles: int | None
    trials: int
    success_rate: float  # percent
    avg_cost_success: float | None  # absent (None) when no trial succeeded
    avg_cost_all: float | None
    per_trial_costs: list

    def to_dict(self) -> dict:
        return {
            "controller": self.controller,
            "particles": self.particles,
            "trials": self.trials,
            "success_rate": self.success_rate,
            "avg_cost_success": self.avg_cost_success,
            "avg_cost_all": self.avg_cost_all,
            "per_trial_costs": self.per_trial_costs,
        }


def aggregate(records, controller="", particles=None) -> SummaryStats:
    """Summary statistics over completed episode records."""
    if not records:
        raise ValueError("no records to aggregate")
    n = len(records)
    succ = [r for r in records if r.success and not r.failed]
    ok = [r for r in records if not r.failed]
    avg_succ = float(np.mean([r.total_cost for r in succ])) if succ else None
    avg_all = float(np.mean([r.total_cost for r in ok])) if ok else None
    return SummaryStats(
        controller=controller,
        particles=particles,
        trials=n,
        success_rate=100.0 * len(succ) / n,
        avg_cost_success=avg_succ,
        avg_cost_all=avg_all,
        per_trial_costs=[None if r.failed else r.total_cost for r in records],
    )


def _run_trial(args):
    kind, env, ctrl_cfg, seed = args
    start = time.perf_counter()
    try:
        if kind == "sv-mpc":
            rec = run_episode(env, ctrl_cfg, seed)
        else:
            rec = run_baseline_episode(env, ctrl_cfg, seed)
    except RuntimeError:
        T = ctrl_cfg.episode_length
        d = env.control_dim
        rec = EpisodeRecord(
            seed=seed,
            controls=np.zeros((T, d)),
            states=np.zeros((T + 1, env.state_dim)),
            selected=np.zeros(T, dtype=np.int64),
            weights=np.ones((T, 1)),
            total_cost=float("nan"),
            crashed=False,
            success=False,
            failed=True,
        )
    rec.wall_clock = time.perf_counter() - start
    return rec


def run_mpc_experiment(env, kind, ctrl_cfg, trials, root_seed, workers=1):
    """Independent episodes with per-trial derived seeds; order-stable output."""
    seeds = [rngs.trial_seed(root_seed, i) for i in range(trials)]
    jobs = [(kind, env, ctrl_cfg, s) for s in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_trial, jobs))
    else:
        records = [_run_trial(j) for j in jobs]
    return records


def controller_label(kind, ctrl_cfg):
    if kind == "sv-mpc":
        return "SV-MPC", ctrl_cfg.particles
    return kind.upper(), None


def write_episode_dump(path, env, kind, ctrl_cfg, records, root_seed):
    header = {
        "schema": EPISODE_SCHEMA,
        "version": SCHEMA_VERSION,
        "controller": kind,
        "particles": getattr(ctrl_cfg, "particles", None),
        "seed": root_seed,
        "env": env.geometry(),
    }
    with open(path, "w") as fh:
        fh.write(json.dumps(header) + "\n")
        for i, rec in enumerate(records):
            d = rec.to_dict()
            d["trial"] = i
            fh.write(json.dumps(d) + "\n")


def read_episode_dump(path):
    """(header, records) from an episode dump; validates the schema."""
    with open(path) as fh:
        lines = [line for line in fh if line.strip()]
    if not lines:
        raise ValueError(f"empty dump: {path}")
    header = json.loads(lines[0])
    if header.get("schema") != EPISODE_SCHEMA or header.get("version") != SCHEMA_VERSION:
        raise ValueError(
            f"schema mismatch in {path}: expected {EPISODE_SCHEMA} v{SCHEMA_VERSION}, "
            f"found {header.get('schema')} v{header.get('version')}"
        )
    return header, [EpisodeRecord.from_dict(json.loads(line)) for line in lines[1:]]


def write_summary(path, rows):
    payload = {
        "schema": SUMMARY_SCHEMA,
        "version": SCHEMA_VERSION,
        "rows": [row.to_dict() for row in rows],
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def read_summary(path):
    payload = json.loads(Path(path).read_text())
    if payload.get("schema") != SUMMARY_SCHEMA or payload.get("version") != SCHEMA_VERSION:
        raise ValueError(
            f"schema mismatch in {path}: expected {SUMMARY_SCHEMA} v{SCHEMA_VERSION}, "
            f"found {payload.get('schema')} v{payload.get('version')}"
        )
    return payload


def format_summary_row(stats: SummaryStats) -> str:
    label = stats.controller
    if stats.particles is not None:
        label = f"{label}/{stats.particles}"
    cost = "---" if stats.avg_cost_success is None else f"{stats.avg_cost_success / 1e3:.1f}"
    return f"{label:<14} {cost:>22} {stats.success_rate:>16.0f}"


def summary_table(rows) -> str:
    lines = [f"{'Controller':<14} {'Avg. cost of success (x1e3)':>22} {'Success rate (%)':>16}"]
    lines += [format_summary_row(r) for r in rows]
    return "\n".join(lines)


def run_planning_experiment(env, cfg: TrajOptConfig, seed, out_dir):
    """Single planning run; dumps particle snapshots at recorded iterations."""
    result = svtrajopt_run(env, env.start, cfg, seed)
    path = Path(out_dir) / "planning.jsonl"
    header = {
        "schema": PLANNING_SCHEMA,
        "version": SCHEMA_VERSION,
        "seed": seed,
        "env": env.geometry(),
    }
    with open(path, "w") as fh:
        fh.write(json.dumps(header) + "\n")
        for it, particles in result.snapshots:
            states = [rollout_deterministic(p, env.start, env).tolist() for p in particles]
            fh.write(
                json.dumps(
                    {
                        "iteration": it,
                        "controls": particles.tolist(),
                        "states": states,
                        "best": result.best if it == result.iterations else None,
                    }
                )
                + "\n"
            )
    return result, path


def read_planning_dump(path):
    with open(path) as fh:
        lines = [line for line in fh if line.strip()]
    if not lines:
        raise ValueError(f"empty dump: {path}")
    header = json.loads(lines[0])
    if header.get("schema") != PLANNING_SCHEMA or header.get("version") != SCHEMA_VERSION:
        raise ValueError(
            f"schema mismatch in {path}: expected {PLANNING_SCHEMA} v{SCHEMA_VERSION}, "
            f"found {header.get('schema')} v{header.get('version')}"
        )
    return header, [json.loads(line) for line in lines[1:]]


def run_experiment(cfg: dict, out_dir, workers=None):
    """Drive one configured experiment end to end; returns SummaryStats."""
    trials = _get(cfg, "trials", int, 25)
    if trials < 1:
        raise ConfigError(f"invalid value for 'trials': {trials}")
    root_seed = _get(cfg, "seed", int, 0)
    if workers is None:
        workers = _get(cfg, "workers", int, 1)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    env = build_env(cfg)
    kind, ctrl_cfg = build_controller(cfg)

    if kind == "sv-trajopt":
        result, path = run_planning_experiment(env, ctrl_cfg, root_seed, out_dir)
        states = rollout_deterministic(result.particles[result.best], env.start, env)
        cost = env.total_cost(states)
        stats = SummaryStats(
            controller="SV-TrajOpt",
            particles=ctrl_cfg.particles,
            trials=1,
            success_rate=100.0,
            avg_cost_success=cost,
            avg_cost_all=cost,
            per_trial_costs=[cost],
        )
        write_summary(out_dir / "summary.json", [stats])
        return stats

    records = run_mpc_experiment(env, kind, ctrl_cfg, trials, root_seed, workers)
    label, particles = controller_label(kind, ctrl_cfg)
    stats = aggregate(records, controller=label, particles=particles)
    write_episode_dump(out_dir / "episodes.jsonl", env, kind, ctrl_cfg, records, root_seed)
    write_summary(out_dir / "summary.json", [stats])
    return stats
