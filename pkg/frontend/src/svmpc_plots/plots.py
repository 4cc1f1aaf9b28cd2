"""Figure rendering for episode, planning and summary dumps.

Uses the Agg backend throughout; every entry point takes already-parsed dump
content plus an output path and writes a single image file.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.patches import Circle


def _draw_nav_world(ax, env):
    for ox, oy, radius in env["obstacles"]:
        ax.add_patch(Circle((ox, oy), radius, color="0.35", zorder=2))
    sx, sy = env["start"][0], env["start"][1]
    gx, gy = env["goal"]
    ax.plot(sx, sy, marker="s", color="tab:blue", markersize=8, zorder=4, label="start")
    ax.plot(gx, gy, marker="*", color="tab:green", markersize=14, zorder=4, label="goal")
    ax.add_patch(
        Circle((gx, gy), env["goal_radius"], fill=False, color="tab:green", ls="--", zorder=3)
    )
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")


def plot_nav_episode(header, records, out_path):
    """Executed navigation paths over the obstacle world; one line per trial."""
    if not records:
        raise ValueError("no episode records to plot")
    env = header["env"]
    fig, ax = plt.subplots(figsize=(6, 6))
    _draw_nav_world(ax, env)
    for rec in records:
        states = np.asarray(rec["states"], dtype=np.float64)
        if rec.get("failed"):
            continue
        if rec["success"]:
            color, alpha = "tab:green", 0.8
        elif rec["crashed"]:
            color, alpha = "tab:red", 0.8
        else:
            color, alpha = "tab:orange", 0.8
        ax.plot(states[:, 0], states[:, 1], color=color, lw=1.0, alpha=alpha, zorder=3)
    label = header.get("controller", "")
    if header.get("particles") is not None:
        label = f"{label}/{header['particles']}"
    ax.set_title(f"{label}: {len(records)} trials")
    fig.savefig(out_path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def _cost_map_grid(env, extent, n=200):
    cmap = env["cost_map"]
    means = np.asarray(cmap["means"], dtype=np.float64)
    covs = np.asarray(cmap["covs"], dtype=np.float64)
    weights = np.asarray(cmap["weights"], dtype=np.float64)
    xs = np.linspace(extent[0], extent[1], n)
    ys = np.linspace(extent[2], extent[3], n)
    gx, gy = np.meshgrid(xs, ys)
    pts = np.stack([gx, gy], axis=-1)
    dens = np.zeros_like(gx)
    for mean, cov, w in zip(means, covs, weights):
        diff = pts - mean
        prec = np.linalg.inv(cov)
        quad = np.einsum("...i,ij,...j->...", diff, prec, diff)
        dens += w / (2 * np.pi * np.sqrt(np.linalg.det(cov))) * np.exp(-0.5 * quad)
    return gx, gy, dens


def plot_planner_snapshots(header, rows, out_path):
    """Particle trajectories over the obstacle density, one panel per snapshot."""
    if not rows:
        raise ValueError("no planning snapshots to plot")
    env = header["env"]
    start = np.asarray(env["start"], dtype=np.float64)
    goal = np.asarray(env["goal"], dtype=np.float64)
    pad = 1.0
    lo = np.minimum(start, goal) - pad
    hi = np.maximum(start, goal) + pad
    extent = (lo[0], hi[0], lo[1], hi[1])
    gx, gy, dens = _cost_map_grid(env, extent)

    fig, axes = plt.subplots(1, len(rows), figsize=(4 * len(rows), 4), squeeze=False)
    for ax, row in zip(axes[0], rows):
        ax.contourf(gx, gy, dens, levels=12, cmap="Reds")
        for states in row["states"]:
            s = np.asarray(states, dtype=np.float64)
            ax.plot(s[:, 0], s[:, 1], color="0.2", lw=0.8, alpha=0.7)
        best = row.get("best")
        if best is not None:
            s = np.asarray(row["states"][best], dtype=np.float64)
            ax.plot(s[:, 0], s[:, 1], color="tab:green", lw=2.0, zorder=4)
        ax.plot(*start, marker="s", color="tab:blue", markersize=7)
        ax.plot(*goal, marker="*", color="tab:green", markersize=12)
        ax.set_aspect("equal")
        ax.set_title(f"iteration {row['iteration']}")
    fig.savefig(out_path, dpi=150, bbox_inches="tight")
    plt.close(fig)


SUMMARY_COLUMNS = ("Controller", "Avg. cost of success", "Success rate (%)")


def summary_cells(payload):
    """(column names, rows of cell strings) for the summary table.

    Numeric cells are ``repr`` of the stored floats, so parsing a cell back
    returns exactly the dump value.
    """
    rows = []
    for row in payload["rows"]:
        label = row["controller"]
        if row.get("particles") is not None:
            label = f"{label}/{row['particles']}"
        cost = row["avg_cost_success"]
        rows.append(
            (
                label,
                "---" if cost is None else repr(float(cost)),
                repr(float(row["success_rate"])),
            )
        )
    return SUMMARY_COLUMNS, rows


def plot_summary_table(payload, out_path):
    """Render the benchmark summary as a table figure."""
    columns, rows = summary_cells(payload)
    if not rows:
        raise ValueError("no summary rows to plot")
    fig, ax = plt.subplots(figsize=(7, 0.6 + 0.4 * len(rows)))
    ax.axis("off")
    table = ax.table(cellText=[list(r) for r in rows], colLabels=list(columns), loc="center")
    table.auto_set_font_size(False)
    table.set_fontsize(10)
    table.scale(1.0, 1.4)
    fig.savefig(out_path, dpi=150, bbox_inches="tight")
    plt.close(fig)
