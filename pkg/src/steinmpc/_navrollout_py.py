"""Pure-numpy batched rollout kernel for the planar double-integrator world.

This mirrors the compiled extension in ``_navrollout_cy.pyx`` operation for
operation so both backends produce bit-identical trajectories and costs.
"""

import numpy as np


def rollout_nav(x0, controls, noise, obstacles, dt, sigma_dyn, goal, coeffs):
    """Propagate N control trajectories through the crash-latching dynamics.

    Parameters
    ----------
    x0 : (4,) initial state (px, py, vx, vy)
    controls : (N, H, 2) control inputs, already clamped
    noise : (N, H, 2) standard-normal dynamics noise, or None for deterministic
    obstacles : (K, 3) circles as (cx, cy, radius)
    dt : timestep
    sigma_dyn : std of the additive velocity noise
    goal : (2,) goal position
    coeffs : (w_pos, w_vel, w_ctrl, wt_pos, wt_vel) cost coefficients

    Returns
    -------
    states : (N, H+1, 4), costs : (N,), crashed : (N,) bool
    """
    controls = np.asarray(controls, dtype=np.float64)
    n, horizon, _ = controls.shape
    if noise is None:
        noise = np.zeros((n, horizon, 2))
    obstacles = np.asarray(obstacles, dtype=np.float64).reshape(-1, 3)
    w_pos, w_vel, w_ctrl, wt_pos, wt_vel = coeffs
    gx, gy = float(goal[0]), float(goal[1])

    states = np.empty((n, horizon + 1, 4))
    costs = np.zeros(n)
    crashed = np.zeros(n, dtype=bool)

    px = np.full(n, float(x0[0]))
    py = np.full(n, float(x0[1]))
    vx = np.full(n, float(x0[2]))
    vy = np.full(n, float(x0[3]))
    states[:, 0, 0] = px
    states[:, 0, 1] = py
    states[:, 0, 2] = vx
    states[:, 0, 3] = vy

    cx = obstacles[:, 0]
    cy = obstacles[:, 1]
    r2 = obstacles[:, 2] ** 2

    for t in range(horizon):
        ux = controls[:, t, 0]
        uy = controls[:, t, 1]
        ex = px - gx
        ey = py - gy
        costs += (
            w_pos * (ex * ex + ey * ey)
            + w_vel * (vx * vx + vy * vy)
            + w_ctrl * (ux * ux + uy * uy)
        )

        qx = px + vx * dt
        qy = py + vy * dt

        # Segment-circle intersection against every obstacle.
        dx = (qx - px)[:, None]
        dy = (qy - py)[:, None]
        fx = px[:, None] - cx[None, :]
        fy = py[:, None] - cy[None, :]
        len2 = dx * dx + dy * dy
        safe = np.where(len2 > 0.0, len2, 1.0)
        s = np.clip(-(fx * dx + fy * dy) / safe, 0.0, 1.0)
        s = np.where(len2 > 0.0, s, 0.0)
        nx = fx + s * dx
        ny = fy + s * dy
        hit = np.any(nx * nx + ny * ny <= r2[None, :], axis=1)

        crashed = crashed | hit
        move = ~crashed
        px = np.where(move, qx, px)
        py = np.where(move, qy, py)
        vx = np.where(move, vx + ux * dt + sigma_dyn * noise[:, t, 0], vx)
        vy = np.where(move, vy + uy * dt + sigma_dyn * noise[:, t, 1], vy)

        states[:, t + 1, 0] = px
        states[:, t + 1, 1] = py
        states[:, t + 1, 2] = vx
        states[:, t + 1, 3] = vy

    ex = px - gx
    ey = py - gy
    costs += wt_pos * (ex * ex + ey * ey) + wt_vel * (vx * vx + vy * vy)
    return states, costs, crashed
