# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled batched rollout kernel for the planar double-integrator world.

Arithmetic mirrors ``_navrollout_py.rollout_nav`` expression for expression so
results are bit-identical across backends.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def rollout_nav(x0, controls, noise, obstacles, double dt, double sigma_dyn,
                goal, coeffs):
    controls = np.ascontiguousarray(controls, dtype=np.float64)
    cdef Py_ssize_t n = controls.shape[0]
    cdef Py_ssize_t horizon = controls.shape[1]
    if noise is None:
        noise = np.zeros((n, horizon, 2))
    noise = np.ascontiguousarray(noise, dtype=np.float64)
    obstacles = np.ascontiguousarray(
        np.asarray(obstacles, dtype=np.float64).reshape(-1, 3))

    cdef double w_pos = coeffs[0]
    cdef double w_vel = coeffs[1]
    cdef double w_ctrl = coeffs[2]
    cdef double wt_pos = coeffs[3]
    cdef double wt_vel = coeffs[4]
    cdef double gx = goal[0]
    cdef double gy = goal[1]
    cdef double x0_px = x0[0]
    cdef double x0_py = x0[1]
    cdef double x0_vx = x0[2]
    cdef double x0_vy = x0[3]

    states_arr = np.empty((n, horizon + 1, 4))
    costs_arr = np.zeros(n)
    crashed_arr = np.zeros(n, dtype=np.uint8)

    cdef double[:, :, ::1] u = controls
    cdef double[:, :, ::1] w = noise
    cdef double[:, ::1] obs = obstacles
    cdef double[:, :, ::1] states = states_arr
    cdef double[::1] costs = costs_arr
    cdef cnp.uint8_t[::1] crashed = crashed_arr

    cdef Py_ssize_t n_obs = obs.shape[0]
    cdef Py_ssize_t i, t, k
    cdef double px, py, vx, vy, ux, uy, ex, ey, qx, qy
    cdef double dx, dy, fx, fy, len2, s, nx, ny, r2
    cdef bint hit

    for i in range(n):
        px = x0_px
        py = x0_py
        vx = x0_vx
        vy = x0_vy
        states[i, 0, 0] = px
        states[i, 0, 1] = py
        states[i, 0, 2] = vx
        states[i, 0, 3] = vy
        for t in range(horizon):
            ux = u[i, t, 0]
            uy = u[i, t, 1]
            ex = px - gx
            ey = py - gy
            costs[i] += (w_pos * (ex * ex + ey * ey)
                         + w_vel * (vx * vx + vy * vy)
                         + w_ctrl * (ux * ux + uy * uy))

            qx = px + vx * dt
            qy = py + vy * dt

            if not crashed[i]:
                hit = False
                dx = qx - px
                dy = qy - py
                len2 = dx * dx + dy * dy
                for k in range(n_obs):
                    fx = px - obs[k, 0]
                    fy = py - obs[k, 1]
                    r2 = obs[k, 2] * obs[k, 2]
                    if len2 > 0.0:
                        s = -(fx * dx + fy * dy) / len2
                        if s < 0.0:
                            s = 0.0
                        elif s > 1.0:
                            s = 1.0
                    else:
                        s = 0.0
                    nx = fx + s * dx
                    ny = fy + s * dy
                    if nx * nx + ny * ny <= r2:
                        hit = True
                        break
                if hit:
                    crashed[i] = 1
                else:
                    px = qx
                    py = qy
                    vx = vx + ux * dt + sigma_dyn * w[i, t, 0]
                    vy = vy + uy * dt + sigma_dyn * w[i, t, 1]

            states[i, t + 1, 0] = px
            states[i, t + 1, 1] = py
            states[i, t + 1, 2] = vx
            states[i, t + 1, 3] = vy

        ex = px - gx
        ey = py - gy
        costs[i] += wt_pos * (ex * ex + ey * ey) + wt_vel * (vx * vx + vy * vy)

    return states_arr, costs_arr, crashed_arr.astype(bool)
