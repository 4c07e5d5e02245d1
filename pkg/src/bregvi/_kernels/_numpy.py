"""Vectorized numpy implementations of the hot loops."""

import numpy as np


def _sigmoid_slope(x):
    e = np.exp(-np.abs(x))
    return e / (1.0 + e) ** 2


def bernoulli_ray_spectrum(phi_star, delta, s):
    pts = phi_star[None, :] + s[:, None] * delta[None, :]
    h = _sigmoid_slope(pts)
    return h.min(axis=1), h.max(axis=1)


def bernoulli_ray_quadform(phi_star, delta, s):
    pts = phi_star[None, :] + s[:, None] * delta[None, :]
    return _sigmoid_slope(pts) @ (delta * delta)


def _truncate(deltas, dist_tol):
    dist = np.sqrt(np.einsum("ij,ij->i", deltas, deltas))
    hit = np.flatnonzero(dist <= dist_tol)
    if hit.size:
        return deltas[: hit[0] + 1]
    return deltas


def ngd_path(delta0, etas, dist_tol):
    scale = np.cumprod(1.0 - etas)
    deltas = np.empty((etas.size + 1, delta0.size))
    deltas[0] = delta0
    deltas[1:] = scale[:, None] * delta0[None, :]
    return _truncate(deltas, dist_tol)


def gd_quadratic_path(matrix, delta0, gamma, max_iters, dist_tol):
    deltas = np.empty((max_iters + 1, delta0.size))
    deltas[0] = delta0
    n = 0
    if delta0 @ delta0 > dist_tol * dist_tol:
        d = delta0
        with np.errstate(over="ignore", invalid="ignore"):
            for k in range(max_iters):
                d = d - gamma * (matrix @ d)
                deltas[k + 1] = d
                n = k + 1
                if not np.all(np.isfinite(d)) or d @ d <= dist_tol * dist_tol:
                    break
    return deltas[: n + 1].copy()
