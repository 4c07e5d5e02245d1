"""Compiled loop kernels; same contracts as the numpy versions."""

import math

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def _sigmoid_slope(x):
    e = math.exp(-abs(x))
    return e / ((1.0 + e) * (1.0 + e))


@njit(cache=True, nogil=True)
def bernoulli_ray_spectrum(phi_star, delta, s):
    n = s.size
    lo = np.empty(n)
    hi = np.empty(n)
    for j in range(n):
        mn = np.inf
        mx = -np.inf
        for i in range(delta.size):
            v = _sigmoid_slope(phi_star[i] + s[j] * delta[i])
            if v < mn:
                mn = v
            if v > mx:
                mx = v
        lo[j] = mn
        hi[j] = mx
    return lo, hi


@njit(cache=True, nogil=True)
def bernoulli_ray_quadform(phi_star, delta, s):
    out = np.empty(s.size)
    for j in range(s.size):
        acc = 0.0
        for i in range(delta.size):
            acc += _sigmoid_slope(phi_star[i] + s[j] * delta[i]) * delta[i] * delta[i]
        out[j] = acc
    return out


@njit(cache=True, nogil=True)
def _sqnorm(v):
    acc = 0.0
    for i in range(v.size):
        acc += v[i] * v[i]
    return acc


@njit(cache=True, nogil=True)
def ngd_path(delta0, etas, dist_tol):
    d = delta0.size
    deltas = np.empty((etas.size + 1, d))
    deltas[0] = delta0
    tol2 = dist_tol * dist_tol
    n = 0
    if _sqnorm(delta0) > tol2:
        for k in range(etas.size):
            f = 1.0 - etas[k]
            for i in range(d):
                deltas[k + 1, i] = f * deltas[k, i]
            n = k + 1
            if _sqnorm(deltas[k + 1]) <= tol2:
                break
    return deltas[: n + 1].copy()


@njit(cache=True, nogil=True)
def gd_quadratic_path(matrix, delta0, gamma, max_iters, dist_tol):
    d = delta0.size
    deltas = np.empty((max_iters + 1, d))
    deltas[0] = delta0
    tol2 = dist_tol * dist_tol
    n = 0
    if _sqnorm(delta0) > tol2:
        for k in range(max_iters):
            finite = True
            for i in range(d):
                acc = 0.0
                for j in range(d):
                    acc += matrix[i, j] * deltas[k, j]
                v = deltas[k, i] - gamma * acc
                deltas[k + 1, i] = v
                if not math.isfinite(v):
                    finite = False
            n = k + 1
            if not finite or _sqnorm(deltas[k + 1]) <= tol2:
                break
    return deltas[: n + 1].copy()
