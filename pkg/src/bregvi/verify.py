"""Independent numerical oracles used to validate the closed forms.

Nothing here is used on the optimization path.  The eigensolver and the
Cholesky solve are written out by hand so that they share no code with the
LAPACK routines the rest of the package calls.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .errors import OracleError, PreconditionError

GRAD_STEP = 1e-5
HESS_STEP = 1e-4


def philox_rng(seed: int) -> np.random.Generator:
    """Counter-based generator: identical streams on every platform."""
    return np.random.Generator(np.random.Philox(int(seed)))


def _eval(f: Callable, x: np.ndarray) -> float:
    y = float(f(x))
    if not math.isfinite(y):
        raise OracleError(f"non-finite function value at {x}")
    return y


def fd_gradient(f: Callable, phi, h: float = GRAD_STEP) -> np.ndarray:
    """Central differences ``(f(x + h e_i) - f(x - h e_i)) / 2h``."""
    if not h > 0:
        raise PreconditionError(f"step must be positive, got {h}")
    x = np.asarray(phi, dtype=float).ravel()
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (_eval(f, x + e) - _eval(f, x - e)) / (2.0 * h)
    return g


def fd_hessian(f: Callable, phi, h: float = HESS_STEP) -> np.ndarray:
    """Second-order central stencil, symmetrized."""
    if not h > 0:
        raise PreconditionError(f"step must be positive, got {h}")
    x = np.asarray(phi, dtype=float).ravel()
    d = x.size
    f0 = _eval(f, x)
    out = np.empty((d, d))
    basis = np.eye(d) * h
    for i in range(d):
        ei = basis[i]
        out[i, i] = (_eval(f, x + ei) - 2.0 * f0 + _eval(f, x - ei)) / (h * h)
        for j in range(i + 1, d):
            ej = basis[j]
            v = (
                _eval(f, x + ei + ej)
                - _eval(f, x + ei - ej)
                - _eval(f, x - ei + ej)
                + _eval(f, x - ei - ej)
            ) / (4.0 * h * h)
            out[i, j] = out[j, i] = v
    return 0.5 * (out + out.T)


def simpson(f: Callable[[float], float], a: float, b: float, panels: int) -> float:
    """Composite Simpson rule on ``panels`` (even) equal subintervals."""
    n = int(panels)
    if n != panels or n < 2 or n % 2:
        raise PreconditionError(f"panels must be an even integer >= 2, got {panels}")
    h = (b - a) / n
    total = 0.0
    for i in range(n + 1):
        y = float(f(a + (b - a) * i / n))
        if not math.isfinite(y):
            raise OracleError(f"non-finite integrand at panel node {i}")
        w = 1.0 if i in (0, n) else (4.0 if i % 2 else 2.0)
        total += w * y
    return total * h / 3.0


def _check_symmetric(m) -> np.ndarray:
    m = np.array(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise PreconditionError(f"expected a square matrix, got shape {m.shape}")
    scale = max(1.0, float(np.abs(m).max(initial=0.0)))
    if np.abs(m - m.T).max(initial=0.0) > 1e-12 * scale:
        raise PreconditionError("matrix is not symmetric")
    return 0.5 * (m + m.T)


def jacobi_eigenvalues(m, tol: float = 1e-15, max_sweeps: int = 100) -> np.ndarray:
    """All eigenvalues of a symmetric matrix by cyclic Jacobi rotations."""
    a = _check_symmetric(m)
    d = a.shape[0]
    scale = np.linalg.norm(a)
    mask = ~np.eye(d, dtype=bool)
    for _ in range(max_sweeps):
        off = float(np.linalg.norm(a[mask]))
        if off <= tol * scale:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                cp = a[:, p].copy()
                cq = a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
    else:
        raise OracleError("Jacobi iteration did not converge")
    return np.sort(np.diag(a))


def eig_extremes(m) -> tuple[float, float]:
    """``(lambda_min, lambda_max)`` of a symmetric matrix.

    For ``d <= 2`` the Jacobi result is cross-checked against the closed form.
    """
    a = _check_symmetric(m)
    w = jacobi_eigenvalues(a)
    lo, hi = float(w[0]), float(w[-1])
    d = a.shape[0]
    if d == 2:
        mid = 0.5 * (a[0, 0] + a[1, 1])
        rad = math.hypot(0.5 * (a[0, 0] - a[1, 1]), a[0, 1])
        ref = (mid - rad, mid + rad)
    elif d == 1:
        ref = (a[0, 0], a[0, 0])
    else:
        return lo, hi
    tol = 1e-12 * (1.0 + max(abs(ref[0]), abs(ref[1])))
    if abs(lo - ref[0]) > tol or abs(hi - ref[1]) > tol:
        raise OracleError("Jacobi and closed-form eigenvalues disagree")
    return lo, hi


def solve_spd(m, b) -> np.ndarray:
    """Solve ``M x = b`` by a hand-written Cholesky factorization."""
    a = _check_symmetric(m)
    b = np.asarray(b, dtype=float)
    d = a.shape[0]
    if b.shape != (d,):
        raise PreconditionError(f"right-hand side has shape {b.shape}, expected ({d},)")
    low = np.zeros_like(a)
    for j in range(d):
        pivot = a[j, j] - low[j, :j] @ low[j, :j]
        if not pivot > 0:
            raise PreconditionError(f"matrix is not positive definite (pivot {j} = {pivot})")
        low[j, j] = math.sqrt(pivot)
        for i in range(j + 1, d):
            low[i, j] = (a[i, j] - low[i, :j] @ low[j, :j]) / low[j, j]
    y = np.empty(d)
    for i in range(d):
        y[i] = (b[i] - low[i, :i] @ y[:i]) / low[i, i]
    x = np.empty(d)
    for i in reversed(range(d)):
        x[i] = (y[i] - low[i + 1 :, i] @ x[i + 1 :]) / low[i, i]
    return x


@dataclass(frozen=True)
class FdReport:
    max_rel_err: float
    worst_point: np.ndarray
    step: float


def fd_sweep(
    analytic: Callable[[np.ndarray], np.ndarray],
    numeric: Callable[[np.ndarray], np.ndarray],
    points: Iterable,
    step: float,
) -> FdReport:
    """Max over ``points`` of ``||analytic - numeric|| / (1 + ||analytic||)``."""
    worst, worst_pt = -1.0, None
    for p in points:
        p = np.asarray(p, dtype=float)
        a = np.asarray(analytic(p), dtype=float)
        err = float(np.linalg.norm(a - numeric(p)) / (1.0 + np.linalg.norm(a)))
        if err > worst:
            worst, worst_pt = err, p
    if worst_pt is None:
        raise PreconditionError("empty sweep")
    return FdReport(max_rel_err=worst, worst_point=worst_pt, step=step)
