"""Spectral geometry of the Fisher matrix along the ray from the optimum.

For a point ``phi`` the ray is ``phi_s = phi* + s (phi - phi*)``, ``s`` in
``[0, 1]``.  The envelope ``(alpha, beta)`` is the smallest ``lambda_min``
and largest ``lambda_max`` of ``H(phi_s)`` over the ray.  We estimate both on
a uniform closed grid of odd size, so ``s = 0, 1/2, 1`` are always nodes.
The grid minimum can only overshoot the true infimum (and the grid maximum
undershoot the supremum); :func:`grid_tolerance` bounds that bias.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ModelError, PreconditionError
from .objective import BregmanObjective, grad, neg_elbo

DEFAULT_GRID = 257
DEFAULT_PANELS = 2048


@dataclass(frozen=True, eq=False)
class RayEnvelope:
    """Grid estimate of ``alpha(phi)`` and ``beta(phi)`` plus the samples."""

    alpha: float
    beta: float
    s: np.ndarray
    lam_min: np.ndarray
    lam_max: np.ndarray
    grid_size: int
    origin: np.ndarray
    endpoint: np.ndarray
    alpha_exact: bool = False
    beta_exact: bool = False

    @property
    def samples(self) -> list[tuple[float, float, float]]:
        return list(zip(self.s.tolist(), self.lam_min.tolist(), self.lam_max.tolist()))


@dataclass(frozen=True)
class OnePointReport:
    inner: float
    delta_sq: float
    L: float
    grad_lower: float
    grad_upper: float
    pl_lower: float
    pl_upper: float


def ray_point(phi_star, phi, s: float) -> np.ndarray:
    if not 0.0 <= s <= 1.0:
        raise PreconditionError(f"s must lie in [0, 1], got {s}")
    phi_star = np.asarray(phi_star, dtype=float)
    return phi_star + s * (np.asarray(phi, dtype=float) - phi_star)


def ray_grid(grid_size: int) -> np.ndarray:
    """``s_i = i / (n - 1)``; doubling the interval count keeps old nodes bit-exact."""
    n = int(grid_size)
    if n != grid_size or n < 3 or n % 2 == 0:
        raise PreconditionError(f"grid_size must be an odd integer >= 3, got {grid_size}")
    return np.arange(n, dtype=float) / (n - 1)


def sym_eig_extremes(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Extreme eigenvalues of a (batch of) symmetric matrices.

    Closed forms for ``d <= 2``, LAPACK ``eigvalsh`` otherwise.
    """
    d = m.shape[-1]
    if d == 1:
        return m[..., 0, 0], m[..., 0, 0]
    if d == 2:
        a, b, c = m[..., 0, 0], m[..., 0, 1], m[..., 1, 1]
        mid = 0.5 * (a + c)
        rad = np.hypot(0.5 * (a - c), b)
        return mid - rad, mid + rad
    w = np.linalg.eigvalsh(m)
    return w[..., 0], w[..., -1]


def _ray_spectrum(obj: BregmanObjective, delta: np.ndarray, s: np.ndarray):
    model = obj.model
    if model.constant_fisher:
        lo, hi = sym_eig_extremes(model.fisher(obj.optimum))
        return np.full(s.size, float(lo)), np.full(s.size, float(hi))
    if model.family == "bernoulli":
        return _kernels.bernoulli_ray_spectrum(obj.optimum, delta, s)
    pts = obj.optimum[None, :] + s[:, None] * delta[None, :]
    if model.fisher_diag is not None:
        h = model.fisher_diag(pts)
        return h.min(axis=1), h.max(axis=1)
    return sym_eig_extremes(model.fisher(pts))


def spectral_envelope(obj: BregmanObjective, phi, grid_size: int = DEFAULT_GRID) -> RayEnvelope:
    """Grid envelope of the Fisher spectrum along ``phi* -> phi``."""
    s = ray_grid(grid_size)
    phi = obj.point(phi)
    delta = phi - obj.optimum
    lam_min, lam_max = _ray_spectrum(obj, delta, s)
    lam_min = np.asarray(lam_min, dtype=float)
    lam_max = np.asarray(lam_max, dtype=float)
    if not (np.all(np.isfinite(lam_min)) and np.all(np.isfinite(lam_max))):
        raise ModelError("Fisher evaluation failed along the ray")
    return RayEnvelope(
        alpha=float(lam_min.min()),
        beta=float(lam_max.max()),
        s=s,
        lam_min=lam_min,
        lam_max=lam_max,
        grid_size=int(grid_size),
        origin=obj.optimum.copy(),
        endpoint=phi.copy(),
        alpha_exact=obj.model.constant_fisher or obj.model.family == "bernoulli",
        beta_exact=obj.model.constant_fisher,
    )


def grid_tolerance(env: RayEnvelope) -> float:
    """Largest adjacent-sample jump in either spectral curve.

    This is ``C_L * ds`` with ``C_L`` the observed Lipschitz modulus, an
    upper bound on how far a grid extremum can sit from the continuum one.
    Zero for constant-Fisher families.
    """
    jumps = [np.abs(np.diff(env.lam_min)).max(), np.abs(np.diff(env.lam_max)).max()]
    return float(max(jumps))


def envelope_bracket(env: RayEnvelope) -> tuple[float, float]:
    """``(alpha_lo, beta_hi)`` guaranteed to contain the continuum envelope.

    Each side is widened by :func:`grid_tolerance` unless the grid value is
    already exact.  For Bernoulli products every coordinate slope is unimodal
    along the ray, so the infimum sits at an endpoint, which is a grid node.
    """
    tol = grid_tolerance(env)
    lo = env.alpha if env.alpha_exact else env.alpha - tol
    hi = env.beta if env.beta_exact else env.beta + tol
    return lo, hi


def ray_integrand(obj: BregmanObjective, phi, s: np.ndarray) -> np.ndarray:
    """``s * delta' H(phi_s) delta`` evaluated at each ``s``."""
    delta = obj.delta(phi)
    s = np.asarray(s, dtype=float)
    model = obj.model
    if model.family == "bernoulli":
        q = _kernels.bernoulli_ray_quadform(obj.optimum, delta, s)
    elif model.constant_fisher:
        q = np.full(s.size, float(delta @ model.fisher(obj.optimum) @ delta))
    else:
        pts = obj.optimum[None, :] + s[:, None] * delta[None, :]
        q = np.einsum("i,kij,j->k", delta, model.fisher(pts), delta)
    return s * q


def integral_neg_elbo(obj: BregmanObjective, phi, panels: int = DEFAULT_PANELS) -> float:
    """``L(phi)`` recovered as ``int_0^1 s delta' H(phi_s) delta ds`` (composite Simpson)."""
    n = int(panels)
    if n != panels or n < 2 or n % 2:
        raise PreconditionError(f"panels must be an even integer >= 2, got {panels}")
    s = np.arange(n + 1, dtype=float) / n
    f = ray_integrand(obj, phi, s)
    w = np.ones(n + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return float(w @ f) / (3.0 * n)


def _check_ray(obj: BregmanObjective, phi: np.ndarray, env: RayEnvelope) -> None:
    if not (np.array_equal(env.origin, obj.optimum) and np.array_equal(env.endpoint, phi)):
        raise PreconditionError("envelope was computed on a different ray")


def quadratic_bounds(obj: BregmanObjective, phi, env: RayEnvelope) -> tuple[float, float]:
    """``(alpha/2 ||delta||^2, beta/2 ||delta||^2)``, which sandwich ``L(phi)``."""
    phi = obj.point(phi)
    _check_ray(obj, phi, env)
    dsq = float((phi - obj.optimum) @ (phi - obj.optimum))
    return 0.5 * env.alpha * dsq, 0.5 * env.beta * dsq


def sandwich_holds(obj: BregmanObjective, phi, env: RayEnvelope, tol: float | None = None) -> bool:
    """Check the quadratic sandwich allowing for grid bias (eigenvalue units).

    By default each side is widened as in :func:`envelope_bracket`; an
    explicit ``tol`` widens both.  A relative ``1e-12`` covers rounding.
    """
    phi = obj.point(phi)
    _check_ray(obj, phi, env)
    if tol is None:
        lo, hi = envelope_bracket(env)
    else:
        lo, hi = env.alpha - tol, env.beta + tol
    dsq = float(obj.delta(phi) @ obj.delta(phi))
    L = neg_elbo(obj, phi)
    eps = 1e-12 * (1.0 + abs(L))
    return bool(0.5 * lo * dsq <= L + eps and L <= 0.5 * hi * dsq + eps)


def one_point_report(obj: BregmanObjective, phi, env: RayEnvelope) -> OnePointReport:
    """Gradient-direction bounds and the PL-type pair with ray constants."""
    if not env.alpha > 0:
        raise PreconditionError(f"one-point bounds need alpha > 0, got {env.alpha}")
    phi = obj.point(phi)
    _check_ray(obj, phi, env)
    delta = phi - obj.optimum
    inner = float(grad(obj, phi) @ delta)
    dsq = float(delta @ delta)
    L = neg_elbo(obj, phi)
    a, b = env.alpha, env.beta
    return OnePointReport(
        inner=inner,
        delta_sq=dsq,
        L=L,
        grad_lower=a * dsq,
        grad_upper=b * dsq,
        pl_lower=2.0 * a / b * L,
        pl_upper=2.0 * b / a * L,
    )


def condition_number(env: RayEnvelope) -> float:
    if not env.alpha > 0:
        raise PreconditionError(f"condition number needs alpha > 0, got {env.alpha}")
    return env.beta / env.alpha
