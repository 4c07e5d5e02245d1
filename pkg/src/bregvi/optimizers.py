"""Gradient descent and natural gradient descent on the negative ELBO.

Iterations are carried out on the error vector ``delta_k = phi_k - phi*``
and iterates are reported as ``phi* + delta_k``.  Tracking ``delta`` keeps
the NGD recursion ``delta_{k+1} = (1 - eta_k) delta_k`` exact even once
``phi_k`` agrees with ``phi*`` to more digits than a float can hold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from .errors import DivergenceError, PreconditionError
from .objective import BregmanObjective, grad
from .raygeom import DEFAULT_GRID, spectral_envelope

KINDS = ("constant", "diminishing", "optimal")
METHODS = ("gd", "ngd")
DEFAULT_MAX_ITERS = 100_000
DEFAULT_DIST_TOL = 1e-10
TINY = 1e-300


@dataclass(frozen=True)
class StepSchedule:
    """Step sizes for either method.

    ``constant``: every step is ``value``.  ``diminishing``: the step taken
    at iteration ``i >= 1`` is ``value / i``.  ``optimal`` (GD only): the
    step ``2 / (alpha_k + beta_k)`` from the envelope at the current iterate.
    """

    kind: str = "constant"
    value: float = 0.5

    def __post_init__(self):
        if self.kind not in KINDS:
            raise PreconditionError(f"unknown schedule kind {self.kind!r}")
        if self.kind != "optimal" and not (math.isfinite(self.value) and self.value > 0):
            raise PreconditionError(f"step value must be positive, got {self.value}")
        if self.kind == "diminishing" and not self.value < 1:
            raise PreconditionError(f"diminishing schedule needs 0 < c < 1, got {self.value}")

    def validate(self, method: str) -> None:
        if method not in METHODS:
            raise PreconditionError(f"unknown method {method!r}")
        if method == "ngd":
            if self.kind == "optimal":
                raise PreconditionError("the optimal schedule applies to GD only")
            if self.kind == "constant" and not self.value < 2:
                raise PreconditionError(f"constant NGD needs 0 < eta < 2, got {self.value}")

    def step(self, i: int) -> float:
        """Step size at iteration ``i >= 1``."""
        if self.kind == "constant":
            return self.value
        if self.kind == "diminishing":
            return self.value / i
        raise PreconditionError("optimal steps depend on the iterate")

    def steps(self, n: int) -> np.ndarray:
        if self.kind == "constant":
            return np.full(n, float(self.value))
        return self.value / np.arange(1, n + 1, dtype=float)


@dataclass(eq=False)
class Trajectory:
    """Record of one optimizer run.

    ``contraction[k]`` is ``dist[k+1] / dist[k]`` or ``None`` once
    ``dist[k]`` has underflowed.  ``alpha``/``beta`` hold the envelope at
    each stepped-from iterate when the run computed one.
    """

    method: str
    optimum: np.ndarray
    deltas: np.ndarray
    loss: np.ndarray
    steps: np.ndarray
    alpha: Optional[np.ndarray] = None
    beta: Optional[np.ndarray] = None
    dist: np.ndarray = field(init=False)
    contraction: list = field(init=False)
    collinearity: np.ndarray = field(init=False)

    def __post_init__(self):
        self.dist = error_norms(self.deltas)
        self.contraction = [
            float(b / a) if a >= TINY else None for a, b in zip(self.dist[:-1], self.dist[1:])
        ]
        self.collinearity = collinearity_residuals(self.deltas)

    @property
    def iterates(self) -> np.ndarray:
        return self.optimum[None, :] + self.deltas

    @property
    def n_steps(self) -> int:
        return self.deltas.shape[0] - 1

    def iterations_to(self, tol: float) -> Optional[int]:
        """First ``k`` with ``dist[k] <= tol``, or ``None``."""
        hit = np.flatnonzero(self.dist <= tol)
        return int(hit[0]) if hit.size else None


def error_norms(deltas: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        out = np.linalg.norm(deltas, axis=1)
    bad = (out < 1e-150) | (out > 1e150)
    if bad.any():
        # squares under- or overflow here; rescale by the largest entry first
        sub = deltas[bad]
        scale = np.abs(sub).max(axis=1)
        safe = np.where((scale > 0) & np.isfinite(scale), scale, 1.0)
        with np.errstate(invalid="ignore"):
            out[bad] = scale * np.linalg.norm(sub / safe[:, None], axis=1)
    return out


def collinearity_residuals(deltas: np.ndarray) -> np.ndarray:
    """``||delta_k - (delta_k . u) u||`` with ``u`` the initial direction."""
    n0 = error_norms(deltas[:1])[0]
    if n0 < TINY:
        return np.zeros(deltas.shape[0])
    u = deltas[0] / n0
    with np.errstate(over="ignore", invalid="ignore"):
        return error_norms(deltas - np.outer(deltas @ u, u))


def _finite(phi: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(phi)):
        raise DivergenceError("iteration produced non-finite values")
    return phi


def _clamp(phi: np.ndarray, box: Optional[float]) -> np.ndarray:
    return phi if box is None else np.clip(phi, -box, box)


def gd_step(obj: BregmanObjective, phi, gamma: float, box: Optional[float] = None) -> np.ndarray:
    """``phi - gamma * H(phi)(phi - phi*)``, optionally clamped to ``[-box, box]^d``."""
    if not gamma > 0:
        raise PreconditionError(f"step size must be positive, got {gamma}")
    phi = obj.point(phi)
    return _clamp(_finite(phi - gamma * grad(obj, phi)), box)


def ngd_step(obj: BregmanObjective, phi, eta: float) -> np.ndarray:
    """``phi* + (1 - eta)(phi - phi*)``, the closed form of the natural-gradient step."""
    if not eta > 0:
        raise PreconditionError(f"step size must be positive, got {eta}")
    return obj.optimum + (1.0 - eta) * obj.delta(phi)


def optimal_gd_step(alpha: float, beta: float) -> float:
    """``2 / (alpha + beta)``."""
    if not 0 < alpha <= beta:
        raise PreconditionError(f"need 0 < alpha <= beta, got ({alpha}, {beta})")
    return 2.0 / (alpha + beta)


def gd_contraction_factor(alpha: float, beta: float, gamma: float) -> float:
    """Worst-case GD contraction ``max(|1 - gamma alpha|, |1 - gamma beta|)``."""
    if not 0 < alpha <= beta:
        raise PreconditionError(f"need 0 < alpha <= beta, got ({alpha}, {beta})")
    if not gamma > 0:
        raise PreconditionError(f"step size must be positive, got {gamma}")
    return max(abs(1.0 - gamma * alpha), abs(1.0 - gamma * beta))


def ngd_theoretical_bounds(
    schedule: StepSchedule, k: int, dist0: float, kappa0: float
) -> tuple[float, float]:
    """Closed-form NGD guarantees after ``k`` steps.

    Constant ``eta``: ``(|1-eta|^k dist0, kappa0 |1-eta|^{2k})``.
    Diminishing: ``(exp(-S) dist0, kappa0 exp(-2S))`` with
    ``S = sum_{i=1}^{k-1} c / i``.
    """
    schedule.validate("ngd")
    if k < 0:
        raise PreconditionError(f"k must be non-negative, got {k}")
    if schedule.kind == "constant":
        r = abs(1.0 - schedule.value)
        return r**k * dist0, kappa0 * r ** (2 * k)
    total = float(schedule.steps(max(k - 1, 0)).sum())
    return math.exp(-total) * dist0, kappa0 * math.exp(-2.0 * total)


def _batch_loss(obj: BregmanObjective, deltas: np.ndarray) -> np.ndarray:
    loss = obj.batch_loss(obj.optimum[None, :] + deltas)
    if not np.all(np.isfinite(loss)):
        raise DivergenceError("loss became non-finite")
    return loss


def _stop_at_divergence(deltas: np.ndarray, on_divergence: str) -> np.ndarray:
    ok = np.all(np.isfinite(deltas), axis=1)
    if ok.all():
        return deltas
    if on_divergence == "raise":
        raise DivergenceError(f"iterate {int(np.argmin(ok))} is non-finite")
    return deltas[: int(np.argmin(ok))]


def run(
    obj: BregmanObjective,
    phi0,
    method: str,
    schedule: StepSchedule,
    max_iters: int = DEFAULT_MAX_ITERS,
    dist_tol: float = DEFAULT_DIST_TOL,
    *,
    grid_size: int = DEFAULT_GRID,
    box: Optional[float] = None,
    on_divergence: str = "raise",
) -> Trajectory:
    """Iterate GD or NGD from ``phi0`` until ``||delta|| <= dist_tol`` or ``max_iters``.

    ``on_divergence="stop"`` truncates the record before the first
    non-finite iterate instead of raising.
    """
    if max_iters < 1:
        raise PreconditionError(f"max_iters must be >= 1, got {max_iters}")
    if on_divergence not in ("raise", "stop"):
        raise PreconditionError(f"on_divergence must be 'raise' or 'stop', got {on_divergence!r}")
    schedule.validate(method)
    delta0 = np.ascontiguousarray(obj.delta(phi0))

    if method == "ngd":
        etas = schedule.steps(max_iters)
        deltas = _kernels.ngd_path(delta0, etas, float(dist_tol))
        return Trajectory(
            "ngd", obj.optimum, deltas, _batch_loss(obj, deltas), etas[: deltas.shape[0] - 1]
        )

    if schedule.kind == "constant" and obj.model.constant_fisher and box is None:
        m = np.ascontiguousarray(obj.model.fisher(obj.optimum))
        deltas = _kernels.gd_quadratic_path(
            m, delta0, float(schedule.value), int(max_iters), float(dist_tol)
        )
        deltas = _stop_at_divergence(deltas, on_divergence)
        if on_divergence == "raise":
            loss = _batch_loss(obj, deltas)
        else:
            with np.errstate(over="ignore", invalid="ignore"):
                loss = obj.batch_loss(obj.optimum[None, :] + deltas)
        n = deltas.shape[0] - 1
        return Trajectory("gd", obj.optimum, deltas, loss, np.full(n, float(schedule.value)))

    return _run_gd_generic(obj, delta0, schedule, max_iters, dist_tol, grid_size, box, on_divergence)


def _run_gd_generic(obj, delta0, schedule, max_iters, dist_tol, grid_size, box, on_divergence):
    deltas = [delta0]
    steps, alphas, betas = [], [], []
    d = delta0
    for i in range(1, max_iters + 1):
        if float(np.linalg.norm(d)) <= dist_tol:
            break
        phi = obj.optimum + d
        env = spectral_envelope(obj, phi, grid_size)
        alphas.append(env.alpha)
        betas.append(env.beta)
        if schedule.kind == "optimal":
            gamma = optimal_gd_step(env.alpha, env.beta)
        else:
            gamma = schedule.step(i)
        steps.append(gamma)
        new = d - gamma * (obj.model.fisher(phi) @ d)
        if box is not None:
            new = _clamp(obj.optimum + new, box) - obj.optimum
        if not np.all(np.isfinite(new)):
            if on_divergence == "raise":
                raise DivergenceError(f"GD diverged at iteration {i}")
            del steps[-1], alphas[-1], betas[-1]
            break
        deltas.append(new)
        d = new
    deltas = np.asarray(deltas)
    return Trajectory(
        "gd",
        obj.optimum,
        deltas,
        _batch_loss(obj, deltas),
        np.asarray(steps),
        alpha=np.asarray(alphas),
        beta=np.asarray(betas),
    )
