"""Negative ELBO of an exponential-family posterior in Bregman form.

With the joint in the same family as the approximation, the negative ELBO
is ``L(phi) = D_A(phi* || phi)``.  Its gradient is ``H(phi)(phi - phi*)`` and
its natural gradient is simply ``phi - phi*``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError
from .expfam import ExpFamModel, as_params

__all__ = [
    "BregmanObjective",
    "MonotonicityCheck",
    "bregman_divergence",
    "neg_elbo",
    "grad",
    "nat_grad",
    "three_point_gap",
    "monotonicity_check",
    "kl_oracle_bernoulli",
]


def _point(model: ExpFamModel, phi) -> np.ndarray:
    arr = model.check(phi)
    if not model.domain(arr):
        raise DomainError(f"{arr} is outside the {model.family} domain")
    return arr


def bregman_divergence(model: ExpFamModel, u, v) -> float:
    """``D_A(u || v) = A(u) - A(v) - <grad A(v), u - v>``."""
    u = _point(model, u)
    v = _point(model, v)
    A = model.log_partition
    return float(A(u) - A(v) - model.mean(v) @ (u - v))


@dataclass(frozen=True, eq=False)
class BregmanObjective:
    """Negative ELBO ``phi -> D_A(optimum || phi)`` for a fixed optimum."""

    model: ExpFamModel
    optimum: np.ndarray

    def __post_init__(self):
        opt = as_params(self.optimum)
        opt = _point(self.model, opt)
        opt.setflags(write=False)
        object.__setattr__(self, "optimum", opt)

    @property
    def dim(self) -> int:
        return self.model.dim

    def point(self, phi) -> np.ndarray:
        return _point(self.model, phi)

    def delta(self, phi) -> np.ndarray:
        return _point(self.model, phi) - self.optimum

    def batch_loss(self, phis) -> np.ndarray:
        """Vectorized ``L`` over rows of ``phis`` (no domain checks)."""
        phis = np.asarray(phis, dtype=float)
        A = self.model.log_partition
        mu = self.model.mean(phis)
        return A(self.optimum) - A(phis) - np.einsum("...i,...i->...", mu, self.optimum - phis)


def neg_elbo(obj: BregmanObjective, phi) -> float:
    """``L(phi) = A(phi*) - A(phi) - <mu(phi), phi* - phi>``."""
    return bregman_divergence(obj.model, obj.optimum, phi)


def grad(obj: BregmanObjective, phi) -> np.ndarray:
    """Euclidean gradient ``H(phi) (phi - phi*)``."""
    phi = obj.point(phi)
    return obj.model.fisher(phi) @ (phi - obj.optimum)


def nat_grad(obj: BregmanObjective, phi) -> np.ndarray:
    """Natural gradient ``H(phi)^{-1} grad L(phi)``, which equals ``phi - phi*``.

    Computed by subtraction; no linear solve is involved.
    """
    return obj.delta(phi)


def three_point_gap(model: ExpFamModel, u, v, w) -> tuple[float, float]:
    """Both sides of the Bregman three-point identity.

    Returns ``(lhs, rhs)`` with
    ``lhs = D(u||v) - D(u||w) - <mu(w) - mu(v), u - w>`` and ``rhs = D(w||v)``;
    they agree exactly in real arithmetic.
    """
    u = _point(model, u)
    v = _point(model, v)
    w = _point(model, w)
    lhs = (
        bregman_divergence(model, u, v)
        - bregman_divergence(model, u, w)
        - float((model.mean(w) - model.mean(v)) @ (u - w))
    )
    return lhs, bregman_divergence(model, w, v)


@dataclass(frozen=True)
class MonotonicityCheck:
    lhs: float
    rhs: float
    slack: float


def monotonicity_check(obj: BregmanObjective, phi, phi_prime) -> MonotonicityCheck:
    """Evaluate ``L(phi') >= L(phi) + <phi - phi*, mu(phi') - mu(phi)>``.

    The slack equals ``D_A(phi || phi')``, hence is non-negative.
    """
    phi = obj.point(phi)
    phi_prime = obj.point(phi_prime)
    mu = obj.model.mean
    lhs = neg_elbo(obj, phi_prime)
    rhs = neg_elbo(obj, phi) + float((phi - obj.optimum) @ (mu(phi_prime) - mu(phi)))
    return MonotonicityCheck(lhs=lhs, rhs=rhs, slack=lhs - rhs)


def _log_sigmoid(x):
    return -np.logaddexp(0.0, -x)


def kl_oracle_bernoulli(phi_star, phi) -> float:
    """KL(Bern(sigmoid(phi)) || Bern(sigmoid(phi*))) summed over coordinates.

    Works in mean coordinates only, so it is independent of the
    log-partition path used by :func:`neg_elbo`.
    """
    phi_star = as_params(phi_star)
    phi = as_params(phi)
    if phi_star.shape != phi.shape:
        raise DimensionError(f"shape mismatch {phi_star.shape} vs {phi.shape}")
    p = np.exp(_log_sigmoid(phi))
    q = np.exp(_log_sigmoid(-phi))
    kl = p * (_log_sigmoid(phi) - _log_sigmoid(phi_star)) + q * (
        _log_sigmoid(-phi) - _log_sigmoid(-phi_star)
    )
    return float(kl.sum())
