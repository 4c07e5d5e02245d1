"""Exponential families described by their log-partition function.

A family enters the analysis only through ``A``, its gradient (the mean map)
and its Hessian (the Fisher information).  Every map accepts a single
parameter vector of shape ``(d,)`` or a batch of shape ``(..., d)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DimensionError, ModelError

Array = np.ndarray


def _whole_space(phi: Array) -> bool:
    return bool(np.all(np.isfinite(phi)))


@dataclass(frozen=True, eq=False)
class ExpFamModel:
    """An exponential family given by ``(A, grad A, hess A, domain)``.

    ``fisher_diag`` is set when the Fisher matrix is diagonal and
    ``constant_fisher`` when it does not depend on the parameter; the ray
    geometry uses both to skip dense eigensolves.
    """

    family: str
    dim: int
    log_partition: Callable[[Array], Array]
    mean: Callable[[Array], Array]
    fisher: Callable[[Array], Array]
    domain: Callable[[Array], bool] = _whole_space
    fisher_diag: Optional[Callable[[Array], Array]] = None
    constant_fisher: bool = False
    matrix: Optional[Array] = field(default=None, repr=False)

    def check(self, phi) -> Array:
        """Coerce ``phi`` to a float vector of the model dimension."""
        arr = np.asarray(phi, dtype=float)
        if arr.ndim == 0:
            arr = arr.reshape(1)
        if arr.ndim != 1 or arr.shape[0] != self.dim:
            raise DimensionError(
                f"{self.family} model has dimension {self.dim}, got shape {arr.shape}"
            )
        return arr


def as_params(values) -> Array:
    """Validate a natural-parameter vector: 1-d, non-empty, finite."""
    arr = np.atleast_1d(np.asarray(values, dtype=float))
    if arr.ndim != 1 or arr.size < 1:
        raise DimensionError(f"natural parameters must be a non-empty vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ModelError("natural parameters must be finite")
    return arr


def softplus(x):
    """``log(1 + e^x)`` without overflow."""
    x = np.asarray(x, dtype=float)
    return np.log1p(np.exp(-np.abs(x))) + np.maximum(x, 0.0)


def sigmoid(x):
    x = np.asarray(x, dtype=float)
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def sigmoid_slope(x):
    """``sigmoid(x) * (1 - sigmoid(x))``, accurate in both tails."""
    e = np.exp(-np.abs(np.asarray(x, dtype=float)))
    return e / (1.0 + e) ** 2


def make_bernoulli_product(d: int) -> ExpFamModel:
    """Product of ``d`` independent Bernoulli laws in logit coordinates.

    ``A(phi) = sum_i log(1 + exp(phi_i))`` with diagonal Fisher
    ``sigmoid(phi_i)(1 - sigmoid(phi_i))``, each entry in ``(0, 1/4]``.
    """
    if int(d) != d or d < 1:
        raise DimensionError(f"dimension must be a positive integer, got {d!r}")
    d = int(d)

    def log_partition(phi):
        return softplus(phi).sum(axis=-1)

    def mean(phi):
        return sigmoid(phi)

    def fisher(phi):
        h = sigmoid_slope(phi)
        out = np.zeros(h.shape + (d,))
        idx = np.arange(d)
        out[..., idx, idx] = h
        return out

    return ExpFamModel(
        family="bernoulli",
        dim=d,
        log_partition=log_partition,
        mean=mean,
        fisher=fisher,
        fisher_diag=sigmoid_slope,
    )


def _check_spd(m: Array) -> Array:
    m = np.array(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise ModelError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ModelError("matrix has non-finite entries")
    scale = np.maximum(np.abs(m), np.abs(m.T))
    if np.any(np.abs(m - m.T) > 1e-12 * np.maximum(scale, 1e-300)):
        raise ModelError("matrix is not symmetric")
    try:
        np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        raise ModelError("matrix is not positive definite") from None
    return m


def make_quadratic(M) -> ExpFamModel:
    """Fixed-covariance Gaussian family: ``A(phi) = phi' M phi / 2``.

    ``M = I`` is the unit-covariance Gaussian location family.
    """
    m = _check_spd(M)
    m.setflags(write=False)
    d = m.shape[0]
    diagonal = bool(np.all(m == np.diag(np.diag(m))))
    diag = np.diag(m).copy()

    def log_partition(phi):
        phi = np.asarray(phi, dtype=float)
        return 0.5 * np.einsum("...i,...i->...", phi, phi @ m)

    def mean(phi):
        return np.asarray(phi, dtype=float) @ m

    def fisher(phi):
        phi = np.asarray(phi, dtype=float)
        return np.broadcast_to(m, phi.shape[:-1] + (d, d)).copy()

    def fisher_diag(phi):
        phi = np.asarray(phi, dtype=float)
        return np.broadcast_to(diag, phi.shape).copy()

    return ExpFamModel(
        family="quadratic",
        dim=d,
        log_partition=log_partition,
        mean=mean,
        fisher=fisher,
        fisher_diag=fisher_diag if diagonal else None,
        constant_fisher=True,
        matrix=m,
    )


def in_domain(model: ExpFamModel, phi) -> bool:
    """True iff ``phi`` lies in the model domain; raises on dimension mismatch."""
    return bool(model.domain(model.check(phi)))


def make_model(descriptor: dict) -> ExpFamModel:
    """Build a model from ``{"family", "dim", "spectrum"}``.

    ``spectrum`` is only used by the quadratic family and sets ``diag(M)``.
    """
    family = descriptor.get("family")
    dim = descriptor.get("dim")
    if family == "bernoulli":
        if descriptor.get("spectrum") is not None:
            raise ModelError("bernoulli models take no spectrum")
        return make_bernoulli_product(dim)
    if family == "quadratic":
        spectrum = descriptor.get("spectrum")
        if spectrum is None:
            spectrum = np.ones(dim)
        spectrum = np.asarray(spectrum, dtype=float)
        if spectrum.ndim != 1 or (dim is not None and spectrum.size != dim):
            raise DimensionError(f"spectrum length {spectrum.size} does not match dim {dim}")
        return make_quadratic(np.diag(spectrum))
    raise ModelError(f"unknown family {family!r}")
