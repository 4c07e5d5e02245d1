"""Hot numeric loops with a numba backend and a pure-numpy fallback.

The backend is chosen once at import time from ``BREGVI_BACKEND``
(``numba`` or ``numpy``; default ``numba``).  When numba is requested but
cannot be imported the numpy path is used instead.

Kernels take and return float64 numpy arrays:

``bernoulli_ray_spectrum(phi_star, delta, s)``
    min/max of the diagonal Bernoulli Fisher at each ray point.
``bernoulli_ray_quadform(phi_star, delta, s)``
    ``delta @ H(phi_s) @ delta`` at each ray point.
``ngd_path(delta0, etas, dist_tol)``
    error vectors of the NGD recursion, truncated at the first
    ``||delta|| <= dist_tol``.
``gd_quadratic_path(matrix, delta0, gamma, max_iters, dist_tol)``
    error vectors of constant-step GD on a quadratic log-partition.
"""

import logging
import os

from . import _numpy

log = logging.getLogger(__name__)

_KERNELS = (
    "bernoulli_ray_spectrum",
    "bernoulli_ray_quadform",
    "ngd_path",
    "gd_quadratic_path",
)


def _select(requested):
    if requested not in ("numba", "numpy"):
        raise ValueError(f"BREGVI_BACKEND must be 'numba' or 'numpy', got {requested!r}")
    if requested == "numba":
        try:
            from . import _numba
        except ImportError:  # pragma: no cover - numba is a hard dependency
            log.warning("numba unavailable, using the numpy kernels")
            return "numpy", _numpy
        return "numba", _numba
    return "numpy", _numpy


BACKEND, _impl = _select(os.environ.get("BREGVI_BACKEND", "numba").strip().lower())

bernoulli_ray_spectrum = _impl.bernoulli_ray_spectrum
bernoulli_ray_quadform = _impl.bernoulli_ray_quadform
ngd_path = _impl.ngd_path
gd_quadratic_path = _impl.gd_quadratic_path


def implementation(name):
    """Return the kernel module for backend ``name`` regardless of the env flag."""
    return _select(name)[1]


__all__ = ["BACKEND", "implementation", *_KERNELS]
