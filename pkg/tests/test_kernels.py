import os
import subprocess
import sys

import numpy as np
import pytest

from bregvi import _kernels
from bregvi.verify import philox_rng

NUMPY = _kernels.implementation("numpy")
NUMBA = _kernels.implementation("numba")


@pytest.fixture
def ray():
    rng = philox_rng(0)
    return rng.uniform(-3, 3, 7), rng.uniform(-6, 6, 7), np.arange(257) / 256


def test_ray_spectrum_agree(ray):
    a = NUMPY.bernoulli_ray_spectrum(*ray)
    b = NUMBA.bernoulli_ray_spectrum(*ray)
    np.testing.assert_allclose(a, b, rtol=1e-14)


def test_ray_quadform_agree(ray):
    np.testing.assert_allclose(
        NUMPY.bernoulli_ray_quadform(*ray), NUMBA.bernoulli_ray_quadform(*ray), rtol=1e-13
    )


@pytest.mark.parametrize("etas", [np.full(80, 0.5), 0.5 / np.arange(1, 500), np.full(3, 1.0)])
def test_ngd_path_agree(etas):
    d0 = philox_rng(1).uniform(-5, 5, 4)
    a = NUMPY.ngd_path(d0, etas, 1e-12)
    b = NUMBA.ngd_path(d0, etas, 1e-12)
    assert a.shape == b.shape
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=0)


def test_gd_path_agree():
    rng = philox_rng(2)
    q, _ = np.linalg.qr(rng.standard_normal((6, 6)))
    M = q @ np.diag(np.linspace(0.1, 1.0, 6)) @ q.T
    d0 = rng.uniform(-5, 5, 6)
    a = NUMPY.gd_quadratic_path(M, d0, 1.5, 400, 1e-10)
    b = NUMBA.gd_quadratic_path(M, d0, 1.5, 400, 1e-10)
    assert a.shape == b.shape
    np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-15)


def test_gd_path_stops_on_overflow():
    for impl in (NUMPY, NUMBA):
        out = impl.gd_quadratic_path(np.eye(1), np.ones(1), 3.0, 5000, 0.0)
        assert out.shape[0] < 5001
        assert not np.isfinite(out[-1]).all()


@pytest.mark.parametrize("backend", ["numpy", "numba"])
def test_env_flag(backend):
    env = dict(os.environ, BREGVI_BACKEND=backend)
    out = subprocess.run(
        [sys.executable, "-c", "import bregvi; print(bregvi.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == backend


def test_bad_flag():
    env = dict(os.environ, BREGVI_BACKEND="fortran")
    out = subprocess.run([sys.executable, "-c", "import bregvi"], env=env, capture_output=True, text=True)
    assert out.returncode != 0 and "BREGVI_BACKEND" in out.stderr
