import math

import numpy as np
import pytest

from bregvi import OracleError, PreconditionError, make_bernoulli_product, make_quadratic
from bregvi.verify import (
    eig_extremes,
    fd_gradient,
    fd_hessian,
    fd_sweep,
    jacobi_eigenvalues,
    philox_rng,
    simpson,
    solve_spd,
)


def slope(x):
    e = math.exp(-abs(x))
    return e / (1 + e) ** 2


class TestFiniteDifferences:
    def test_linear_gradient(self):
        A = make_quadratic(np.eye(2)).log_partition
        np.testing.assert_allclose(fd_gradient(A, [1.0, 0.0]), [1.0, 0.0], atol=1e-9)

    def test_constant(self):
        np.testing.assert_allclose(fd_gradient(lambda x: 3.0, np.zeros(4)), 0.0, atol=1e-10)

    def test_second_order(self):
        f = lambda x: math.sin(x[0]) * math.exp(x[1])  # noqa: E731
        x = np.array([0.3, -0.2])
        exact = np.array([math.cos(0.3) * math.exp(-0.2), math.sin(0.3) * math.exp(-0.2)])
        errs = [np.linalg.norm(fd_gradient(f, x, h) - exact) for h in (1e-2, 1e-3, 1e-4)]
        assert errs[1] / errs[0] == pytest.approx(1e-2, rel=0.05)
        assert errs[2] / errs[1] == pytest.approx(1e-2, rel=0.05)

    def test_hessians(self):
        M = np.array([[2.0, 0.3], [0.3, 0.5]])
        np.testing.assert_allclose(fd_hessian(make_quadratic(M).log_partition, [1.0, -2.0]), M, atol=1e-4)
        A = make_bernoulli_product(3).log_partition
        assert fd_hessian(A, np.zeros(3))[0, 0] == pytest.approx(0.25, abs=1e-5)
        H = fd_hessian(A, [0.5, -1.0, 2.0])
        assert np.abs(H - np.diag(np.diag(H))).max() <= 1e-6

    def test_non_finite(self):
        with pytest.raises(OracleError):
            fd_gradient(lambda x: math.inf, [0.0])
        with pytest.raises(PreconditionError):
            fd_gradient(lambda x: 0.0, [0.0], 0.0)

    def test_sweep_report(self):
        rep = fd_sweep(lambda p: 2 * p, lambda p: 2 * p + (p[0] > 1) * 1e-3, [[0.0], [2.0]], 1e-5)
        assert rep.max_rel_err == pytest.approx(1e-3 / 5)
        np.testing.assert_array_equal(rep.worst_point, [2.0])


class TestSimpson:
    def test_exact_low_degree(self):
        assert simpson(lambda s: s, 0, 1, 2) == 0.5
        assert simpson(lambda s: s**3, 0, 1, 2) == 0.25

    def test_bernoulli_ray_integral(self):
        val = simpson(lambda s: 4 * s * slope(1 - 2 * s), 0, 1, 2048)
        assert val == pytest.approx(0.4621171572600098, rel=1e-8)

    def test_fourth_order(self):
        ref = simpson(lambda s: 4 * s * slope(1 - 2 * s), 0, 1, 4096)
        errs = [abs(simpson(lambda s: 4 * s * slope(1 - 2 * s), 0, 1, n) - ref) for n in (8, 16, 32, 64)]
        for a, b in zip(errs, errs[1:]):
            assert b / a == pytest.approx(1 / 16, rel=0.2)

    def test_odd_panels(self):
        with pytest.raises(PreconditionError):
            simpson(lambda s: s, 0, 1, 3)


class TestEigen:
    def test_known(self):
        assert eig_extremes(np.diag([0.2, 1.0])) == (0.2, 1.0)
        assert eig_extremes(np.eye(20)) == (1.0, 1.0)
        lo, hi = eig_extremes([[2.0, 1.0], [1.0, 2.0]])
        assert lo == pytest.approx(1.0, rel=1e-14) and hi == pytest.approx(3.0, rel=1e-14)

    @pytest.mark.parametrize("d", [2, 5, 20])
    def test_random_spd(self, d):
        rng = philox_rng(d)
        for _ in range(5):
            q, _ = np.linalg.qr(rng.standard_normal((d, d)))
            lam = rng.uniform(0.01, 10.0, d)
            M = q @ np.diag(lam) @ q.T
            M = 0.5 * (M + M.T)
            lo, hi = eig_extremes(M)
            assert lo == pytest.approx(lam.min(), rel=1e-10)
            assert hi == pytest.approx(lam.max(), rel=1e-10)
            np.testing.assert_allclose(jacobi_eigenvalues(M), np.sort(lam), rtol=1e-10)

    def test_asymmetric(self):
        with pytest.raises(PreconditionError):
            eig_extremes([[1.0, 2.0], [0.0, 1.0]])


class TestSolve:
    def test_known(self):
        b = np.array([0.3, -2.0, 5.0])
        np.testing.assert_array_equal(solve_spd(np.eye(3), b), b)
        np.testing.assert_allclose(solve_spd(np.diag([0.2, 1.0]), [0.2, 1.0]), [1.0, 1.0], rtol=1e-15)

    def test_residual(self):
        rng = philox_rng(12)
        for _ in range(20):
            a = rng.standard_normal((8, 8))
            M = a @ a.T + 0.1 * np.eye(8)
            b = rng.standard_normal(8)
            x = solve_spd(M, b)
            assert np.linalg.norm(M @ x - b) <= 1e-10 * (1 + np.linalg.norm(b))

    def test_not_pd(self):
        with pytest.raises(PreconditionError):
            solve_spd([[1.0, 2.0], [2.0, 1.0]], [1.0, 1.0])


def test_philox_reproducible():
    np.testing.assert_array_equal(philox_rng(7).random(5), philox_rng(7).random(5))
