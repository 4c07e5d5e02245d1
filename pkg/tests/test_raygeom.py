import math

import numpy as np
import pytest

from bregvi import (
    BregmanObjective,
    PreconditionError,
    condition_number,
    envelope_bracket,
    grid_tolerance,
    integral_neg_elbo,
    make_bernoulli_product,
    make_quadratic,
    neg_elbo,
    one_point_report,
    quadratic_bounds,
    ray_point,
    spectral_envelope,
)
from bregvi.raygeom import sandwich_holds, sym_eig_extremes
from bregvi.verify import philox_rng


def slope(x):
    s = 1.0 / (1.0 + math.exp(-x))
    return s * (1.0 - s)


H_M1 = slope(-1.0)


@pytest.fixture
def bern1():
    return BregmanObjective(make_bernoulli_product(1), [1.0])


@pytest.fixture
def quad2():
    return BregmanObjective(make_quadratic(np.diag([0.2, 1.0])), [0.0, 0.0])


class TestRayPoint:
    def test_ends_and_midpoint(self):
        np.testing.assert_array_equal(ray_point([1.0], [-1.0], 0.0), [1.0])
        np.testing.assert_array_equal(ray_point([1.0], [-1.0], 1.0), [-1.0])
        np.testing.assert_array_equal(ray_point([1.0], [-1.0], 0.5), [0.0])

    @pytest.mark.parametrize("s", [-0.1, 1.5])
    def test_range(self, s):
        with pytest.raises(PreconditionError):
            ray_point([0.0], [1.0], s)


class TestEnvelope:
    def test_quadratic(self, quad2):
        env = spectral_envelope(quad2, [3.0, -1.0])
        assert env.alpha == pytest.approx(0.2, rel=1e-15) and env.beta == pytest.approx(1.0, rel=1e-15)
        assert grid_tolerance(env) == 0.0
        assert envelope_bracket(env) == (env.alpha, env.beta)

    def test_bernoulli_spot(self, bern1):
        env = spectral_envelope(bern1, [-1.0], 257)
        # sigma' is minimal at the endpoints |x| = 1 and peaks at x = 0 (s = 1/2)
        assert env.alpha == pytest.approx(H_M1, rel=1e-14)
        assert env.beta == 0.25
        assert condition_number(env) == pytest.approx(0.25 / H_M1, rel=1e-14)
        assert condition_number(env) == pytest.approx(1.27154, abs=1e-5)

    def test_degenerate_ray(self, bern1):
        env = spectral_envelope(bern1, [1.0], 9)
        assert env.alpha == env.beta == pytest.approx(slope(1.0), rel=1e-14)

    def test_samples(self, bern1):
        env = spectral_envelope(bern1, [-3.0], 17)
        s = [x[0] for x in env.samples]
        assert {0.0, 0.5, 1.0} <= set(s)
        assert all(env.alpha <= lo and env.beta >= hi for _, lo, hi in env.samples)
        assert 0 < env.alpha <= env.beta < math.inf

    @pytest.mark.parametrize("n", [2, 4, 256, 1])
    def test_grid_size(self, bern1, n):
        with pytest.raises(PreconditionError):
            spectral_envelope(bern1, [0.0], n)

    def test_against_brute_force(self):
        rng = philox_rng(2)
        obj = BregmanObjective(make_bernoulli_product(3), rng.uniform(-3, 3, 3))
        fine = np.linspace(0.0, 1.0, 200_001)
        for phi in rng.uniform(-6, 6, (20, 3)):
            env = spectral_envelope(obj, phi, 257)
            h = obj.model.fisher_diag(obj.optimum + fine[:, None] * (phi - obj.optimum))
            true_lo, true_hi = h.min(), h.max()
            tol = grid_tolerance(env)
            assert env.alpha == pytest.approx(true_lo, rel=1e-14)  # endpoint minimizer, always a grid node
            assert true_hi - tol <= env.beta <= true_hi + 1e-15
            lo, hi = envelope_bracket(env)
            assert lo == env.alpha and hi >= true_hi - 1e-15

    def test_nested_refinement(self):
        rng = philox_rng(3)
        obj = BregmanObjective(make_bernoulli_product(2), rng.uniform(-3, 3, 2))
        for phi in rng.uniform(-6, 6, (50, 2)):
            envs = [spectral_envelope(obj, phi, n) for n in (33, 65, 129, 257, 513)]
            for a, b in zip(envs, envs[1:]):
                np.testing.assert_array_equal(b.s[::2], a.s)
                assert b.alpha <= a.alpha and b.beta >= a.beta

    def test_continuity_proxy(self):
        obj = BregmanObjective(make_bernoulli_product(2), [1.0, -0.5])
        phi = [-4.0, 3.0]
        jumps = [np.abs(np.diff(spectral_envelope(obj, phi, n).lam_max)).max() for n in (129, 257, 513, 1025)]
        ratios = np.array(jumps[1:]) / np.array(jumps[:-1])
        np.testing.assert_allclose(ratios, 0.5, atol=0.02)

    def test_dense_eigen_path(self):
        rng = philox_rng(4)
        q, _ = np.linalg.qr(rng.standard_normal((6, 6)))
        M = q @ np.diag([0.1, 0.2, 0.3, 1.0, 2.0, 3.0]) @ q.T
        obj = BregmanObjective(make_quadratic(0.5 * (M + M.T)), np.zeros(6))
        env = spectral_envelope(obj, np.ones(6))
        assert env.alpha == pytest.approx(0.1, rel=1e-12)
        assert env.beta == pytest.approx(3.0, rel=1e-12)

    def test_two_by_two_closed_form(self):
        lo, hi = sym_eig_extremes(np.array([[2.0, 1.0], [1.0, 2.0]]))
        assert (lo, hi) == (1.0, 3.0)


class TestIntegral:
    def test_zero_ray(self, bern1):
        assert integral_neg_elbo(bern1, [1.0], 8) == 0.0

    def test_quadratic_exact(self, quad2):
        for phi in philox_rng(6).uniform(-5, 5, (20, 2)):
            ref = neg_elbo(quad2, phi)
            assert integral_neg_elbo(quad2, phi, 2) == pytest.approx(ref, rel=1e-14, abs=1e-15)

    def test_bernoulli_spot(self, bern1):
        assert integral_neg_elbo(bern1, [-1.0], 2048) == pytest.approx(0.4621171572600098, rel=1e-8)

    def test_convergence(self):
        rng = philox_rng(7)
        obj = BregmanObjective(make_bernoulli_product(2), rng.uniform(-2, 2, 2))
        for phi in rng.uniform(-6, 6, (20, 2)):
            ref = neg_elbo(obj, phi)
            errs = [abs(integral_neg_elbo(obj, phi, n) - ref) for n in (8, 32, 128, 512, 2048)]
            assert all(b <= a + 1e-13 for a, b in zip(errs, errs[1:]))

    @pytest.mark.parametrize("n", [0, 3, 7])
    def test_panels(self, bern1, n):
        with pytest.raises(PreconditionError):
            integral_neg_elbo(bern1, [0.0], n)


class TestBounds:
    def test_quadratic_spot(self, quad2):
        env = spectral_envelope(quad2, [1.0, 1.0])
        assert quadratic_bounds(quad2, [1.0, 1.0], env) == (pytest.approx(0.2), pytest.approx(1.0))

    def test_bernoulli_spot(self, bern1):
        env = spectral_envelope(bern1, [-1.0])
        lo, hi = quadratic_bounds(bern1, [-1.0], env)
        assert lo == pytest.approx(2 * H_M1, rel=1e-14)
        assert lo == pytest.approx(0.3932239, abs=1e-7)
        assert hi == 0.5
        assert lo <= neg_elbo(bern1, [-1.0]) <= hi

    def test_at_optimum(self, bern1):
        env = spectral_envelope(bern1, [1.0])
        assert quadratic_bounds(bern1, [1.0], env) == (0.0, 0.0)
        assert sandwich_holds(bern1, [1.0], env)

    def test_mismatched_ray(self, bern1):
        env = spectral_envelope(bern1, [-1.0])
        with pytest.raises(PreconditionError):
            quadratic_bounds(bern1, [-2.0], env)


class TestOnePoint:
    def test_isotropic_tight(self):
        obj = BregmanObjective(make_quadratic(0.7 * np.eye(3)), [1.0, 0.0, -1.0])
        phi = np.array([2.0, 3.0, -4.0])
        r = one_point_report(obj, phi, spectral_envelope(obj, phi))
        dsq = float((phi - obj.optimum) @ (phi - obj.optimum))
        assert r.inner == pytest.approx(0.7 * dsq, rel=1e-15)
        assert r.grad_lower == pytest.approx(r.inner, rel=1e-15)
        assert r.grad_upper == pytest.approx(r.inner, rel=1e-15)

    def test_bernoulli_spot(self, bern1):
        env = spectral_envelope(bern1, [-1.0])
        r = one_point_report(bern1, [-1.0], env)
        L = neg_elbo(bern1, [-1.0])
        assert r.inner == pytest.approx(4 * H_M1, rel=1e-14)
        assert r.inner == pytest.approx(0.7864477, abs=1e-7)
        assert (r.grad_lower, r.grad_upper) == (pytest.approx(4 * H_M1, rel=1e-14), 1.0)
        assert 2 * env.alpha / env.beta == pytest.approx(1.57290, abs=1e-5)
        assert 2 * env.beta / env.alpha == pytest.approx(2.54308, abs=1e-5)
        assert r.pl_lower == pytest.approx(2 * env.alpha / env.beta * L, rel=1e-15)
        assert r.pl_lower == pytest.approx(0.72686, abs=1e-5)
        assert r.pl_upper == pytest.approx(1.17520, abs=1e-5)
        assert r.grad_lower <= r.inner <= r.grad_upper
        assert r.pl_lower <= r.inner <= r.pl_upper

    def test_vanishes_at_optimum(self, bern1):
        for eps in (1e-2, 1e-4, 1e-6):
            phi = [1.0 + eps]
            r = one_point_report(bern1, phi, spectral_envelope(bern1, phi))
            assert max(abs(r.inner), r.delta_sq, r.L, r.grad_upper, r.pl_upper) <= 1.001 * eps**2

    def test_precondition(self, bern1):
        env = spectral_envelope(bern1, [-1.0])
        bad = type(env)(0.0, 1.0, env.s, env.lam_min, env.lam_max, env.grid_size, env.origin, env.endpoint)
        with pytest.raises(PreconditionError):
            one_point_report(bern1, [-1.0], bad)
        with pytest.raises(PreconditionError):
            condition_number(bad)

    def test_condition_number_spots(self, quad2):
        assert condition_number(spectral_envelope(quad2, [1.0, 0.0])) == pytest.approx(5.0, rel=1e-15)
        obj = BregmanObjective(make_quadratic(np.eye(2)), [0.0, 0.0])
        assert condition_number(spectral_envelope(obj, [1.0, 0.0])) == 1.0
