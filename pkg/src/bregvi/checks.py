"""Invariant suite run by ``bregvi verify``.

Each check returns ``{check_name, max_rel_err, tolerance, pass}``.  For
inequalities ``max_rel_err`` is the largest normalized violation (zero when
the inequality holds everywhere).
"""

from __future__ import annotations

import warnings
from typing import Callable

import numpy as np
from scipy.stats import qmc

from . import optimizers as opt
from . import raygeom, verify
from .expfam import make_bernoulli_product, make_quadratic
from .objective import (
    BregmanObjective,
    bregman_divergence,
    grad,
    kl_oracle_bernoulli,
    monotonicity_check,
    nat_grad,
    neg_elbo,
    three_point_gap,
)

Check = dict


def _entry(name: str, err: float, tol: float) -> Check:
    err = float(err)
    return {"check_name": name, "max_rel_err": err, "tolerance": float(tol), "pass": bool(err <= tol)}


def quasi_random(d: int, n: int, lo: float, hi: float, seed: int) -> np.ndarray:
    """Scrambled Sobol points in ``[lo, hi]^d`` (deterministic for a seed)."""
    sampler = qmc.Sobol(d, scramble=True, seed=verify.philox_rng(seed))
    with warnings.catch_warnings():
        # balance warning for non power-of-two n
        warnings.simplefilter("ignore", UserWarning)
        u = sampler.random(n)
    return lo + (hi - lo) * u


def families(seed: int):
    """The model/optimum pairs every sweep runs over."""
    rng = verify.philox_rng(seed)
    spectrum = np.linspace(0.02, 1.0, 20)
    q, _ = np.linalg.qr(rng.standard_normal((5, 5)))
    rotated = q @ np.diag([0.1, 0.3, 0.5, 2.0, 4.0]) @ q.T
    rotated = 0.5 * (rotated + rotated.T)
    out = []
    for name, model in [
        ("bernoulli1", make_bernoulli_product(1)),
        ("bernoulli2", make_bernoulli_product(2)),
        ("bernoulli20", make_bernoulli_product(20)),
        ("quadratic20", make_quadratic(np.diag(spectrum))),
        ("quadratic5_rotated", make_quadratic(rotated)),
    ]:
        opt_pt = rng.uniform(-2.0, 2.0, model.dim)
        out.append((name, BregmanObjective(model, opt_pt)))
    return out


def run_suite(seed: int = 0, n: int = 100, grid: int = 257, panels: int = 2048,
              inject_fault: bool = False) -> list[Check]:
    grad_fn: Callable = grad
    if inject_fault:
        def grad_fn(obj, phi):
            return grad(obj, phi) + 1e-3

    checks: list[Check] = []
    for k, (name, obj) in enumerate(families(seed)):
        model = obj.model
        pts = quasi_random(model.dim, n, -5.0, 5.0, seed + 101 * k + 1)
        A = model.log_partition

        rep = verify.fd_sweep(model.mean, lambda p: verify.fd_gradient(A, p), pts, verify.GRAD_STEP)
        checks.append(_entry(f"{name}/mean_vs_fd", rep.max_rel_err, 1e-6))

        hess_pts = pts[: max(1, n // 5)] if model.dim > 5 else pts
        worst = 0.0
        for p in hess_pts:
            h = model.fisher(p)
            worst = max(worst, float(np.max(np.abs(h - verify.fd_hessian(A, p)) / (1 + np.abs(h)))))
        checks.append(_entry(f"{name}/fisher_vs_fd", worst, 1e-4))

        L = lambda p: neg_elbo(obj, p)  # noqa: E731
        rep = verify.fd_sweep(lambda p: grad_fn(obj, p), lambda p: verify.fd_gradient(L, p),
                              pts, verify.GRAD_STEP)
        checks.append(_entry(f"{name}/grad_vs_fd", rep.max_rel_err, 1e-6))

        worst = max(
            float(np.linalg.norm(verify.solve_spd(model.fisher(p), grad_fn(obj, p)) - nat_grad(obj, p))
                  / (1 + np.linalg.norm(nat_grad(obj, p))))
            for p in pts
        )
        checks.append(_entry(f"{name}/nat_grad_vs_solve", worst, 1e-10))

        trip = quasi_random(3 * model.dim, n, -5.0, 5.0, seed + 101 * k + 2)
        worst = 0.0
        for row in trip:
            u, v, w = np.split(row, 3)
            lhs, rhs = three_point_gap(model, u, v, w)
            worst = max(worst, abs(lhs - rhs) / (1 + abs(rhs)))
        checks.append(_entry(f"{name}/three_point_identity", worst, 1e-10))

        viol, mism = 0.0, 0.0
        for row in trip:
            a, b, _ = np.split(row, 3)
            m = monotonicity_check(obj, a, b)
            viol = max(viol, -m.slack / (1 + abs(m.lhs)))
            ref = bregman_divergence(model, a, b)
            mism = max(mism, abs(m.slack - ref) / (1 + abs(ref)))
        checks.append(_entry(f"{name}/monotonicity_slack_nonneg", viol, 1e-12))
        checks.append(_entry(f"{name}/monotonicity_slack_is_divergence", mism, 1e-10))

        if model.family == "bernoulli":
            worst = max(
                abs(neg_elbo(obj, p) - kl_oracle_bernoulli(obj.optimum, p))
                / (1 + abs(kl_oracle_bernoulli(obj.optimum, p)))
                for p in pts
            )
            checks.append(_entry(f"{name}/neg_elbo_vs_kl", worst, 1e-10))

        quad_tol = 1e-13 if model.constant_fisher else 1e-8
        worst = max(
            abs(raygeom.integral_neg_elbo(obj, p, 2 if model.constant_fisher else panels)
                - neg_elbo(obj, p)) / (1 + neg_elbo(obj, p))
            for p in pts
        )
        checks.append(_entry(f"{name}/integral_representation", worst, quad_tol))

        sand, grad_b, pl_b = 0.0, 0.0, 0.0
        for p in pts:
            env = raygeom.spectral_envelope(obj, p, grid)
            a_lo, b_hi = raygeom.envelope_bracket(env)
            Lp = neg_elbo(obj, p)
            dsq = float(obj.delta(p) @ obj.delta(p))
            sand = max(sand, (0.5 * a_lo * dsq - Lp) / (1 + Lp), (Lp - 0.5 * b_hi * dsq) / (1 + Lp))
            r = raygeom.one_point_report(obj, p, env)
            grad_b = max(grad_b, (r.grad_lower - r.inner) / (1 + abs(r.inner)),
                         (r.inner - r.grad_upper) / (1 + abs(r.inner)))
            if a_lo > 0:
                pl_lo, pl_hi = 2 * a_lo / b_hi * r.L, 2 * b_hi / a_lo * r.L
                pl_b = max(pl_b, (pl_lo - r.inner) / (1 + abs(r.inner)),
                           (r.inner - pl_hi) / (1 + abs(r.inner)))
        checks.append(_entry(f"{name}/quadratic_sandwich", max(sand, 0.0), 1e-12))
        checks.append(_entry(f"{name}/one_point_grad_bounds", max(grad_b, 0.0), 1e-12))
        checks.append(_entry(f"{name}/one_point_pl_bounds", max(pl_b, 0.0), 1e-12))

        worst_ngd, worst_col = 0.0, 0.0
        for p in pts[:10]:
            for eta in (0.25, 0.5, 1.0, 1.5):
                tr = opt.run(obj, p, "ngd", opt.StepSchedule("constant", eta), max_iters=40, dist_tol=0.0)
                pred = abs(1 - eta) * tr.dist[:-1]
                zero = pred == 0
                err = np.where(zero, tr.dist[1:], np.abs(tr.dist[1:] - pred) / np.where(zero, 1.0, pred))
                worst_ngd = max(worst_ngd, float(err.max(initial=0.0)))
                if eta <= 1.0:
                    worst_col = max(worst_col, float(tr.collinearity.max() / tr.dist[0]))
        checks.append(_entry(f"{name}/ngd_distance_recursion", worst_ngd, 1e-12))
        checks.append(_entry(f"{name}/ngd_ray_invariance", worst_col, 1e-10))

        worst_gd = 0.0
        for p in pts[:5]:
            if model.constant_fisher:
                env = raygeom.spectral_envelope(obj, p, grid)
                gamma = opt.optimal_gd_step(env.alpha, env.beta)
                tr = opt.run(obj, p, "gd", opt.StepSchedule("constant", gamma), max_iters=200, dist_tol=0.0)
                alphas = np.full(tr.n_steps, env.alpha)
                betas = np.full(tr.n_steps, env.beta)
            else:
                tr = opt.run(obj, p, "gd", opt.StepSchedule("optimal"), max_iters=25, dist_tol=0.0,
                             grid_size=grid)
                alphas, betas = tr.alpha, tr.beta
            for k_, (a, b, g) in enumerate(zip(alphas, betas, tr.steps)):
                rho = opt.gd_contraction_factor(a, b, g)
                worst_gd = max(worst_gd, tr.dist[k_ + 1] - rho * tr.dist[k_])
        checks.append(_entry(f"{name}/gd_contraction_bound", max(worst_gd, 0.0), 1e-12))

        if model.dim <= 20:
            worst = 0.0
            for p in pts[:10]:
                h = model.fisher(p)
                lo, hi = raygeom.sym_eig_extremes(h)
                jlo, jhi = verify.eig_extremes(h)
                worst = max(worst, abs(lo - jlo) / (1 + abs(jlo)), abs(hi - jhi) / (1 + abs(jhi)))
            checks.append(_entry(f"{name}/eig_extremes_vs_jacobi", worst, 1e-10))
    return checks
