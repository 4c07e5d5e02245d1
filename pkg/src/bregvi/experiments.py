"""Experiment definitions behind the command line.

Each ``cmd_*`` takes a validated :class:`ExperimentSpec` and returns an
:class:`ExperimentResult` holding CSV text per curve plus a JSON summary.
Outputs depend only on the spec, so reruns are byte-identical.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import checks
from . import optimizers as opt
from . import raygeom
from .errors import BregviError, SpecError
from .expfam import make_model, make_quadratic
from .objective import BregmanObjective, monotonicity_check, neg_elbo

EXPERIMENTS = ("landscape", "envelope", "trajectory", "sweep", "verify")
SWEEP_RATIOS = (0.02, 0.05, 0.10, 0.20, 0.30)


@dataclass
class ExperimentSpec:
    name: str
    model: dict = field(default_factory=lambda: {"family": "bernoulli", "dim": 1})
    phi_star: list = field(default_factory=lambda: [1.0])
    phi_0: list = field(default_factory=lambda: [-1.0])
    eta: float = 0.5
    etas: list = field(default_factory=lambda: [0.5, 1.0])
    c: Optional[float] = None
    gamma: Optional[float] = None
    grid: int = raygeom.DEFAULT_GRID
    panels: int = raygeom.DEFAULT_PANELS
    max_iters: int = opt.DEFAULT_MAX_ITERS
    tol: float = opt.DEFAULT_DIST_TOL
    report_tol: float = 1e-6
    seed: int = 0
    out: str = "out"
    box: Optional[float] = 10.0
    interval: list = field(default_factory=lambda: [-6.0, 6.0])
    points: int = 601
    contour: int = 81
    ratios: list = field(default_factory=lambda: list(SWEEP_RATIOS))
    beta: float = 1.0
    init: str = "generic"
    init_norm: float = 10.0
    jobs: int = 1
    verify_points: int = 100
    allow_divergent: bool = False
    inject_fault: bool = False

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def default_spec(name: str) -> ExperimentSpec:
    if name not in EXPERIMENTS:
        raise SpecError(f"unknown experiment {name!r}; choose from {', '.join(EXPERIMENTS)}")
    if name == "trajectory":
        return ExperimentSpec(
            name, model={"family": "bernoulli", "dim": 2}, phi_star=[2.0, -1.0], phi_0=[-3.0, 3.0]
        )
    if name == "sweep":
        return ExperimentSpec(
            name, model={"family": "quadratic", "dim": 20}, phi_star=[0.0] * 20, phi_0=[], tol=1e-10
        )
    return ExperimentSpec(name)


_FIELDS = {f.name for f in dataclasses.fields(ExperimentSpec)}
_MODEL_KEYS = {"family", "dim", "spectrum"}


def build_spec(name: str, config: Optional[dict] = None, overrides: Optional[dict] = None) -> ExperimentSpec:
    """Defaults, then config-file values, then flag overrides; then validate."""
    spec = default_spec(name)
    for source in (config or {}), (overrides or {}):
        unknown = set(source) - _FIELDS
        if unknown:
            raise SpecError(f"unknown config keys: {sorted(unknown)}")
        if "name" in source and source["name"] != name:
            raise SpecError(f"config is for {source['name']!r}, not {name!r}")
        for key, value in source.items():
            setattr(spec, key, value)
    validate(spec)
    return spec


def _int(value, what: str) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
        raise SpecError(f"{what} must be an integer, got {value!r}")
    return int(value)


def _vector(value, what: str) -> list:
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise SpecError(f"{what} must be a list of numbers") from None
    if arr.ndim != 1 or not np.all(np.isfinite(arr)):
        raise SpecError(f"{what} must be a finite vector")
    return arr.tolist()


def validate(spec: ExperimentSpec) -> None:
    """Reject anything inconsistent before computation starts."""
    if not isinstance(spec.model, dict) or set(spec.model) - _MODEL_KEYS:
        raise SpecError(f"model descriptor may only contain {sorted(_MODEL_KEYS)}")
    if spec.model.get("family") not in ("bernoulli", "quadratic"):
        raise SpecError(f"unknown model family {spec.model.get('family')!r}")
    dim = _int(spec.model.get("dim"), "model.dim")
    if dim < 1:
        raise SpecError("model.dim must be positive")
    spec.phi_star = _vector(spec.phi_star, "phi_star")
    spec.phi_0 = _vector(spec.phi_0, "phi_0")
    if len(spec.phi_star) != dim:
        raise SpecError(f"phi_star has length {len(spec.phi_star)}, model dim is {dim}")
    if spec.name != "sweep" and len(spec.phi_0) != dim:
        raise SpecError(f"phi_0 has length {len(spec.phi_0)}, model dim is {dim}")
    spec.grid = _int(spec.grid, "grid")
    if spec.grid < 3 or spec.grid % 2 == 0:
        raise SpecError(f"grid must be odd and >= 3, got {spec.grid}")
    spec.panels = _int(spec.panels, "panels")
    if spec.panels < 2 or spec.panels % 2:
        raise SpecError(f"panels must be even and >= 2, got {spec.panels}")
    spec.max_iters = _int(spec.max_iters, "max_iters")
    if spec.max_iters < 1:
        raise SpecError("max_iters must be >= 1")
    spec.points = _int(spec.points, "points")
    spec.contour = _int(spec.contour, "contour")
    spec.seed = _int(spec.seed, "seed")
    spec.jobs = _int(spec.jobs, "jobs")
    spec.verify_points = _int(spec.verify_points, "verify_points")
    if spec.seed < 0:
        raise SpecError("seed must be unsigned")
    if spec.points < 2 or spec.contour < 2 or spec.jobs < 1 or spec.verify_points < 1:
        raise SpecError("points, contour, jobs and verify_points must be positive (points/contour >= 2)")
    if not (isinstance(spec.tol, (int, float)) and spec.tol >= 0):
        raise SpecError("tol must be a non-negative number")
    for eta in [spec.eta, *spec.etas]:
        if not (isinstance(eta, (int, float)) and 0 < eta < 2):
            raise SpecError(f"constant NGD step must lie in (0, 2), got {eta!r}")
    if spec.c is not None and not (isinstance(spec.c, (int, float)) and 0 < spec.c < 1):
        raise SpecError(f"diminishing constant c must lie in (0, 1), got {spec.c!r}")
    if spec.gamma is not None and not (isinstance(spec.gamma, (int, float)) and spec.gamma > 0):
        raise SpecError(f"gamma must be positive, got {spec.gamma!r}")
    if spec.box is not None and not spec.box > 0:
        raise SpecError("box must be positive")
    if spec.init not in ("generic", "worst_case"):
        raise SpecError(f"init must be 'generic' or 'worst_case', got {spec.init!r}")
    lo, hi = _vector(spec.interval, "interval") if len(spec.interval) == 2 else (None, None)
    if lo is None or not lo < hi:
        raise SpecError("interval must be [lo, hi] with lo < hi")

    if spec.name == "landscape" and (spec.model["family"] != "bernoulli" or dim != 1):
        raise SpecError("landscape needs a 1-d bernoulli model")
    if spec.name == "trajectory" and dim != 2:
        raise SpecError("trajectory needs a 2-d model")
    if spec.name == "sweep":
        if spec.model["family"] != "quadratic":
            raise SpecError("sweep needs the quadratic family")
        if not all(isinstance(r, (int, float)) and 0 < r <= 1 for r in spec.ratios) or not spec.ratios:
            raise SpecError("ratios must lie in (0, 1]")
        if not spec.beta > 0:
            raise SpecError("beta must be positive")
        if spec.gamma is not None and spec.gamma >= 2.0 / spec.beta and not spec.allow_divergent:
            raise SpecError(
                f"gamma={spec.gamma} >= 2/beta={2.0 / spec.beta} diverges; pass --allow-divergent to run it"
            )
    try:
        model = make_model(spec.model)
        BregmanObjective(model, spec.phi_star)
    except BregviError as exc:
        raise SpecError(str(exc)) from exc


@dataclass
class ExperimentResult:
    spec: dict
    curves: dict
    summary: dict
    failures: int = 0

    def write(self, out_dir) -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        written = []
        for curve, text in self.curves.items():
            path = out / f"{self.spec['name']}_{curve}.csv"
            path.write_text(text)
            written.append(path)
        path = out / "summary.json"
        path.write_text(summary_json(self))
        written.append(path)
        return written


def summary_json(result: ExperimentResult) -> str:
    doc = {"spec": result.spec, "summary": result.summary, "failures": result.failures}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def to_csv(header: list, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _objective(spec: ExperimentSpec) -> BregmanObjective:
    return BregmanObjective(make_model(spec.model), spec.phi_star)


def _linspace(lo: float, hi: float, n: int) -> np.ndarray:
    # i * (hi - lo) / (n - 1) hits round values such as -1.0 exactly
    return lo + (hi - lo) * np.arange(n) / (n - 1)


def trajectory_csv(tr: opt.Trajectory, with_iterates: bool) -> str:
    d = tr.deltas.shape[1]
    header = ["k"]
    if with_iterates:
        header += [f"phi_{i}" for i in range(d)]
    header += ["dist", "loss", "contraction", "collinearity"]
    its = tr.iterates
    rows = []
    for k in range(tr.deltas.shape[0]):
        row = [k]
        if with_iterates:
            row += its[k].tolist()
        row += [tr.dist[k], tr.loss[k], tr.contraction[k] if k < tr.n_steps else None, tr.collinearity[k]]
        rows.append(row)
    return to_csv(header, rows)


def cmd_landscape(spec: ExperimentSpec) -> ExperimentResult:
    """Negative ELBO on a 1-d grid with the monotonicity lower bound anchored at ``phi_0``."""
    obj = _objective(spec)
    anchor = np.asarray(spec.phi_0)
    rows, violations, min_slack = [], 0, math.inf
    for x in _linspace(spec.interval[0], spec.interval[1], spec.points):
        m = monotonicity_check(obj, anchor, [x])
        rows.append([x, m.lhs, m.rhs, m.slack])
        min_slack = min(min_slack, m.slack)
        if m.slack < -1e-12 * (1 + abs(m.lhs)):
            violations += 1
    summary = {
        "L_at_phi0": neg_elbo(obj, anchor),
        "min_slack": min_slack,
        "violations": violations,
        "points": spec.points,
    }
    csv_text = to_csv(["phi", "L", "monotonicity_bound_from_phi0", "slack"], rows)
    return ExperimentResult(spec.to_dict(), {"curve": csv_text}, summary, violations)


def cmd_envelope(spec: ExperimentSpec) -> ExperimentResult:
    """Quadratic sandwich along a line plus the spectral samples on the ``phi_0`` ray.

    For 1-d models the rows are indexed by ``phi``; otherwise by ``t`` with
    ``phi = phi* + t (phi_0 - phi*)``.
    """
    obj = _objective(spec)
    one_d = obj.dim == 1
    direction = np.asarray(spec.phi_0) - obj.optimum
    rows, violations = [], 0
    for t in _linspace(spec.interval[0], spec.interval[1], spec.points):
        phi = np.array([t]) if one_d else obj.optimum + t * direction
        env = raygeom.spectral_envelope(obj, phi, spec.grid)
        lower, upper = raygeom.quadratic_bounds(obj, phi, env)
        ok = raygeom.sandwich_holds(obj, phi, env)
        violations += not ok
        rows.append([t, neg_elbo(obj, phi), env.alpha, env.beta, lower, upper, ok])
    bounds = to_csv(["phi" if one_d else "t", "L", "alpha", "beta", "lower", "upper", "sandwich_ok"], rows)

    env = raygeom.spectral_envelope(obj, spec.phi_0, spec.grid)
    kappa = raygeom.condition_number(env)
    spectrum = to_csv(["s", "lam_min", "lam_max"], zip(env.s, env.lam_min, env.lam_max))
    lower, upper = raygeom.quadratic_bounds(obj, spec.phi_0, env)
    summary = {
        "alpha": env.alpha,
        "beta": env.beta,
        "kappa": kappa,
        "grid_tolerance": raygeom.grid_tolerance(env),
        "L_at_phi0": neg_elbo(obj, spec.phi_0),
        "bounds_at_phi0": [lower, upper],
        "sandwich_violations": violations,
    }
    curves = {
        "bounds": bounds,
        "spectrum": spectrum,
        "summary": to_csv(["alpha", "beta", "kappa"], [[env.alpha, env.beta, kappa]]),
    }
    return ExperimentResult(spec.to_dict(), curves, summary, violations)


def _contour(obj: BregmanObjective, pts: np.ndarray, n: int) -> str:
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    pad = 0.25 * np.maximum(hi - lo, 1.0)
    xs = _linspace(lo[0] - pad[0], hi[0] + pad[0], n)
    ys = _linspace(lo[1] - pad[1], hi[1] + pad[1], n)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    lattice = np.stack([gx.ravel(), gy.ravel()], axis=1)
    loss = obj.batch_loss(lattice)
    return to_csv(["phi_0", "phi_1", "L"], np.column_stack([lattice, loss]))


def cmd_trajectory(spec: ExperimentSpec) -> ExperimentResult:
    """NGD at each ``etas`` entry and GD at the per-iteration optimal step (or fixed ``gamma``)."""
    obj = _objective(spec)
    runs = {}
    for eta in spec.etas:
        runs[f"ngd_eta{eta:g}"] = opt.run(
            obj, spec.phi_0, "ngd", opt.StepSchedule("constant", eta), spec.max_iters, spec.tol
        )
    if spec.gamma is None:
        gd_name, schedule = "gd_optimal", opt.StepSchedule("optimal")
    else:
        gd_name, schedule = f"gd_gamma{spec.gamma:g}", opt.StepSchedule("constant", spec.gamma)
    runs[gd_name] = opt.run(
        obj, spec.phi_0, "gd", schedule, spec.max_iters, spec.tol, grid_size=spec.grid, box=spec.box,
        on_divergence="stop" if spec.allow_divergent else "raise",
    )
    curves = {name: trajectory_csv(tr, with_iterates=True) for name, tr in runs.items()}
    all_pts = np.vstack([tr.iterates for tr in runs.values()] + [obj.optimum[None, :]])
    curves["contour"] = _contour(obj, all_pts, spec.contour)
    summary = {}
    for name, tr in runs.items():
        summary[name] = {
            "steps": tr.n_steps,
            "final_dist": float(tr.dist[-1]),
            "final_loss": float(tr.loss[-1]),
            "max_collinearity_rel": float(tr.collinearity.max() / tr.dist[0]) if tr.dist[0] > 0 else 0.0,
            "iterations_to_report_tol": tr.iterations_to(spec.report_tol),
        }
    return ExperimentResult(spec.to_dict(), curves, summary, 0)


def _sweep_cell(spec: ExperimentSpec, ratio: float, method: str):
    d = int(spec.model["dim"])
    alpha, beta = ratio * spec.beta, spec.beta
    spectrum = np.linspace(alpha, beta, d)
    obj = BregmanObjective(make_quadratic(np.diag(spectrum)), spec.phi_star)
    if spec.init == "generic":
        v = np.full(d, spec.init_norm / math.sqrt(d))
    else:
        v = np.zeros(d)
        v[0] = v[-1] = spec.init_norm / math.sqrt(2.0)
    phi0 = obj.optimum + v
    if method == "ngd":
        tr = opt.run(obj, phi0, "ngd", opt.StepSchedule("constant", spec.eta), spec.max_iters, spec.tol)
        return tr, {
            "eta": spec.eta,
            "rate_theory": abs(1 - spec.eta),
            "iterations_to_report_tol": tr.iterations_to(spec.report_tol),
            "final_dist": float(tr.dist[-1]),
        }
    gamma = opt.optimal_gd_step(alpha, beta) if spec.gamma is None else float(spec.gamma)
    tr = opt.run(
        obj, phi0, "gd", opt.StepSchedule("constant", gamma), spec.max_iters, spec.tol,
        on_divergence="stop" if spec.allow_divergent else "raise",
    )
    rho = opt.gd_contraction_factor(alpha, beta, gamma)
    violations = int(np.sum(tr.dist[1:] > rho * tr.dist[:-1] + 1e-12))
    defined = [c for c in tr.contraction if c is not None]
    return tr, {
        "gamma": gamma,
        "rho_theory": rho,
        "rho_empirical": defined[-1] if defined else None,
        "bound_violations": violations,
        "iterations_to_report_tol": tr.iterations_to(spec.report_tol),
        "final_dist": float(tr.dist[-1]),
    }


def cmd_sweep(spec: ExperimentSpec) -> ExperimentResult:
    """GD vs NGD on the d-dimensional quadratic family across ``alpha/beta`` ratios."""
    cells = [(r, m) for r in spec.ratios for m in ("gd", "ngd")]
    if spec.jobs > 1:
        with ThreadPoolExecutor(spec.jobs) as pool:
            results = list(pool.map(lambda rm: _sweep_cell(spec, *rm), cells))
    else:
        results = [_sweep_cell(spec, *rm) for rm in cells]
    curves, summary, failures = {}, {}, 0
    for (ratio, method), (tr, info) in zip(cells, results):
        curves[f"{method}_ratio{ratio:g}"] = to_csv(
            ["k", "dist", "loss", "contraction"],
            ([k, tr.dist[k], tr.loss[k], tr.contraction[k] if k < tr.n_steps else None]
             for k in range(tr.n_steps + 1)),
        )
        summary.setdefault(f"{ratio:g}", {})[method] = info
        failures += info.get("bound_violations", 0)
    return ExperimentResult(spec.to_dict(), curves, summary, failures)


def cmd_verify(spec: ExperimentSpec) -> ExperimentResult:
    """Run the invariant suite; failures are counted, not raised."""
    report = checks.run_suite(
        seed=spec.seed, n=spec.verify_points, grid=spec.grid, panels=spec.panels,
        inject_fault=spec.inject_fault,
    )
    failed = sum(not c["pass"] for c in report)
    return ExperimentResult(spec.to_dict(), {}, {"checks": report, "passed": failed == 0}, failed)


COMMANDS = {
    "landscape": cmd_landscape,
    "envelope": cmd_envelope,
    "trajectory": cmd_trajectory,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
}
