"""Variational inference over exponential families in Bregman-divergence form."""

from ._kernels import BACKEND
from .errors import (
    BregviError,
    DimensionError,
    DivergenceError,
    DomainError,
    ModelError,
    OracleError,
    PreconditionError,
    SpecError,
)
from .expfam import ExpFamModel, in_domain, make_bernoulli_product, make_model, make_quadratic
from .objective import (
    BregmanObjective,
    MonotonicityCheck,
    bregman_divergence,
    grad,
    kl_oracle_bernoulli,
    monotonicity_check,
    nat_grad,
    neg_elbo,
    three_point_gap,
)
from .optimizers import (
    StepSchedule,
    Trajectory,
    gd_contraction_factor,
    gd_step,
    ngd_step,
    ngd_theoretical_bounds,
    optimal_gd_step,
    run,
)
from .raygeom import (
    OnePointReport,
    RayEnvelope,
    condition_number,
    envelope_bracket,
    grid_tolerance,
    integral_neg_elbo,
    one_point_report,
    quadratic_bounds,
    ray_point,
    spectral_envelope,
)

__version__ = "0.1.0"
