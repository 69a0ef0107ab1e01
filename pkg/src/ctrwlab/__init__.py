"""Continuous-time random walks, their stochastic integrals and scaling limits."""

from .calculus import (
    IntegrandSpec,
    integrate,
    integrate_ensemble,
    integration_by_parts_check,
    quadratic_variation,
    quadratic_variation_ensemble,
    stochastic_exponential,
    stochastic_exponential_ensemble,
)
from .engine import BLOCK_SIZE, set_default_threads
from .errors import (
    CtrwError,
    DomainError,
    FitError,
    NumericError,
    ParameterDomainError,
    PreconditionError,
    ShapeError,
)
from .fracdiff import (
    DensityEstimate,
    MsdCurve,
    SdeCoeffs,
    caputo_derivative,
    estimate_density,
    msd_curve,
    sde_ensemble,
    simulate_sde,
    verify_fractional_moment_equation,
)
from .lab import (
    EmpiricalDistribution,
    ExperimentReport,
    check_counting_bound,
    ks_distance,
    ks_tolerance,
    run_exponential_experiment,
    run_germano_experiment,
    run_theorem1_experiment,
    run_theorem2_experiment,
)
from .limits import (
    GridPath,
    bm_self_integral_cdf,
    closed_form_bm_self_integral,
    grid_integral,
    inverse_subordinator_ensemble,
    sample_brownian,
    sample_inverse_subordinator,
    sample_stable_levy,
    sample_time_changed_bm,
    time_changed_bm_ensemble,
)
from .paths import (
    CtrwEnsemble,
    CtrwSpec,
    JumpLaw,
    JumpPath,
    build_ctrw,
    count_jumps,
    martingale_diagnostic,
    sample_ctrw_ensemble,
    sample_scaled_ctrw,
)
from .stable_rng import (
    RngStream,
    StableParams,
    sample_elementary,
    sample_one_sided_stable,
    sample_stable,
)

__version__ = "0.1.0"
