"""Simulator and verification toolkit for dissipative nonlinear Schrodinger dynamics.

The equation is i u_t + (1/2) Lap u = lambda |u|^(p-1) u on a periodic box
standing in for R^d, with Im lambda <= 0 so mass can only leave the system.
The package provides closed-form exponent calculus, a Strang-split spectral
integrator with an exactly solved dissipative substep, and a battery of
checks that confront each run with the quantities the theory controls.
"""

from .exponents import (
    DEFAULT_C_E,
    DEFAULT_C_H,
    DEFAULT_EPS0,
    DecayRate,
    ExponentSet,
    GNParameters,
    HolderExponents,
    PhysParams,
    Regime,
    decay_exponent,
    exponent_set,
    gn_parameters,
    holder_exponents,
    rate_envelope,
    sdc_check,
    smallness_scaling,
    smallness_threshold,
)
from .field import (
    EnergyRecord,
    Field,
    GridSpec,
    augmented_energy,
    boundary_mass_fraction,
    energy,
    gaussian_data,
    grad_norm,
    h1_norm,
    l2_distance,
    load_field,
    lp_norm,
    mass,
    record,
    save_field,
    weighted_norm,
)
from .solver import (
    ConvergenceStudy,
    DiagnosticsSeries,
    FileSpec,
    GaussianSpec,
    RunConfig,
    ScalingCheck,
    SolverAbort,
    convergence_study,
    evolve,
    initial_field,
    linear_step,
    nonlinear_step,
    propagate,
    scaling_covariance,
    strang_step,
)
from .verify import (
    CHECK_NAMES,
    GAMMA_GRID,
    CheckResult,
    GradientBound,
    MassIdentityReport,
    MonotonicityReport,
    RateFit,
    VirialReport,
    check_augmented_monotone,
    check_gn,
    check_gradient_bound,
    check_mass_identity,
    check_sup_lp1,
    check_virial,
    check_weighted_interpolation,
    decay_ode_bound,
    find_min_gamma,
    format_report,
    interpolation_constant,
    rate_fit,
    run_checks,
    theory_gamma,
)

__version__ = "0.1.0"
