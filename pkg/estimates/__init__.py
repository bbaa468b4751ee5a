"""
Quantitative estimate checks over trajectory batches.

Every check returns an EstimateReport with one Probe per probed
configuration, the fitted constant, secondary fits, flags and a verdict.

Usage:
    from estimates import default_family, admissibility_check

    report = admissibility_check(batch, default_family(dim=3, p=2.6), T=1.0)
    report.verdict, report.fitted_constant
"""

from estimates.types import SE_MARGIN, EstimateReport, Probe, Verdict, mean_and_se, relative_spread
from estimates.family import (
    Gaussian,
    IndicatorBall,
    TensorBump,
    TestFunction,
    TestFunctionFamily,
    default_family,
    gaussian_ladder,
)
from estimates.fitting import NO_FIT, LinearFit, log_linear, log_log, max_ratio, ols
from estimates.coefficients import check_mollified_properties
from estimates.exits import exit_bounds_check, laplace_exit_check, visit_probability_check
from estimates.flow import flow_lower_bound_check
from estimates.heat_kernel import heat_kernel_bound_check, resolvent_bound_check
from estimates.moments import generator_action, increment_moment_check, ito_formula_check
from estimates.occupation import admissibility_check, krylov_check, local_lp_norm, occupation_integrals

__all__ = [
    # Types
    "SE_MARGIN",
    "Verdict",
    "Probe",
    "EstimateReport",
    "mean_and_se",
    "relative_spread",
    # Test functions
    "TestFunction",
    "Gaussian",
    "IndicatorBall",
    "TensorBump",
    "TestFunctionFamily",
    "gaussian_ladder",
    "default_family",
    # Fitting
    "LinearFit",
    "NO_FIT",
    "ols",
    "log_linear",
    "log_log",
    "max_ratio",
    # Occupation
    "occupation_integrals",
    "local_lp_norm",
    "admissibility_check",
    "krylov_check",
    # Exits
    "exit_bounds_check",
    "laplace_exit_check",
    "visit_probability_check",
    # Moments
    "increment_moment_check",
    "generator_action",
    "ito_formula_check",
    # Heat kernel
    "heat_kernel_bound_check",
    "resolvent_bound_check",
    # Flow
    "flow_lower_bound_check",
    # Coefficients
    "check_mollified_properties",
]
