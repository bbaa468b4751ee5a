"""
The semigroup T_t on grids: explicit finite differences, Feynman-Kac,
Q-operators and the chaos-tail levels.

Usage:
    import numpy as np
    from fields import constant_coefficients
    from semigroup import GridFunction, GridSpec, evolve

    spec = GridSpec.cube(dim=3, half_width=4.0, h=0.1)
    f = GridFunction.sample(spec, lambda x: np.exp(-0.5 * np.sum(x * x, axis=1)))
    u = evolve(f, constant_coefficients(), t=0.5)
"""

from semigroup.chaos import ChaosQuadSpec, ChaosTailReport, chaos_symmetry_check, chaos_tail, default_permutation
from semigroup.convergence import (
    cross_method_check,
    gradient_bound_check,
    gradient_lp_norm,
    heat_closed_form_check,
    heat_solution,
    maximum_principle_check,
    mollified_convergence,
    pointwise_bound_check,
    semigroup_property_check,
)
from semigroup.feynman_kac import FeynmanKacResult, feynman_kac
from semigroup.grid import Boundary, GridFunction, GridSpec, load_grid_function, persist_grid_function
from semigroup.handle import SemigroupHandle
from semigroup.operator import GridOperator, evolve
from semigroup.qops import q_operator, q_operator_all

__all__ = [
    # Grids
    "Boundary",
    "GridSpec",
    "GridFunction",
    "persist_grid_function",
    "load_grid_function",
    # Evolution
    "GridOperator",
    "evolve",
    "SemigroupHandle",
    "FeynmanKacResult",
    "feynman_kac",
    # Q-operators and chaos
    "q_operator",
    "q_operator_all",
    "ChaosQuadSpec",
    "ChaosTailReport",
    "chaos_tail",
    "chaos_symmetry_check",
    "default_permutation",
    # Checks
    "mollified_convergence",
    "semigroup_property_check",
    "gradient_lp_norm",
    "gradient_bound_check",
    "pointwise_bound_check",
    "maximum_principle_check",
    "cross_method_check",
    "heat_solution",
    "heat_closed_form_check",
]
