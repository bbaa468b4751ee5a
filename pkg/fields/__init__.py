"""
Coefficient fields: the explicit example, the bump-chain drift, constants,
inverse-distance bumps, and their mollifications.

Usage:
    from fields import ExampleParams, example_coefficients

    coeffs = example_coefficients(ExampleParams(alpha=1.0, beta=0.3, gamma=0.1))
    a = coeffs.diffusion([0.5, 0.0, 0.0])
    smooth = coeffs.mollified(8)
"""

from fields.base import ConstantField, Field, FieldKind, FieldTraits
from fields.coefficients import (
    CoefficientSet,
    DiffusionField,
    GradSigmaNormField,
    PermutedSigma,
    constant_coefficients,
    example_coefficients,
    grad_sigma_norm,
)
from fields.example import ExampleDrift, ExampleParams, ExampleSigma, example_drift, example_sigma
from fields.mollify import MollifiedField, MollifierSpec, kernel, kernel_mass, mollify
from fields.radial import InverseRadialField, RadialVectorField
from fields.registry import FieldRegistry, get_field_registry, parse_kind, reset_registry
from fields.remark24 import (
    CentersReport,
    RadiiRule,
    Remark24Field,
    Remark24Params,
    remark24_drift,
    remark24_lp_mass,
)

__all__ = [
    # Base classes
    "Field",
    "FieldKind",
    "FieldTraits",
    "ConstantField",
    # Constructions
    "ExampleParams",
    "ExampleSigma",
    "ExampleDrift",
    "example_sigma",
    "example_drift",
    "InverseRadialField",
    "RadialVectorField",
    "Remark24Params",
    "Remark24Field",
    "RadiiRule",
    "CentersReport",
    "remark24_drift",
    "remark24_lp_mass",
    # Mollification
    "MollifierSpec",
    "MollifiedField",
    "mollify",
    "kernel",
    "kernel_mass",
    # Coefficient sets
    "CoefficientSet",
    "DiffusionField",
    "GradSigmaNormField",
    "PermutedSigma",
    "constant_coefficients",
    "example_coefficients",
    "grad_sigma_norm",
    # Registry
    "FieldRegistry",
    "get_field_registry",
    "parse_kind",
    "reset_registry",
]
