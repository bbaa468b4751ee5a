"""
Ball averages, Morrey norms, mean oscillation and embedding checks.

Usage:
    from fields import InverseRadialField
    from morrey import morrey_norm

    report = morrey_norm(InverseRadialField(3), q=2.0, R0=1.0)
    report.value  # close to sqrt(3)
"""

from morrey.balls import Ball, lattice_centers, radius_ladder, singular_centers
from morrey.embedding import (
    default_p,
    dilation_family,
    embedding_check,
    mollified_weighted_check,
    mollifier_bound_check,
)
from morrey.norms import BallSample, MorreyReport, SearchBudget, ball_avg_norm, ball_power_mean, morrey_norm
from morrey.oscillation import OscillationReport, oscillation, poincare_check, sharp_oscillation
from morrey.quadrature import BallRule, ball_integral, ball_mean, ball_rule

__all__ = [
    # Geometry
    "Ball",
    "radius_ladder",
    "lattice_centers",
    "singular_centers",
    # Quadrature
    "BallRule",
    "ball_rule",
    "ball_mean",
    "ball_integral",
    # Norms
    "SearchBudget",
    "BallSample",
    "MorreyReport",
    "ball_power_mean",
    "ball_avg_norm",
    "morrey_norm",
    # Oscillation
    "OscillationReport",
    "oscillation",
    "sharp_oscillation",
    "poincare_check",
    # Embedding
    "default_p",
    "dilation_family",
    "embedding_check",
    "mollifier_bound_check",
    "mollified_weighted_check",
]
