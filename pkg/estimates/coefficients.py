"""Properties of mollified coefficient sets: Morrey bounds, oscillation, ellipticity."""

from typing import Any, Optional

import numpy as np

from estimates.types import EstimateReport, Probe, Verdict
from fields.base import as_points
from fields.coefficients import CoefficientSet, DiffusionField, GradSigmaNormField
from logging_config import get_logger
from morrey.norms import SearchBudget, morrey_norm
from morrey.oscillation import sharp_oscillation
from worker import WorkerPool

logger = get_logger(__name__)


def check_mollified_properties(
    coeffs: CoefficientSet,
    n: int,
    sample_points: Any,
    q: float,
    R0: float = 1.0,
    search: Optional[SearchBudget] = None,
    pool: Optional[WorkerPool] = None,
) -> EstimateReport:
    """
    Compare (sigma_n, b_n) with (sigma, b).

    Reports the Morrey norms of |D sigma_n| and b_n and the sharp oscillation
    of a_n at R0, each against the unmollified value as the bound (the ratio
    is the empirical constant). The verdict is whether the eigenvalues of a_n
    lie in [delta/2, 2/delta] at every sample point.
    """
    pts, _ = as_points(sample_points, coeffs.dim_d)
    mollified = coeffs.mollified(int(n))
    report = EstimateReport(name="mollified-coefficients", bound_shape="sigma_n, b_n controlled by sigma, b")

    pairs = (
        ("dsigma", GradSigmaNormField(mollified), GradSigmaNormField(coeffs)),
        ("drift", mollified.drift, coeffs.drift),
    )
    for label, smooth, rough in pairs:
        smooth_report = morrey_norm(smooth, q, R0, search=search, pool=pool)
        rough_report = morrey_norm(rough, q, R0, search=search, pool=pool)
        report.probes.append(
            Probe(
                label=f"morrey_{label}",
                lhs=smooth_report.value,
                bound=rough_report.value,
                params={"n": int(n), "q": q, "R0": R0},
            )
        )
        for flag in smooth_report.flags + rough_report.flags:
            report.flag(flag)

    osc_n = sharp_oscillation(DiffusionField(mollified), R0, search=search)
    osc = sharp_oscillation(DiffusionField(coeffs), R0, search=search)
    report.probes.append(
        Probe(label="sharp_oscillation_a", lhs=osc_n.value, bound=osc.value, params={"n": int(n), "R0": R0})
    )

    lo, hi = mollified.ellipticity_range(pts)
    delta = coeffs.delta
    report.probes.append(
        Probe(
            label="eigenvalues_a",
            lhs=lo,
            bound=delta / 2.0,
            params={"max_eigenvalue": hi, "upper": 2.0 / delta, "samples": int(pts.shape[0])},
        )
    )
    report.fits.update({"min_eigenvalue": lo, "max_eigenvalue": hi})
    ratios = [pr.ratio for pr in report.probes[:3] if np.isfinite(pr.ratio)]
    report.fitted_constant = max(ratios) if ratios else float("nan")
    inside = lo >= delta / 2.0 and hi <= 2.0 / delta
    report.verdict = Verdict.PASS if inside else Verdict.FAIL
    if not inside:
        report.message = f"eigenvalues of a_n in [{lo:.4g}, {hi:.4g}], outside [{delta / 2:.4g}, {2 / delta:.4g}]"
    logger.info(
        "Mollified coefficient properties checked",
        extra={"n": int(n), "eigenvalues": [lo, hi], "verdict": report.verdict.value},
    )
    return report
