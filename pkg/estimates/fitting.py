"""Ordinary least squares on transformed data, with explicit count cutoffs."""

from dataclasses import dataclass
from typing import Any, Dict, Sequence

import numpy as np


@dataclass(frozen=True)
class LinearFit:
    """y ~ intercept + slope x."""

    slope: float
    intercept: float
    r_squared: float
    n: int

    @property
    def usable(self) -> bool:
        return self.n >= 2 and np.isfinite(self.slope)

    def to_dict(self) -> Dict[str, Any]:
        return {"slope": self.slope, "intercept": self.intercept, "r_squared": self.r_squared, "n": self.n}


NO_FIT = LinearFit(float("nan"), float("nan"), float("nan"), 0)


def ols(x: Sequence[float], y: Sequence[float]) -> LinearFit:
    """Least-squares line through the finite (x, y) pairs."""
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    keep = np.isfinite(xa) & np.isfinite(ya)
    xa, ya = xa[keep], ya[keep]
    if xa.size < 2 or np.ptp(xa) == 0.0:
        return LinearFit(float("nan"), float("nan"), float("nan"), int(xa.size))
    design = np.column_stack([np.ones_like(xa), xa])
    coef, _, _, _ = np.linalg.lstsq(design, ya, rcond=None)
    resid = ya - design @ coef
    total = float(np.sum((ya - ya.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / total if total > 0 else 1.0
    return LinearFit(float(coef[1]), float(coef[0]), r2, int(xa.size))


def log_linear(x: Sequence[float], y: Sequence[float]) -> LinearFit:
    """Fit log y against x, dropping non-positive y."""
    ya = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        logy = np.where(ya > 0, np.log(ya), np.nan)
    return ols(x, logy)


def log_log(x: Sequence[float], y: Sequence[float]) -> LinearFit:
    """Fit log y against log x; the slope is the power-law exponent."""
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return ols(np.where(xa > 0, np.log(xa), np.nan), np.where(ya > 0, np.log(ya), np.nan))


def max_ratio(lhs: Sequence[float], bound: Sequence[float]) -> float:
    """Smallest constant N with lhs <= N bound at every finite probe."""
    la = np.asarray(lhs, dtype=float)
    ba = np.asarray(bound, dtype=float)
    keep = np.isfinite(la) & np.isfinite(ba) & (ba > 0)
    if not keep.any():
        return float("nan")
    return float(max(0.0, np.max(la[keep] / ba[keep])))
