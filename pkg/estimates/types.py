"""
Type definitions for quantitative estimate checks.

Every checked inequality produces an EstimateReport: the empirical left
sides with standard errors, the shape of the right side, the fitted
constant, and a verdict. The inequalities involve constants nobody can
compute, so a verdict is about stability or sign of fitted quantities, never
about an absolute threshold.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np

# Standard-error multiplier used by every one-sided comparison.
SE_MARGIN = 3.0


class Verdict(str, Enum):
    """Outcome of one estimate check."""

    PASS = "pass"
    FAIL = "fail"
    INCONCLUSIVE = "inconclusive"

    @classmethod
    def combine(cls, verdicts: List["Verdict"]) -> "Verdict":
        """Fail dominates inconclusive, which dominates pass."""
        if any(v == cls.FAIL for v in verdicts):
            return cls.FAIL
        if any(v == cls.INCONCLUSIVE for v in verdicts):
            return cls.INCONCLUSIVE
        return cls.PASS


@dataclass
class Probe:
    """One probed configuration: an empirical left side against a bound."""

    label: str
    lhs: float
    se: float = 0.0
    bound: Optional[float] = None  # shape value of the right side, constant excluded
    params: Dict[str, Any] = field(default_factory=dict)

    @property
    def ratio(self) -> float:
        if self.bound is None:
            return float("nan")
        if self.bound == 0.0:
            return 0.0 if self.lhs == 0.0 else float("nan")
        return self.lhs / self.bound

    def to_dict(self) -> Dict[str, Any]:
        return {
            "label": self.label,
            "lhs": self.lhs,
            "se": self.se,
            "bound": self.bound,
            "ratio": self.ratio,
            **self.params,
        }


@dataclass
class EstimateReport:
    """
    Result of checking one inequality.

    verdict is PASS iff every probe satisfies the bound with the fitted
    constant within tolerance; INCONCLUSIVE when noise or censoring dominates.
    """

    name: str
    bound_shape: str
    probes: List[Probe] = field(default_factory=list)
    fitted_constant: float = float("nan")
    tolerance: float = 0.0
    verdict: Verdict = Verdict.INCONCLUSIVE

    # Secondary fitted quantities (slopes, decay rates, spreads)
    fits: Dict[str, Any] = field(default_factory=dict)
    flags: List[str] = field(default_factory=list)
    message: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.verdict == Verdict.PASS

    def flag(self, name: str) -> None:
        if name not in self.flags:
            self.flags.append(name)

    def rows(self) -> List[Dict[str, Any]]:
        """One row per probe plus a summary row, for CSV output."""
        rows = [{"check": self.name, "row": "probe", **p.to_dict()} for p in self.probes]
        rows.append(
            {
                "check": self.name,
                "row": "summary",
                "label": self.bound_shape,
                "fitted_constant": self.fitted_constant,
                "tolerance": self.tolerance,
                "verdict": self.verdict.value,
                "flags": ";".join(self.flags),
            }
        )
        return rows

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for JSON serialization."""
        return {
            "name": self.name,
            "bound_shape": self.bound_shape,
            "fitted_constant": json_safe(self.fitted_constant),
            "tolerance": self.tolerance,
            "verdict": self.verdict.value,
            "fits": {k: json_safe(v) for k, v in self.fits.items()},
            "flags": list(self.flags),
            "message": self.message,
            "probes": [{k: json_safe(v) for k, v in p.to_dict().items()} for p in self.probes],
        }


def json_safe(value: Any) -> Any:
    """JSON-safe version of numpy scalars, arrays and non-finite floats."""
    if isinstance(value, np.ndarray):
        return [json_safe(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [json_safe(v) for v in value]
    if isinstance(value, dict):
        return {k: json_safe(v) for k, v in value.items()}
    if isinstance(value, (np.floating, float)):
        f = float(value)
        return f if np.isfinite(f) else str(f)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def relative_spread(values: Any) -> float:
    """(max - min) / (max + min): values within +-x of their midrange iff spread <= x."""
    arr = np.asarray([v for v in np.ravel(values) if np.isfinite(v)], dtype=float)
    if arr.size == 0:
        return float("nan")
    hi, lo = float(arr.max()), float(arr.min())
    if hi + lo == 0.0:
        return 0.0
    return (hi - lo) / (hi + lo)


def mean_and_se(samples: Any) -> "tuple[float, float]":
    """Sample mean and its standard error, ignoring non-finite entries."""
    arr = np.asarray(samples, dtype=float).ravel()
    arr = arr[np.isfinite(arr)]
    if arr.size == 0:
        return float("nan"), float("nan")
    if arr.size == 1:
        return float(arr[0]), 0.0
    return float(arr.mean()), float(arr.std(ddof=1) / np.sqrt(arr.size))
