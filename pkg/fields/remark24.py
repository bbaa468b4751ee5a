"""
A drift in the Morrey class that is in no L_p with p > q.

Disjoint inverse-distance bumps of radii r_n are strung along the segment
[0, 1] e_1. With rho_n = r_n^{d-q} and x_n = 1 - 2 sum_{i<=n} rho_i, the n-th
bump is centred at c_n = (x_n + x_{n-1})/2 and reads

    b_n(x) = 1/|x - c_n e_1|  on |x - c_n e_1| < r_n.

Each bump has the same Morrey-q size, while sum r_n^{d-p} diverges for p > q
under the default log-squared radii.
"""

from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy import integrate

from errors import PreconditionError, RadiiRuleError
from fields.base import Field, FieldKind, FieldTraits
from fields.mollify import sphere_area
from logging_config import get_logger

logger = get_logger(__name__)

RHO_TOTAL = 0.5
_DIRECT_TERMS = 1_000_000
_SUM_CHUNK = 1 << 20
# Bump centres exposed as singular points for ball searches.
SINGULAR_CAP = 32


class RadiiRule(str, Enum):
    """Rules generating rho_n = r_n^{d-q}."""

    LOG_SQUARED = "log-squared"  # rho_n = c / (n log^2(n+1))
    GEOMETRIC = "geometric"  # rho_n = c theta^{n-1}


def _log_squared_terms(n: np.ndarray) -> np.ndarray:
    return 1.0 / (n * np.log(n + 1.0) ** 2)


@lru_cache(maxsize=1)
def log_squared_total() -> float:
    """
    sum_{n>=1} 1/(n log^2(n+1)).

    Direct summation of the first million terms, then the tail as the
    midpoint-shifted integral, computed in u = log x.
    """
    head = 0.0
    for start in range(1, _DIRECT_TERMS + 1, _SUM_CHUNK):
        n = np.arange(start, min(start + _SUM_CHUNK, _DIRECT_TERMS + 1), dtype=float)
        head += float(np.sum(_log_squared_terms(n)))
    lower = np.log(_DIRECT_TERMS + 0.5)
    tail, _ = integrate.quad(lambda u: 1.0 / np.log(np.exp(u) + 1.0) ** 2, lower, np.inf, limit=200)
    return head + tail


@dataclass(frozen=True)
class Remark24Params:
    """Parameters of the bump-chain construction."""

    q: float = 2.5
    dim: int = 3
    n_max: int = 1000
    radii_rule: RadiiRule = RadiiRule.LOG_SQUARED
    scale: Optional[float] = None  # c in the radii rule; None picks sum = 1/2
    theta: float = 0.5  # ratio of the geometric rule

    def __post_init__(self) -> None:
        gap = self.dim - self.q
        if not (0.0 < gap <= 1.0):
            raise PreconditionError(f"need d - q in (0, 1], got d={self.dim}, q={self.q}")
        if self.n_max < 1:
            raise PreconditionError("n_max must be a positive integer")
        if not 0.0 < self.theta < 1.0:
            raise PreconditionError("theta must lie in (0, 1)")

    @property
    def admissible_scale(self) -> float:
        """Largest c for which sum rho_n does not exceed 1/2."""
        if self.radii_rule == RadiiRule.LOG_SQUARED:
            return RHO_TOTAL / log_squared_total()
        return RHO_TOTAL * (1.0 - self.theta)

    def rho(self, n: np.ndarray) -> np.ndarray:
        """rho_n for an array of indices n >= 1."""
        c = self.admissible_scale if self.scale is None else self.scale
        n = np.asarray(n, dtype=float)
        if self.radii_rule == RadiiRule.LOG_SQUARED:
            return c * _log_squared_terms(n)
        return c * self.theta ** (n - 1.0)

    def check_rule(self) -> None:
        """Reject rules whose full rho sum exceeds 1/2."""
        if self.scale is None:
            return
        if self.scale > self.admissible_scale * (1.0 + 1e-12):
            raise RadiiRuleError(
                f"radii rule {self.radii_rule.value} with c={self.scale} sums to more than 1/2 "
                f"(admissible c <= {self.admissible_scale:.6g})"
            )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "q": self.q,
            "dim": self.dim,
            "n_max": self.n_max,
            "radii_rule": self.radii_rule.value,
            "scale": self.admissible_scale if self.scale is None else self.scale,
        }


@dataclass
class CentersReport:
    """Geometry of the generated bumps."""

    centers: np.ndarray  # c_n along e_1
    radii: np.ndarray  # r_n
    rho: np.ndarray  # r_n^{d-q}
    edges: np.ndarray  # x_0 = 1, x_1, ..., x_N
    disjoint: bool
    max_partial_sum: float
    notes: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "count": int(self.centers.size),
            "first_centers": self.centers[:8].tolist(),
            "first_radii": self.radii[:8].tolist(),
            "disjoint": self.disjoint,
            "max_partial_sum": self.max_partial_sum,
            "smallest_radius": float(self.radii[-1]),
        }


def build_centers(params: Remark24Params) -> CentersReport:
    """Centres, radii and edge points for the first n_max bumps."""
    params.check_rule()
    n = np.arange(1, params.n_max + 1, dtype=float)
    rho = params.rho(n)
    partial = np.cumsum(rho)
    if partial[-1] > RHO_TOTAL * (1.0 + 1e-12):
        raise RadiiRuleError(f"partial sum of rho_n reached {partial[-1]:.6g} > 1/2")
    edges = np.concatenate([[1.0], 1.0 - 2.0 * partial])
    centers = 0.5 * (edges[1:] + edges[:-1])
    radii = rho ** (1.0 / (params.dim - params.q))

    # Neighbours are the only candidates for overlap along the segment.
    gaps = centers[:-1] - centers[1:]
    disjoint = bool(np.all(gaps >= radii[:-1] + radii[1:])) if centers.size > 1 else True
    return CentersReport(
        centers=centers,
        radii=radii,
        rho=rho,
        edges=edges,
        disjoint=disjoint,
        max_partial_sum=float(partial[-1]),
    )


class Remark24Field(Field):
    """Scalar field: the sum of the first n_max bumps (+inf at each centre)."""

    traits = FieldTraits(kind=FieldKind.REMARK24, bounded=False)

    def __init__(self, params: Remark24Params) -> None:
        report = build_centers(params)
        singular = np.zeros((min(SINGULAR_CAP, report.centers.size), params.dim))
        singular[:, 0] = report.centers[:SINGULAR_CAP]
        super().__init__(
            dim=params.dim,
            singular_points=singular,
            roi_center=np.eye(params.dim)[0] * 0.5,
            roi_radius=0.5,
        )
        self.params = params
        self.report = report
        self._neg_edges = -report.edges  # ascending

    def bump_index(self, points: np.ndarray) -> np.ndarray:
        """1-based bump whose slab contains each point (0 if none)."""
        k = np.searchsorted(self._neg_edges, -points[:, 0], side="right")
        k[(k < 1) | (k > self.params.n_max)] = 0
        return k

    def _evaluate(self, points: np.ndarray) -> np.ndarray:
        k = self.bump_index(points)
        out = np.zeros(points.shape[0])
        hit = k > 0
        idx = k[hit] - 1
        diff = points[hit].copy()
        diff[:, 0] -= self.report.centers[idx]
        dist = np.linalg.norm(diff, axis=1)
        inside = dist < self.report.radii[idx]
        vals = np.zeros(dist.shape)
        with np.errstate(divide="ignore"):
            vals[inside] = 1.0 / dist[inside]
        out[hit] = vals
        return out

    def near_singular(self, points: np.ndarray, radius: float = 1e-14) -> np.ndarray:
        k = self.bump_index(points)
        mask = np.zeros(points.shape[0], dtype=bool)
        hit = k > 0
        diff = points[hit].copy()
        diff[:, 0] -= self.report.centers[k[hit] - 1]
        mask[hit] = np.linalg.norm(diff, axis=1) <= radius
        return mask

    def describe(self) -> Dict[str, Any]:
        return self.params.to_dict()


def remark24_drift(params: Remark24Params) -> Tuple[Remark24Field, CentersReport]:
    """The truncated bump chain and the report on its centres."""
    drift = Remark24Field(params)
    logger.info(
        "Built bump-chain drift",
        extra={
            "n_max": params.n_max,
            "q": params.q,
            "disjoint": drift.report.disjoint,
            "max_partial_sum": drift.report.max_partial_sum,
        },
    )
    return drift, drift.report


def remark24_lp_mass(params: Remark24Params, p: float, n_max: int) -> float:
    """
    Integral of b^p over B_1 for the first n_max bumps, in closed form.

    Each bump contributes |S^{d-1}| r_n^{d-p} / (d - p); the sum runs in
    chunks so n_max can reach the millions.
    """
    if not 0.0 < p < params.dim:
        raise PreconditionError(f"p must lie in (0, d) for a finite bump integral, got {p}")
    params.check_rule()
    exponent = (params.dim - p) / (params.dim - params.q)
    total = 0.0
    for start in range(1, n_max + 1, _SUM_CHUNK):
        n = np.arange(start, min(start + _SUM_CHUNK, n_max + 1), dtype=float)
        total += float(np.sum(params.rho(n) ** exponent))
    return sphere_area(params.dim) / (params.dim - p) * total
