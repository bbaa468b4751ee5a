"""
Monte Carlo realisation of T_t f(x) = E_x f(x_t).
"""

from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from errors import PreconditionError
from estimates.types import mean_and_se
from fields.coefficients import CoefficientSet
from logging_config import get_logger
from sde.euler import euler_maruyama
from sde.types import SimConfig
from worker import WorkerPool

logger = get_logger(__name__)


@dataclass
class FeynmanKacResult:
    """Sample means of f(x_t) with standard errors, one per start point."""

    points: np.ndarray
    t: float
    values: np.ndarray
    se: np.ndarray
    dead_paths: np.ndarray
    flags: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "t": self.t,
            "points": self.points.tolist(),
            "values": self.values.tolist(),
            "se": self.se.tolist(),
            "dead_paths": self.dead_paths.tolist(),
            "flags": list(self.flags),
        }


def feynman_kac(
    f: Callable[[np.ndarray], Any],
    coeffs: CoefficientSet,
    t: float,
    x_list: Sequence[Sequence[float]],
    mc_config: SimConfig,
    pool: Optional[WorkerPool] = None,
) -> FeynmanKacResult:
    """
    Average f over Euler terminal points at time t for each start.

    Only terminal points are kept. Start i uses master seed
    mc_config.master_seed + i, so the estimates at different points are
    independent and each is reproducible on its own. Dead paths are
    excluded from the averages and reported per point.
    """
    if t <= 0:
        raise PreconditionError(f"t must be positive, got {t}")
    points = np.atleast_2d(np.asarray(x_list, dtype=float))
    if points.shape[1] != coeffs.dim_d:
        raise PreconditionError(f"start points must have {coeffs.dim_d} components")
    base = SimConfig(**{**mc_config.to_dict(), "T": t, "store_paths": False, "stop_on_exit": False})

    values, ses, dead = [], [], []
    flags: List[str] = []
    for i, x in enumerate(points):
        batch = euler_maruyama(coeffs, x, base.with_seed(base.master_seed + i), pool=pool)
        terminal = batch.terminal[batch.alive]
        mean, se = mean_and_se(np.asarray(f(terminal), dtype=float))
        values.append(mean)
        ses.append(se)
        dead.append(batch.dead_count)
        if batch.dead_count and "dead_paths" not in flags:
            flags.append("dead_paths")

    result = FeynmanKacResult(
        points=points,
        t=t,
        values=np.asarray(values),
        se=np.asarray(ses),
        dead_paths=np.asarray(dead, dtype=int),
        flags=flags,
    )
    logger.info(
        "Feynman-Kac estimates computed",
        extra={"t": t, "points": len(points), "n_paths": base.n_paths, "flags": flags},
    )
    return result
