"""
Q-operators Q_t^k f = sigma^{ik} D_i T_t f on the grid.
"""

from typing import Dict, List, Optional

import numpy as np

from errors import PreconditionError
from fields.coefficients import CoefficientSet
from semigroup.grid import GridFunction
from semigroup.operator import GridOperator


def contract(op: GridOperator, grad: np.ndarray, k: int) -> np.ndarray:
    """sum_i sigma^{ik} g_i at every node."""
    return np.einsum("i...,i...->...", op.sigma_column(k), grad)


def q_operator(
    k: int,
    t: float,
    f: GridFunction,
    coeffs: CoefficientSet,
    op: Optional[GridOperator] = None,
    dt_pde: Optional[float] = None,
) -> GridFunction:
    """
    Q_t^k f: evolve to t, take centred differences, contract with sigma^{.k}.

    Raises:
        PreconditionError: t <= 0 or k outside the noise dimension.
    """
    return q_operator_all(t, f, coeffs, op=op, dt_pde=dt_pde, columns=[k])[k]


def q_operator_all(
    t: float,
    f: GridFunction,
    coeffs: CoefficientSet,
    op: Optional[GridOperator] = None,
    dt_pde: Optional[float] = None,
    columns: Optional[List[int]] = None,
) -> Dict[int, GridFunction]:
    """Q_t^k f for every k in `columns` (all noise indices by default), one evolve."""
    if t <= 0:
        raise PreconditionError(f"Q-operators need t > 0, got {t}")
    columns = list(range(coeffs.dim_d1)) if columns is None else list(columns)
    bad = [k for k in columns if not 0 <= k < coeffs.dim_d1]
    if bad:
        raise PreconditionError(f"noise indices {bad} outside [0, {coeffs.dim_d1})")
    op = op if op is not None else GridOperator(coeffs, f.spec)
    evolved = op.evolve(f, t, dt_pde)
    grad = op.gradient(evolved)
    out = {}
    for k in columns:
        qf = GridFunction(f.spec, contract(op, grad, k), evolved.time_tag)
        for flag in evolved.flags:
            qf.flag(flag)
        out[k] = qf
    return out
