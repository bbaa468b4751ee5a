"""
Chaos-tail levels

    I_m = || int_{(0,inf)^m} e^{-nu (s_1 + ... + s_m)}
             sum_{k_1..k_m} [Q_{s_m}^{k_m} ... Q_{s_1}^{k_1} f]^2 ds ||_{L_p}^p

by a tensor product rule in the s variables. Every s runs over the same
geometric node set, integrated by the trapezoid rule in log s. A branch of
the composition tree is evolved once for all nodes with evolve_snapshots.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from errors import PreconditionError
from estimates.fitting import log_linear
from estimates.types import EstimateReport, Probe, Verdict
from fields.coefficients import CoefficientSet
from logging_config import get_logger
from semigroup.grid import GridFunction
from semigroup.operator import GridOperator
from semigroup.qops import contract
from worker import WorkerPool

logger = get_logger(__name__)

MAX_LEVEL = 3
TRUNCATION_LIMIT = 0.1
SYMMETRY_TOLERANCE = 1e-6


@dataclass(frozen=True)
class ChaosQuadSpec:
    """Nodes s = 2^k / nu for k = low .. high (count nodes, geometric)."""

    nu: float
    low_exp: float = -7.0
    high_exp: float = 2.0
    count: int = 10

    def __post_init__(self) -> None:
        if self.nu <= 0:
            raise PreconditionError(f"nu must be positive, got {self.nu}")
        if self.count < 2 or self.high_exp <= self.low_exp:
            raise PreconditionError("need at least two increasing quadrature nodes")

    @property
    def nodes(self) -> np.ndarray:
        return np.logspace(self.low_exp, self.high_exp, self.count, base=2.0) / self.nu

    @property
    def weights(self) -> np.ndarray:
        """Trapezoid weights in log s: int g ds = int g(s) s dlog s."""
        s = self.nodes
        logs = np.log(s)
        w = np.zeros_like(s)
        w[:-1] += 0.5 * np.diff(logs)
        w[1:] += 0.5 * np.diff(logs)
        return w * s

    @property
    def tail_weights(self) -> np.ndarray:
        """
        First-order weights of the omitted ranges: (0, s_min) at the first
        node and (s_max, inf) under the e^{-nu s} factor at the last.
        """
        s = self.nodes
        tail = np.zeros_like(s)
        tail[0] = s[0]
        tail[-1] = 1.0 / self.nu
        return tail

    def to_dict(self) -> Dict[str, Any]:
        return {"nu": self.nu, "low_exp": self.low_exp, "high_exp": self.high_exp, "count": self.count}


@dataclass
class ChaosTailReport:
    """Level values I_m and their fitted geometric decay."""

    nu: float
    p: float
    levels: List[Tuple[int, float]]
    decay_ratio: float
    ratios: List[float] = field(default_factory=list)
    truncation: Dict[int, float] = field(default_factory=dict)
    quad: Optional[ChaosQuadSpec] = None
    flags: List[str] = field(default_factory=list)

    def value(self, m: int) -> float:
        return dict(self.levels)[m]

    def rows(self) -> List[Dict[str, Any]]:
        return [
            {"m": m, "I_m": value, "truncation": self.truncation.get(m, float("nan")), "nu": self.nu, "p": self.p}
            for m, value in self.levels
        ]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "nu": self.nu,
            "p": self.p,
            "levels": [{"m": m, "I_m": v} for m, v in self.levels],
            "decay_ratio": self.decay_ratio,
            "ratios": list(self.ratios),
            "truncation": {str(m): v for m, v in self.truncation.items()},
            "quad": self.quad.to_dict() if self.quad else None,
            "flags": list(self.flags),
        }


@dataclass
class _Accumulator:
    """Per-level weighted sums of squared compositions and their tail mass."""

    shape: Tuple[int, ...]
    m_max: int
    sums: Dict[int, np.ndarray] = field(default_factory=dict)
    tails: Dict[int, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for m in range(1, self.m_max + 1):
            self.sums[m] = np.zeros(self.shape)
            self.tails[m] = 0.0

    def add(self, level: int, weight: float, tail_weight: float, square: np.ndarray) -> None:
        self.sums[level] += weight * square
        self.tails[level] += tail_weight * float(np.sum(square))

    def merge(self, other: "_Accumulator") -> None:
        for m in self.sums:
            self.sums[m] += other.sums[m]
            self.tails[m] += other.tails[m]


def _expand(
    op: GridOperator,
    g: GridFunction,
    quad: ChaosQuadSpec,
    columns: Sequence[int],
    dt_pde: Optional[float],
):
    """Yield (node index, k, Q_{s_i}^k g) for every node and column."""
    for i, snapshot in enumerate(op.evolve_snapshots(g, list(quad.nodes), dt_pde)):
        grad = op.gradient(snapshot)
        for k in columns:
            yield i, k, GridFunction(g.spec, contract(op, grad, k), snapshot.time_tag)


def _descend(
    op: GridOperator,
    g: GridFunction,
    level: int,
    weight: float,
    tail_weight: float,
    quad: ChaosQuadSpec,
    columns: Sequence[int],
    acc: _Accumulator,
    dt_pde: Optional[float],
) -> None:
    """Add every level >= `level` contribution of the subtree rooted at g."""
    s, w, tail = quad.nodes, quad.weights, quad.tail_weights
    for i, _k, child in _expand(op, g, quad, columns, dt_pde):
        decay = np.exp(-quad.nu * s[i])
        child_weight = weight * w[i] * decay
        child_tail = (tail_weight * w[i] + weight * tail[i]) * decay
        acc.add(level, child_weight, child_tail, child.values ** 2)
        if level < acc.m_max:
            _descend(op, child, level + 1, child_weight, child_tail, quad, columns, acc, dt_pde)


@dataclass
class _BranchTask:
    op: GridOperator
    root: GridFunction
    weight: float
    tail_weight: float
    quad: ChaosQuadSpec
    columns: List[int]
    m_max: int
    dt_pde: Optional[float]


def _run_branch(task: _BranchTask) -> _Accumulator:
    acc = _Accumulator(task.root.spec.shape, task.m_max)
    _descend(task.op, task.root, 2, task.weight, task.tail_weight, task.quad, task.columns, acc, task.dt_pde)
    return acc


def chaos_tail(
    f: GridFunction,
    coeffs: CoefficientSet,
    nu: float,
    m_max: int = MAX_LEVEL,
    quad_spec: Optional[ChaosQuadSpec] = None,
    p: float = 2.0,
    op: Optional[GridOperator] = None,
    pool: Optional[WorkerPool] = None,
    dt_pde: Optional[float] = None,
) -> ChaosTailReport:
    """
    I_m for m = 1 .. m_max and the fitted ratio I_{m+1} / I_m.

    Level-1 compositions are computed here; each of them roots an
    independent subtree for the deeper levels, and the subtrees are mapped
    over the pool and summed in submission order. Noise columns that vanish
    on the whole grid contribute nothing and are skipped.

    Raises:
        PreconditionError: m_max outside 1..3 or nu not positive.
    """
    if not 1 <= m_max <= MAX_LEVEL:
        raise PreconditionError(f"m_max must lie in 1..{MAX_LEVEL}, got {m_max}")
    quad = quad_spec if quad_spec is not None else ChaosQuadSpec(nu=nu)
    if quad.nu != nu:
        raise PreconditionError(f"quadrature built for nu={quad.nu}, asked for nu={nu}")
    op = op if op is not None else GridOperator(coeffs, f.spec)
    columns = op.nonzero_columns()
    skipped = coeffs.dim_d1 - len(columns)

    acc = _Accumulator(f.spec.shape, m_max)
    s, w, tail = quad.nodes, quad.weights, quad.tail_weights
    tasks: List[_BranchTask] = []
    for i, _k, child in _expand(op, f, quad, columns, dt_pde):
        decay = np.exp(-nu * s[i])
        weight, tail_weight = w[i] * decay, tail[i] * decay
        acc.add(1, weight, tail_weight, child.values ** 2)
        if m_max > 1:
            tasks.append(_BranchTask(op, child, weight, tail_weight, quad, columns, m_max, dt_pde))

    pool = pool or WorkerPool(1)
    for branch in pool.map_ordered(_run_branch, tasks):
        acc.merge(branch)

    cell = f.spec.cell_volume
    levels: List[Tuple[int, float]] = []
    truncation: Dict[int, float] = {}
    flags: List[str] = []
    for m in range(1, m_max + 1):
        integrand = acc.sums[m]
        levels.append((m, float(cell * np.sum(np.abs(integrand) ** p))))
        mass = float(np.sum(integrand))
        truncation[m] = acc.tails[m] / mass if mass > 0 else 0.0
        if truncation[m] > TRUNCATION_LIMIT:
            flags.append(f"truncation_m{m}")

    positive = [(m, v) for m, v in levels if v > 0]
    ratios = [b / a for (_, a), (_, b) in zip(levels, levels[1:]) if a > 0]
    if len(positive) >= 2:
        fit = log_linear([m for m, _ in positive], [v for _, v in positive])
        decay_ratio = float(np.exp(fit.slope))
    else:
        decay_ratio = float("nan")
    report = ChaosTailReport(
        nu=nu,
        p=p,
        levels=levels,
        decay_ratio=decay_ratio,
        ratios=ratios,
        truncation=truncation,
        quad=quad,
        flags=flags,
    )
    logger.info(
        "Chaos tail computed",
        extra={
            "nu": nu,
            "levels": levels,
            "decay_ratio": decay_ratio,
            "skipped_columns": skipped,
            "subtrees": len(tasks),
            "flags": flags,
        },
    )
    return report


def default_permutation(dim: int, noise_dim: int) -> List[int]:
    """
    Rotate the d blocks of d columns that follow the first d columns when
    noise_dim = d + d^2 (the symmetric blocks of the example); otherwise
    reverse all columns.
    """
    if noise_dim == dim + dim * dim:
        blocks = [list(range(dim + dim * i, dim + dim * (i + 1))) for i in range(dim)]
        rotated = blocks[1:] + blocks[:1]
        return list(range(dim)) + [k for block in rotated for k in block]
    return list(range(noise_dim))[::-1]


def chaos_symmetry_check(
    f: GridFunction,
    coeffs: CoefficientSet,
    nu: float,
    m_max: int = 2,
    quad_spec: Optional[ChaosQuadSpec] = None,
    p: float = 2.0,
    permutation: Optional[Sequence[int]] = None,
    tolerance: float = SYMMETRY_TOLERANCE,
    pool: Optional[WorkerPool] = None,
) -> EstimateReport:
    """I_m with the noise columns permuted equals I_m, to relative `tolerance`."""
    perm = list(permutation) if permutation is not None else default_permutation(coeffs.dim_d, coeffs.dim_d1)
    base = chaos_tail(f, coeffs, nu, m_max, quad_spec, p, pool=pool)
    permuted = chaos_tail(f, coeffs.permuted_columns(perm), nu, m_max, quad_spec, p, pool=pool)

    report = EstimateReport(name="chaos-symmetry", bound_shape="I_m(permuted) = I_m", tolerance=tolerance)
    worst = 0.0
    for (m, a), (_, b) in zip(base.levels, permuted.levels):
        scale = max(abs(a), abs(b))
        rel = abs(a - b) / scale if scale > 0 else 0.0
        worst = max(worst, rel)
        report.probes.append(Probe(label=f"m={m}", lhs=b, bound=a, params={"m": m, "relative_difference": rel}))
    report.fitted_constant = worst
    report.fits["permutation"] = perm
    report.verdict = Verdict.PASS if worst <= tolerance else Verdict.FAIL
    return report
