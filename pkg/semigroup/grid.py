"""
Uniform tensor grids over axis-aligned boxes and functions sampled on them.
"""

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from errors import PreconditionError
from logging_config import get_logger

logger = get_logger(__name__)

GRID_MAGIC = b"MLGF"
GRID_FORMAT_VERSION = 1

# Padding of the box around the initial support, in units of sqrt(T / delta).
PADDING_FACTOR = 6.0


class Boundary(str, Enum):
    """Boundary conditions on the box."""

    ZERO_DIRICHLET = "zero-dirichlet"


@dataclass(frozen=True)
class GridSpec:
    """
    Nodes lo_i + j h along each axis of the box, j = 0 .. n_i - 1.

    The pitch must divide every side length; the box is given as one
    (lo, hi) pair per axis.
    """

    box: Tuple[Tuple[float, float], ...]
    h: float
    boundary: Boundary = Boundary.ZERO_DIRICHLET

    def __post_init__(self) -> None:
        if self.h <= 0:
            raise PreconditionError(f"grid pitch must be positive, got {self.h}")
        object.__setattr__(self, "box", tuple((float(lo), float(hi)) for lo, hi in self.box))
        for lo, hi in self.box:
            if hi <= lo:
                raise PreconditionError(f"empty box side [{lo}, {hi}]")
            cells = (hi - lo) / self.h
            if abs(cells - round(cells)) > 1e-6:
                raise PreconditionError(f"pitch {self.h} does not divide side [{lo}, {hi}]")
        object.__setattr__(self, "boundary", Boundary(self.boundary))

    @classmethod
    def cube(cls, dim: int = 3, half_width: float = 4.0, h: float = 0.1) -> "GridSpec":
        """[-half_width, half_width]^dim."""
        return cls(box=tuple((-half_width, half_width) for _ in range(dim)), h=h)

    @property
    def dim(self) -> int:
        return len(self.box)

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(int(round((hi - lo) / self.h)) + 1 for lo, hi in self.box)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def cell_volume(self) -> float:
        return self.h ** self.dim

    def axes(self) -> List[np.ndarray]:
        return [lo + self.h * np.arange(n) for (lo, _), n in zip(self.box, self.shape)]

    def points(self) -> np.ndarray:
        """All nodes as an (N, d) array in C order."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def refined(self) -> "GridSpec":
        return GridSpec(self.box, self.h / 2.0, self.boundary)

    def covers(self, center: Sequence[float], radius: float, T: float, delta: float) -> bool:
        """Whether the box contains B(center, radius + 6 sqrt(T/delta))."""
        pad = radius + PADDING_FACTOR * np.sqrt(T / delta)
        c = np.asarray(center, dtype=float)
        return all(lo <= ci - pad and ci + pad <= hi for ci, (lo, hi) in zip(c, self.box))

    def to_dict(self) -> Dict[str, Any]:
        return {"box": [list(b) for b in self.box], "h": self.h, "boundary": self.boundary.value, "shape": list(self.shape)}


@dataclass
class GridFunction:
    """Values of a scalar function at the nodes of a grid, tagged with a time."""

    spec: GridSpec
    values: np.ndarray
    time_tag: float = 0.0
    flags: List[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.spec.shape:
            raise PreconditionError(f"values of shape {self.values.shape} on a grid of shape {self.spec.shape}")
        if not np.all(np.isfinite(self.values)):
            raise PreconditionError("grid function has non-finite values")
        if self.time_tag < 0:
            raise PreconditionError("time tag must be nonnegative")

    @classmethod
    def sample(cls, spec: GridSpec, f: Callable[[np.ndarray], Any], time_tag: float = 0.0) -> "GridFunction":
        """Evaluate a vectorised f on every node."""
        values = np.asarray(f(spec.points()), dtype=float).reshape(spec.shape)
        return cls(spec, values, time_tag)

    @classmethod
    def zeros(cls, spec: GridSpec) -> "GridFunction":
        return cls(spec, np.zeros(spec.shape))

    def with_values(self, values: np.ndarray, time_tag: Optional[float] = None) -> "GridFunction":
        return GridFunction(self.spec, values, self.time_tag if time_tag is None else time_tag)

    def flag(self, name: str) -> None:
        if name not in self.flags:
            self.flags.append(name)

    def lp_norm(self, p: float) -> float:
        """(h^d sum |v|^p)^{1/p}."""
        return float((self.spec.cell_volume * np.sum(np.abs(self.values) ** p)) ** (1.0 / p))

    def lp_power(self, p: float) -> float:
        """h^d sum |v|^p."""
        return float(self.spec.cell_volume * np.sum(np.abs(self.values) ** p))

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def distance(self, other: "GridFunction", p: Optional[float] = None) -> float:
        """Sup distance, or grid-L_p distance when p is given."""
        if other.spec != self.spec:
            raise PreconditionError("grid functions live on different grids")
        diff = self.with_values(self.values - other.values)
        return diff.sup_norm() if p is None else diff.lp_norm(p)

    def __add__(self, other: "GridFunction") -> "GridFunction":
        return self.with_values(self.values + other.values)

    def __mul__(self, scalar: float) -> "GridFunction":
        return self.with_values(self.values * scalar)

    __rmul__ = __mul__

    def boundary_mass(self, width: int = 3) -> float:
        """Sum of |v| over nodes within `width` pitches of the box boundary."""
        inner = tuple(slice(width, n - width) for n in self.spec.shape)
        total = float(np.sum(np.abs(self.values)))
        interior = float(np.sum(np.abs(self.values[inner]))) if all(n > 2 * width for n in self.spec.shape) else 0.0
        return total - interior

    def to_dict(self) -> Dict[str, Any]:
        return {
            "spec": self.spec.to_dict(),
            "time_tag": self.time_tag,
            "min": float(self.values.min()),
            "max": float(self.values.max()),
            "flags": list(self.flags),
        }


def persist_grid_function(gf: GridFunction, target: Union[str, Path]) -> Dict[str, str]:
    """
    Write the values as flat little-endian float64 in C order plus a JSON
    sidecar with the grid spec and time tag.

    Returns:
        Paths of the written files keyed by "data" and "sidecar".
    """
    base = Path(target)
    base.parent.mkdir(parents=True, exist_ok=True)
    data_path = base.with_suffix(".bin")
    sidecar_path = base.with_suffix(".json")
    with open(data_path, "wb") as fh:
        fh.write(GRID_MAGIC)
        fh.write(np.asarray([GRID_FORMAT_VERSION], dtype="<u2").tobytes())
        fh.write(np.ascontiguousarray(gf.values, dtype="<f8").tobytes())
    meta = {"format_version": GRID_FORMAT_VERSION, **gf.to_dict()}
    sidecar_path.write_text(json.dumps(meta, indent=2, sort_keys=True))
    logger.debug("Persisted grid function", extra={"path": str(data_path), "nodes": gf.spec.size})
    return {"data": str(data_path), "sidecar": str(sidecar_path)}


def load_grid_function(target: Union[str, Path]) -> GridFunction:
    """Inverse of persist_grid_function."""
    base = Path(target)
    meta = json.loads(base.with_suffix(".json").read_text())
    raw = base.with_suffix(".bin").read_bytes()
    if raw[:4] != GRID_MAGIC:
        raise PreconditionError(f"{base}: not a grid function file")
    version = int(np.frombuffer(raw[4:6], dtype="<u2")[0])
    if version != GRID_FORMAT_VERSION:
        raise PreconditionError(f"{base}: unsupported format version {version}")
    spec_meta = meta["spec"]
    spec = GridSpec(tuple(tuple(b) for b in spec_meta["box"]), spec_meta["h"], spec_meta["boundary"])
    values = np.frombuffer(raw[6:], dtype="<f8")
    if values.size != spec.size:
        raise PreconditionError(f"{base}: expected {spec.size} values, found {values.size}")
    gf = GridFunction(spec, values.reshape(spec.shape).copy(), meta["time_tag"])
    gf.flags = list(meta.get("flags", []))
    return gf
