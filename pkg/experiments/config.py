"""
Experiment configuration files.

A config is flat `key = value` text with dotted section keys:

    # exit tails of the explicit example
    experiment = exit-stats
    field.kind = example
    field.beta = 0.3
    sim.dt = 1e-3
    sim.n_paths = 4096
    check.radii = [0.25, 0.5, 1.0]
    output.dir = runs/exit

Values are integers, floats, booleans (true/false), JSON lists or bare
strings. `field.*` and `fieldN.*` sections define fields through the field
registry; everything else is a numeric parameter. Every error carries the
line it came from.
"""

import hashlib
import json
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Union

import numpy as np

from errors import ConfigError, PreconditionError
from fields.coefficients import CoefficientSet
from fields.registry import COMPONENTS, Built, get_field_registry, parse_kind
from logging_config import get_logger
from morrey.norms import SearchBudget
from sde.types import SimConfig

logger = get_logger(__name__)

_KEY_RE = re.compile(r"^[A-Za-z][A-Za-z0-9_]*(\.[A-Za-z0-9_]+)*$")
_INT_RE = re.compile(r"^[+-]?\d+$")
_FIELD_SECTION_RE = re.compile(r"^field\d*$")

SECTIONS = ("params", "sim", "grid", "check", "search", "output")
# Keys that never reach the config hash.
UNHASHED_SECTIONS = ("output",)
# SimConfig fields in the order their names are searched for in error messages.
_SIM_KEYS = ("n_paths", "record_every", "master_seed", "dt", "T")


class ExperimentKind(str, Enum):
    """Experiment kinds a config can name."""

    MORREY_NORM = "morrey-norm"
    OSCILLATION = "oscillation"
    EMBEDDING = "embedding"
    SIMULATE = "simulate"
    EXIT_STATS = "exit-stats"
    LAPLACE = "laplace"
    INCREMENTS = "increments"
    KRYLOV_CHECK = "krylov-check"
    HEAT_KERNEL = "heat-kernel"
    SEMIGROUP = "semigroup"
    CHAOS_DECAY = "chaos-decay"
    MOLLIFY_CONVERGENCE = "mollify-convergence"
    COUNTEREXAMPLE = "counterexample"
    DERIVATIVE_FLOW = "derivative-flow"
    MOLLIFIER_BOUND = "mollifier-bound"
    POINCARE = "poincare"
    OCCUPATION = "occupation"
    VISIT_PROBABILITY = "visit-probability"
    ITO_FORMULA = "ito-formula"
    SKOROKHOD = "skorokhod"
    MOLLIFIED_COEFFICIENTS = "mollified-coefficients"


# Kinds that consume one scalar, vector or matrix field instead of (sigma, b).
SINGLE_FIELD_KINDS = {
    ExperimentKind.MORREY_NORM: "drift",
    ExperimentKind.OSCILLATION: "a",
    ExperimentKind.EMBEDDING: "drift",
    ExperimentKind.MOLLIFIER_BOUND: "drift",
    ExperimentKind.COUNTEREXAMPLE: "drift",
}

DEFAULTS: Dict[str, Any] = {
    "params.delta": 0.4,
    "params.q": 2.5,
    "params.R0": 1.0,
    "sim.dt": 1e-3,
    "sim.T": 1.0,
    "sim.n_paths": 4096,
    "sim.master_seed": 0,
    "sim.taming": False,
    "sim.record_every": 1,
    "grid.half_width": 4.0,
    "grid.h": 0.1,
    "output.plots": True,
    "output.persist": False,
}

KIND_DEFAULTS: Dict[ExperimentKind, Dict[str, Any]] = {
    ExperimentKind.MORREY_NORM: {"params.q": 2.0},
    ExperimentKind.OSCILLATION: {"check.r": 0.5},
    ExperimentKind.SIMULATE: {"sim.T": 2.0, "check.radii": [1.0]},
    ExperimentKind.EXIT_STATS: {"check.radii": [0.25, 0.5, 1.0], "check.n_max": 4, "check.tail_step": 0.25},
    ExperimentKind.LAPLACE: {"check.radii": [1.0], "check.lambdas": [1.0, 4.0, 16.0]},
    ExperimentKind.INCREMENTS: {"sim.T": 0.25, "check.m_list": [2, 4]},
    ExperimentKind.KRYLOV_CHECK: {"sim.T": 2.0, "check.radii": [0.5, 1.0], "check.d0": 2.5},
    ExperimentKind.HEAT_KERNEL: {"sim.T": 4.0, "sim.record_every": 10, "check.lambdas": [1.0, 2.0, 4.0, 8.0, 16.0]},
    ExperimentKind.SEMIGROUP: {"check.times": [0.05, 0.1, 0.2, 0.5, 1.0], "check.s": 0.1, "check.t": 0.25},
    ExperimentKind.CHAOS_DECAY: {"check.nu": 4.0, "check.m_max": 3, "check.symmetry": False},
    ExperimentKind.MOLLIFY_CONVERGENCE: {"check.ns": [2, 4, 8, 16], "check.t": 0.25, "check.s": 0.1},
    ExperimentKind.COUNTEREXAMPLE: {
        "check.n_max": [100, 1000, 10000],
        "check.mass_n_max": [1000, 1000000],
        "check.mass_growth": 10.0,
        "check.tolerance": 0.25,
    },
    ExperimentKind.DERIVATIVE_FLOW: {
        "sim.T": 0.25,
        "check.times": [0.1, 0.25],
        "check.etas": [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
        "check.n": 8,
        "check.width": 0.5,
    },
    ExperimentKind.MOLLIFIER_BOUND: {"check.ns": [2, 4, 8, 16]},
    ExperimentKind.POINCARE: {"check.n": 8, "check.radii": [0.125, 0.25, 0.5]},
    ExperimentKind.OCCUPATION: {},
    ExperimentKind.VISIT_PROBABILITY: {"sim.T": 2.0, "check.R": 1.0},
    ExperimentKind.ITO_FORMULA: {"sim.T": 0.5, "check.width": 0.5},
    ExperimentKind.SKOROKHOD: {"sim.T": 0.5, "sim.n_paths": 1024, "check.ns": [2, 4, 8, 16]},
    ExperimentKind.MOLLIFIED_COEFFICIENTS: {"check.n": 8, "check.samples": 1000},
}

Value = Union[int, float, bool, str, List[Any]]


def parse_value(text: str, line: Optional[int] = None) -> Value:
    """Parse one right-hand side."""
    raw = text.strip()
    if not raw:
        raise ConfigError("empty value", line=line)
    if raw.startswith("["):
        try:
            return json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed list {raw!r}: {exc.msg}", line=line) from exc
    lowered = raw.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    if _INT_RE.match(raw):
        return int(raw)
    try:
        return float(raw)
    except ValueError:
        pass
    if len(raw) >= 2 and raw[0] == raw[-1] and raw[0] in "\"'":
        return raw[1:-1]
    return raw


def _strip_comment(line: str) -> str:
    if line.lstrip().startswith("#"):
        return ""
    match = re.search(r"\s#", line)
    return line[: match.start()] if match else line


def canonical_value(value: Any) -> str:
    return json.dumps(value, sort_keys=True, separators=(",", ":"))


@dataclass
class ExperimentConfig:
    """
    A parsed experiment configuration.

    `values` holds every dotted key except `experiment`; `lines` maps keys
    to the line they were read from (absent for overrides and defaults).
    """

    kind: ExperimentKind
    values: Dict[str, Value] = field(default_factory=dict)
    lines: Dict[str, int] = field(default_factory=dict)
    source: Optional[Path] = None

    # Lookup

    def has(self, key: str) -> bool:
        return key in self.values

    def get(self, key: str, default: Any = None) -> Any:
        """Explicit value, then the kind default, then the global default."""
        if key in self.values:
            return self.values[key]
        kind_defaults = KIND_DEFAULTS.get(self.kind, {})
        if key in kind_defaults:
            return kind_defaults[key]
        return DEFAULTS.get(key, default)

    def line_of(self, key: str) -> Optional[int]:
        return self.lines.get(key)

    def error(self, key: str, message: str) -> ConfigError:
        """A ConfigError pointing at the line of `key` (or at the key itself)."""
        return ConfigError(message, line=self.line_of(key), key=key)

    def number(self, key: str, default: Optional[float] = None) -> float:
        value = self.get(key, default)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise self.error(key, f"{key} must be a number, got {value!r}")
        return float(value)

    def integer(self, key: str, default: Optional[int] = None) -> int:
        value = self.get(key, default)
        if isinstance(value, bool) or not isinstance(value, int):
            if isinstance(value, float) and value.is_integer():
                return int(value)
            raise self.error(key, f"{key} must be an integer, got {value!r}")
        return value

    def flag(self, key: str, default: bool = False) -> bool:
        value = self.get(key, default)
        if not isinstance(value, bool):
            raise self.error(key, f"{key} must be true or false, got {value!r}")
        return value

    def numbers(self, key: str, default: Optional[Sequence[float]] = None) -> List[float]:
        value = self.get(key, default)
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            value = [value]
        if not isinstance(value, list) or not value:
            raise self.error(key, f"{key} must be a nonempty list of numbers, got {value!r}")
        if any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in value):
            raise self.error(key, f"{key} must contain numbers only")
        return [float(v) for v in value]

    def vector(self, key: str, dim: int, default: Optional[Sequence[float]] = None) -> np.ndarray:
        value = self.get(key, default)
        if value is None:
            return np.zeros(dim)
        arr = np.asarray(self.numbers(key, value), dtype=float)
        if arr.size == 1:
            arr = np.full(dim, arr[0])
        if arr.size != dim:
            raise self.error(key, f"{key} must have {dim} components, got {arr.size}")
        return arr

    def vectors(self, key: str, dim: int) -> np.ndarray:
        value = self.get(key)
        arr = np.asarray(value, dtype=float) if isinstance(value, list) else None
        if arr is None or arr.ndim != 2 or arr.shape[1] != dim or arr.shape[0] == 0:
            raise self.error(key, f"{key} must be a nonempty list of {dim}-vectors")
        return arr

    def section(self, prefix: str) -> Dict[str, Value]:
        """Keys under `prefix.` with the prefix removed."""
        head = prefix + "."
        return {k[len(head):]: v for k, v in self.values.items() if k.startswith(head)}

    # Fields

    @property
    def field_names(self) -> List[str]:
        names = {key.split(".", 1)[0] for key in self.values if _FIELD_SECTION_RE.match(key.split(".", 1)[0])}
        return sorted(names, key=lambda n: (len(n), n))

    def field_definition(self, name: str = "field") -> Dict[str, Value]:
        return self.section(name)

    # Derived objects

    def sim_config(self, **overrides: Any) -> SimConfig:
        """SimConfig from `sim.*`, with overrides for operation-specific needs."""
        params = {
            "dt": self.number("sim.dt"),
            "T": self.number("sim.T"),
            "n_paths": self.integer("sim.n_paths"),
            "master_seed": self.integer("sim.master_seed"),
            "taming": self.flag("sim.taming"),
            "record_every": self.integer("sim.record_every"),
        }
        params.update(overrides)
        try:
            return SimConfig(**params)
        except PreconditionError as exc:
            message = str(exc)
            key = next((f"sim.{name}" for name in _SIM_KEYS if name in message), "sim.dt")
            raise self.error(key, message) from exc

    def search_budget(self) -> SearchBudget:
        base = SearchBudget()
        return SearchBudget(
            nodes=self.integer("search.nodes", base.nodes),
            depth=self.integer("search.depth", base.depth),
            lattice_cap=self.integer("search.lattice_cap", base.lattice_cap),
            singular_cap=self.integer("search.singular_cap", base.singular_cap),
            refine_rounds=self.integer("search.refine_rounds", base.refine_rounds),
        )

    @property
    def seeds(self) -> List[int]:
        return [self.integer("sim.master_seed")] if self.has("sim.master_seed") or self.uses_paths else []

    @property
    def uses_paths(self) -> bool:
        return self.kind in PATH_KINDS

    # Identity

    def canonical_lines(self) -> List[str]:
        lines = [f"experiment={self.kind.value}"]
        for key in sorted(self.values):
            if key.split(".", 1)[0] in UNHASHED_SECTIONS:
                continue
            lines.append(f"{key}={canonical_value(self.values[key])}")
        return lines

    @property
    def config_hash(self) -> str:
        text = "\n".join(self.canonical_lines()) + "\n"
        return hashlib.sha256(text.encode("utf-8")).hexdigest()

    @property
    def short_hash(self) -> str:
        return self.config_hash[:12]

    def with_overrides(self, overrides: Mapping[str, Value]) -> "ExperimentConfig":
        """Copy with some keys replaced; `experiment` switches the kind."""
        values = dict(self.values)
        kind = self.kind
        for key, value in overrides.items():
            if key == "experiment":
                kind = parse_kind_name(str(value))
                continue
            values[key] = value
        return ExperimentConfig(kind=kind, values=values, lines=dict(self.lines), source=self.source)

    def to_text(self) -> str:
        """Serialize back to config text (round-trips through parse_config_text)."""
        body = [f"experiment = {self.kind.value}"]
        for key in sorted(self.values):
            value = self.values[key]
            text = canonical_value(value) if isinstance(value, (list, bool)) else str(value)
            body.append(f"{key} = {text}")
        return "\n".join(body) + "\n"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "experiment": self.kind.value,
            "values": dict(self.values),
            "config_hash": self.config_hash,
            "source": str(self.source) if self.source else None,
        }


PATH_KINDS = {
    ExperimentKind.SIMULATE,
    ExperimentKind.EXIT_STATS,
    ExperimentKind.LAPLACE,
    ExperimentKind.INCREMENTS,
    ExperimentKind.KRYLOV_CHECK,
    ExperimentKind.HEAT_KERNEL,
    ExperimentKind.DERIVATIVE_FLOW,
    ExperimentKind.OCCUPATION,
    ExperimentKind.VISIT_PROBABILITY,
    ExperimentKind.ITO_FORMULA,
    ExperimentKind.SKOROKHOD,
}


def parse_kind_name(name: str, line: Optional[int] = None) -> ExperimentKind:
    try:
        return ExperimentKind(name.strip())
    except ValueError as exc:
        known = ", ".join(k.value for k in ExperimentKind)
        raise ConfigError(f"unknown experiment {name!r} (known: {known})", line=line, key="experiment") from exc


def parse_assignments(text: str) -> "tuple[Dict[str, Value], Dict[str, int]]":
    """Parse `key = value` lines into values and line numbers."""
    values: Dict[str, Value] = {}
    lines: Dict[str, int] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", line=number)
        key, _, rhs = line.partition("=")
        key = key.strip()
        if not _KEY_RE.match(key):
            raise ConfigError(f"malformed key {key!r}", line=number)
        if key in values:
            raise ConfigError(f"duplicate key {key!r} (first on line {lines[key]})", line=number)
        values[key] = parse_value(rhs, line=number)
        lines[key] = number
    return values, lines


def parse_config_text(text: str, source: Optional[Path] = None) -> ExperimentConfig:
    """
    Parse config text.

    Raises:
        ConfigError: Syntax errors, unknown sections or a missing experiment.
    """
    values, lines = parse_assignments(text)
    if "experiment" not in values:
        raise ConfigError("missing 'experiment = <kind>'", key="experiment")
    kind = parse_kind_name(str(values.pop("experiment")), line=lines.pop("experiment"))

    for key in values:
        section = key.split(".", 1)[0]
        if "." not in key:
            raise ConfigError(f"key {key!r} has no section (expected e.g. sim.{key})", line=lines[key])
        if section not in SECTIONS and not _FIELD_SECTION_RE.match(section):
            raise ConfigError(f"unknown section {section!r} in {key!r}", line=lines[key])
    return ExperimentConfig(kind=kind, values=values, lines=lines, source=source)


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    """Read and parse a config file."""
    source = Path(path)
    try:
        text = source.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {source}: {exc.strerror}") from exc
    config = parse_config_text(text, source=source)
    logger.info("Loaded config", extra={"path": str(source), "experiment": config.kind.value, "keys": len(config.values)})
    return config


def load_grid(path: Union[str, Path]) -> Dict[str, List[Value]]:
    """
    Read a sweep grid: the same syntax, every value a list of candidates.

    Raises:
        ConfigError: Empty grid, or a key whose value list is empty.
    """
    source = Path(path)
    try:
        text = source.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read grid {source}: {exc.strerror}") from exc
    values, lines = parse_assignments(text)
    if not values:
        raise ConfigError(f"sweep grid {source} is empty")
    grid: Dict[str, List[Value]] = {}
    for key, value in values.items():
        candidates = value if isinstance(value, list) else [value]
        if not candidates:
            raise ConfigError(f"grid key {key!r} has no values", line=lines[key])
        grid[key] = candidates
    return grid


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def build_fields(config: ExperimentConfig) -> Dict[str, Built]:
    """
    Build every field section through the registry.

    Raises:
        ConfigError: No field section, or a definition the registry rejects
            (reported at the line of that section's kind key).
    """
    names = config.field_names
    if not names:
        raise ConfigError("no field defined (add field.kind = ...)", key="field.kind")
    registry = get_field_registry()
    component_default = SINGLE_FIELD_KINDS.get(config.kind)
    built: Dict[str, Built] = {}
    for name in names:
        definition = config.field_definition(name)
        kind_key = f"{name}.kind"
        try:
            if component_default is not None:
                component = str(definition.get("component", component_default))
                if component not in COMPONENTS:
                    raise ConfigError(f"unknown component {component!r} (known: {', '.join(COMPONENTS)})")
                built[name] = registry.build_field(definition, component=component)
            else:
                built[name] = registry.build_coefficients(definition)
        except ConfigError as exc:
            raise ConfigError(exc.args[0], line=config.line_of(kind_key), key=kind_key) from exc
        except PreconditionError as exc:
            raise ConfigError(str(exc), line=config.line_of(kind_key), key=kind_key) from exc
    return built


def dimension_of(built: Built) -> int:
    return built.dim_d if isinstance(built, CoefficientSet) else built.dim


def _require(config: ExperimentConfig, key: str, ok: bool, message: str) -> None:
    if not ok:
        raise config.error(key, message)


def _positive(config: ExperimentConfig, key: str) -> float:
    value = config.number(key)
    _require(config, key, value > 0, f"{key} must be positive, got {value}")
    return value


def _positive_list(config: ExperimentConfig, key: str) -> List[float]:
    values = config.numbers(key)
    _require(config, key, all(v > 0 for v in values), f"{key} must be positive")
    return values


def _increasing_ints(config: ExperimentConfig, key: str) -> List[int]:
    values = config.numbers(key)
    ints = [int(v) for v in values]
    _require(config, key, all(v == i and i >= 1 for v, i in zip(values, ints)), f"{key} must be positive integers")
    _require(config, key, all(a < b for a, b in zip(ints, ints[1:])), f"{key} must be increasing")
    return ints


def exponent_p(config: ExperimentConfig, dim: int) -> float:
    """params.p, defaulting to (d/2 + 1 + q) / 2."""
    if config.has("params.p"):
        return config.number("params.p")
    return 0.5 * (dim / 2.0 + 1.0 + config.number("params.q"))


def _check_q(config: ExperimentConfig, dim: int) -> float:
    q = config.number("params.q")
    _require(config, "params.q", 1.0 < q <= dim, f"q must lie in (1, {dim}], got {q}")
    return q


def _check_grid(config: ExperimentConfig, coeffs: CoefficientSet) -> None:
    h = _positive(config, "grid.h")
    half = _positive(config, "grid.half_width")
    cells = 2.0 * half / h
    _require(config, "grid.h", abs(cells - round(cells)) < 1e-9, f"grid.h={h} does not divide the box side {2 * half}")
    if config.has("grid.dt_pde"):
        dt_pde = _positive(config, "grid.dt_pde")
        limit = h * h * coeffs.delta / (2.0 * coeffs.dim_d)
        _require(config, "grid.dt_pde", dt_pde <= limit, f"dt_pde={dt_pde} violates the CFL limit {limit:.3g}")


def _check_start(config: ExperimentConfig, dim: int) -> np.ndarray:
    return config.vector("sim.start", dim)


def _check_times(config: ExperimentConfig, key: str, horizon: Optional[float] = None) -> List[float]:
    times = _positive_list(config, key)
    if horizon is not None:
        _require(config, key, max(times) <= horizon + 1e-12, f"{key} exceeds the horizon T={horizon}")
    return times


def validate_config(config: ExperimentConfig) -> Dict[str, Built]:
    """
    Check every parameter against the preconditions of the target operation.

    Returns the built fields so a run does not build them twice.

    Raises:
        ConfigError: The first violated precondition, line-referenced.
    """
    built = build_fields(config)
    primary = built[config.field_names[0]]
    dim = dimension_of(primary)

    if config.has("params.delta"):
        delta = config.number("params.delta")
        _require(config, "params.delta", 0.0 < delta < 1.0, f"delta must lie in (0, 1), got {delta}")
    _positive(config, "params.R0")
    if config.uses_paths:
        config.sim_config()
        _check_start(config, dim)

    kind = config.kind
    checker = _KIND_CHECKS.get(kind)
    if checker is not None:
        checker(config, built, dim)
    logger.info("Config validated", extra={"experiment": kind.value, "config_hash": config.short_hash, "fields": len(built)})
    return built


def _check_morrey(config: ExperimentConfig, built: Dict[str, Built], dim: int) -> None:
    _check_q(config, dim)


def _check_oscillation(config: ExperimentConfig, built: Dict[str, Built], dim: int) -> None:
    _positive(config, "check.r")


def _check_embedding(config: ExperimentConfig, built: Dict[str, Built], dim: int) -> None:
    q = _check_q(config, dim)
    p = exponent_p(config, dim)
    _require(config, "params.p", 1.0 < p < q, f"embedding needs 1 < p < q, got p={p}, q={q}")


def _check_mollifier_bound(config: ExperimentConfig, built: Dict[str, Built], dim: int) -> None:
    _check_q(config, dim)
    _increasing_ints(config, "check.ns")


def _check_exit_stats(config: ExperimentConfig, built: Dict[str, Built], dim: int) -> None:
    radii = _positive_list(config, "check.radii")
    n_max = config.integer("check.n_max")
    _require(config, "check.n_max", n_max >= 1, "check.n_max must be at least 1")
    _positive(config, "check.tail_step")
    T = config.number("sim.T")
    need = n_max * max(radii) ** 2
    _require(config, "sim.T", T >= need, f"T={T} is shorter than n_max * R^2 = {need} for the largest radius")


def _check_laplace(config: ExperimentConfig, built: Dict[str, Built], dim: int) -> None:
    _positive_list(config, "check.radii")
    lambdas = _positive_list(config, "check.lambdas")
    R0 = config.number("params.R0")
    _require(config, "check.lambdas", min(lambdas) >= R0 ** -2, f"every lambda must be at least R0^-2 = {R0 ** -2:g}")


def _check_increments(config: ExperimentConfig, built: Dict[str, Built], dim: int) -> None:
    m_list = _positive_list(config, "check.m_list")
    _require(config, "check.m_list", all(m >= 1 for m in m_list), "moments must be at least 1")
    if config.has("check.pairs"):
        pairs = config.get("check.pairs")
        T = config.number("sim.T")
        ok = isinstance(pairs, list) and all(
            isinstance(p, list) and len(p) == 2 and 0 <= p[0] <= p[1] <= T for p in pairs
        )
        _require(config, "check.pairs", ok, f"pairs must be [s, t] with 0 <= s <= t <= T={T}")
    else:
        _require(config, "sim.T", config.number("sim.T") >= 0.25, "the default pairs need T >= 0.25")


def _check_krylov(config: ExperimentConfig, built: Dict[str, Built], dim: int) -> None:
    _positive_list(config, "check.radii")
    d0 = config.number("check.d0")
    _require(config, "check.d0", dim / 2.0 < d0 <= dim, f"d0 must lie in ({dim / 2:g}, {dim}], got {d0}")


def _check_heat_kernel(config: ExperimentConfig, built: Dict[str, Built], dim: int) -> None:
    q = config.number("params.q")
    p = exponent_p(config, dim)
    _require(config, "params.p", dim / 2.0 < p < q, f"p must lie in ({dim / 2:g}, q={q}), got {p}")
    if config.has("check.times"):
        _check_times(config, "check.times", config.number("sim.T"))
    _positive_list(config, "check.lambdas")


def _check_occupation(config: ExperimentConfig, built: Dict[str, Built], dim: int) -> None:
    q = config.number("params.q")
    p = exponent_p(config, dim)
    _require(config, "params.p", dim / 2.0 + 1.0 < p < q, f"p must lie in ({dim / 2 + 1:g}, q={q}), got {p}")


def _check_semigroup(config: ExperimentConfig, built: Dict[str, Built], dim: int) -> None:
    _check_grid(config, built[config.field_names[0]])
    _check_times(config, "check.times")
    _positive(config, "check.s")
    _positive(config, "check.t")
    if config.has("check.points"):
        config.vectors("check.points", dim)


def _check_chaos(config: ExperimentConfig, built: Dict[str, Built], dim: int) -> None:
    _check_grid(config, built[config.field_names[0]])
    _positive(config, "check.nu")
    m_max = config.integer("check.m_max")
    _require(config, "check.m_max", 1 <= m_max <= 3, f"m_max must lie in 1..3, got {m_max}")
    config.flag("check.symmetry")
    if config.has("check.n"):
        _increasing_ints(config, "check.n")


def _check_mollify_convergence(config: ExperimentConfig, built: Dict[str, Built], dim: int) -> None:
    _check_grid(config, built[config.field_names[0]])
    _increasing_ints(config, "check.ns")
    _positive(config, "check.t")
    _positive(config, "check.s")


def _check_counterexample(config: ExperimentConfig, built: Dict[str, Built], dim: int) -> None:
    kind = str(config.field_definition(config.field_names[0]).get("kind", ""))
    _require(config, "field.kind", parse_kind(kind)[0] == "remark24", "counterexample needs field.kind = remark24")
    _increasing_ints(config, "check.n_max")
    _increasing_ints(config, "check.mass_n_max")
    q = float(config.field_definition(config.field_names[0]).get("q", 2.5))
    p = config.number("params.p") if config.has("params.p") else q + 0.3
    _require(config, "params.p", q < p < dim, f"the mass exponent must lie in (q={q}, {dim}), got {p}")
    _positive(config, "check.mass_growth")


def _check_derivative_flow(config: ExperimentConfig, built: Dict[str, Built], dim: int) -> None:
    _check_grid(config, built[config.field_names[0]])
    _check_times(config, "check.times", config.number("sim.T"))
    config.vectors("check.etas", dim)
    _increasing_ints(config, "check.n")
    _positive(config, "check.width")


def _check_poincare(config: ExperimentConfig, built: Dict[str, Built], dim: int) -> None:
    _increasing_ints(config, "check.n")
    _positive_list(config, "check.radii")


def _check_visit(config: ExperimentConfig, built: Dict[str, Built], dim: int) -> None:
    R = _positive(config, "check.R")
    start = _check_start(config, dim)
    _require(
        config,
        "sim.start",
        float(np.linalg.norm(start)) <= 9.0 * R / 16.0,
        f"start must satisfy |x| <= 9R/16 = {9 * R / 16:g}",
    )


def _check_ito(config: ExperimentConfig, built: Dict[str, Built], dim: int) -> None:
    _positive(config, "check.width")


def _check_skorokhod(config: ExperimentConfig, built: Dict[str, Built], dim: int) -> None:
    _increasing_ints(config, "check.ns")


def _check_mollified_coefficients(config: ExperimentConfig, built: Dict[str, Built], dim: int) -> None:
    _check_q(config, dim)
    _increasing_ints(config, "check.n")
    samples = config.integer("check.samples")
    _require(config, "check.samples", samples >= 1, "check.samples must be at least 1")


def _check_simulate(config: ExperimentConfig, built: Dict[str, Built], dim: int) -> None:
    _positive_list(config, "check.radii")


_KIND_CHECKS = {
    ExperimentKind.MORREY_NORM: _check_morrey,
    ExperimentKind.OSCILLATION: _check_oscillation,
    ExperimentKind.EMBEDDING: _check_embedding,
    ExperimentKind.SIMULATE: _check_simulate,
    ExperimentKind.EXIT_STATS: _check_exit_stats,
    ExperimentKind.LAPLACE: _check_laplace,
    ExperimentKind.INCREMENTS: _check_increments,
    ExperimentKind.KRYLOV_CHECK: _check_krylov,
    ExperimentKind.HEAT_KERNEL: _check_heat_kernel,
    ExperimentKind.SEMIGROUP: _check_semigroup,
    ExperimentKind.CHAOS_DECAY: _check_chaos,
    ExperimentKind.MOLLIFY_CONVERGENCE: _check_mollify_convergence,
    ExperimentKind.COUNTEREXAMPLE: _check_counterexample,
    ExperimentKind.DERIVATIVE_FLOW: _check_derivative_flow,
    ExperimentKind.MOLLIFIER_BOUND: _check_mollifier_bound,
    ExperimentKind.POINCARE: _check_poincare,
    ExperimentKind.OCCUPATION: _check_occupation,
    ExperimentKind.VISIT_PROBABILITY: _check_visit,
    ExperimentKind.ITO_FORMULA: _check_ito,
    ExperimentKind.SKOROKHOD: _check_skorokhod,
    ExperimentKind.MOLLIFIED_COEFFICIENTS: _check_mollified_coefficients,
}
