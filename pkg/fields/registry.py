"""
Registry of field constructions, keyed by config kind.

Config entries name a kind ("example", "remark24", "constant",
"inverse-radial", or "mollified(<inner>, n)") plus numeric parameters; the
registry turns such an entry into a CoefficientSet or a single Field.
"""

import re
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple, Union

import numpy as np

from errors import ConfigError
from fields.base import ConstantField, Field
from fields.coefficients import (
    CoefficientSet,
    DiffusionField,
    GradSigmaNormField,
    constant_coefficients,
    example_coefficients,
)
from fields.example import ExampleParams
from fields.mollify import MollifierSpec
from fields.radial import InverseRadialField
from fields.remark24 import RadiiRule, Remark24Params, remark24_drift
from logging_config import get_logger

logger = get_logger(__name__)

Built = Union[CoefficientSet, Field]
Builder = Callable[[Mapping[str, Any]], Built]

_MOLLIFIED_RE = re.compile(r"^mollified\(\s*(?P<inner>.+)\s*,\s*(?P<n>\d+)\s*\)$")

# Components a scalar-field consumer (Morrey norms, oscillation) may ask for.
COMPONENTS = ("drift", "sigma", "dsigma", "a")


def parse_kind(kind: str) -> Tuple[str, List[int]]:
    """
    Split a kind string into the base kind and mollification scales.

    "mollified(mollified(example, 4), 8)" -> ("example", [4, 8])
    """
    scales: List[int] = []
    text = kind.strip()
    while True:
        match = _MOLLIFIED_RE.match(text)
        if not match:
            break
        scales.insert(0, int(match.group("n")))
        text = match.group("inner").strip()
    return text, scales


class FieldRegistry:
    """
    Central registry of field builders.

    Builders receive the flat parameter mapping of one field definition and
    return either a CoefficientSet or a scalar/vector Field.
    """

    def __init__(self) -> None:
        self._builders: Dict[str, Builder] = {}

    def register(self, kind: str, builder: Builder) -> None:
        """
        Register a builder for a base kind.

        Args:
            kind: The config kind, e.g. "example".
            builder: Callable turning parameters into a field object.
        """
        self._builders[kind] = builder
        logger.debug("Registered field builder: %s", kind)

    def has(self, kind: str) -> bool:
        base, _ = parse_kind(kind)
        return base in self._builders

    def list_kinds(self) -> List[str]:
        return sorted(self._builders)

    def build(self, definition: Mapping[str, Any]) -> Built:
        """
        Build the object a definition describes.

        Raises:
            ConfigError: Unknown kind or invalid parameters.
        """
        kind = definition.get("kind")
        if not kind:
            raise ConfigError("field definition has no kind", key="field.kind")
        base, scales = parse_kind(str(kind))
        builder = self._builders.get(base)
        if builder is None:
            raise ConfigError(
                f"unknown field kind {base!r} (known: {', '.join(self.list_kinds())})",
                key="field.kind",
            )
        try:
            built = builder(definition)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"invalid {base} field: {exc}", key="field") from exc

        for n in scales:
            spec = MollifierSpec(
                n=n,
                radial_nodes=int(definition.get("mollifier_radial_nodes", 32)),
                angular_nodes=int(definition.get("mollifier_angular_nodes", 64)),
            )
            built = built.mollified(n, spec) if isinstance(built, CoefficientSet) else built.mollified(spec)
        return built

    def build_coefficients(self, definition: Mapping[str, Any]) -> CoefficientSet:
        built = self.build(definition)
        if not isinstance(built, CoefficientSet):
            raise ConfigError(
                f"field kind {definition.get('kind')!r} defines a single field, not (sigma, b)",
                key="field.kind",
            )
        return built

    def build_field(self, definition: Mapping[str, Any], component: Optional[str] = None) -> Field:
        """
        Build a single field; for coefficient sets pick `component`.

        Components: drift (b), sigma, dsigma (|D sigma|), a (sigma sigma^T).
        """
        built = self.build(definition)
        if isinstance(built, Field):
            return built
        component = component or "drift"
        if component == "drift":
            return built.drift
        if component == "sigma":
            return built.sigma
        if component == "dsigma":
            return GradSigmaNormField(built)
        if component == "a":
            return DiffusionField(built)
        raise ConfigError(f"unknown field component {component!r}", key="field.component")


def _vector(value: Any, dim: int, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float).reshape(-1)
    if arr.size == 1:
        arr = np.full(dim, float(arr[0]))
    if arr.size != dim:
        raise ValueError(f"{name} must have {dim} components")
    return arr


def _build_example(params: Mapping[str, Any]) -> CoefficientSet:
    bhat = None
    if params.get("bhat") is not None:
        bhat = ConstantField(_vector(params["bhat"], 3, "bhat"), 3)
    example = ExampleParams(
        alpha=float(params.get("alpha", 1.0)),
        beta=float(params.get("beta", 0.3)),
        gamma=float(params.get("gamma", 0.1)),
        bhat=bhat,
    )
    delta = params.get("delta")
    return example_coefficients(example, delta=None if delta is None else float(delta))


def _build_constant(params: Mapping[str, Any]) -> CoefficientSet:
    dim = int(params.get("d", 3))
    noise_dim = int(params.get("d1", dim))
    drift = params.get("drift")
    delta = params.get("delta")
    return constant_coefficients(
        dim=dim,
        noise_dim=noise_dim,
        sigma=params.get("sigma_scale"),
        drift=None if drift is None else _vector(drift, dim, "drift"),
        delta=None if delta is None else float(delta),
    )


def _build_inverse_radial(params: Mapping[str, Any]) -> Field:
    dim = int(params.get("d", 3))
    center = params.get("center")
    return InverseRadialField(
        dim=dim,
        center=None if center is None else _vector(center, dim, "center"),
        radius=float(params.get("radius", 1.0)),
        scale=float(params.get("scale", 1.0)),
    )


def _build_remark24(params: Mapping[str, Any]) -> Field:
    scale = params.get("scale")
    p = Remark24Params(
        q=float(params.get("q", 2.5)),
        dim=int(params.get("d", 3)),
        n_max=int(params.get("n_max", 1000)),
        radii_rule=RadiiRule(str(params.get("radii_rule", RadiiRule.LOG_SQUARED.value))),
        scale=None if scale is None else float(scale),
        theta=float(params.get("theta", 0.5)),
    )
    drift, _ = remark24_drift(p)
    return drift


# Global registry instance
_registry: Optional[FieldRegistry] = None


def get_field_registry() -> FieldRegistry:
    """Get the global field registry, with the built-in kinds registered."""
    global _registry  # noqa: PLW0603
    if _registry is None:
        _registry = FieldRegistry()
        _registry.register("example", _build_example)
        _registry.register("constant", _build_constant)
        _registry.register("inverse-radial", _build_inverse_radial)
        _registry.register("remark24", _build_remark24)
    return _registry


def reset_registry() -> None:
    """Reset the global registry (for testing)."""
    global _registry  # noqa: PLW0603
    _registry = None
