"""
Exception hierarchy for the lab.

Only precondition and configuration problems raise. Numerical trouble found
while computing (excluded quadrature nodes, dead paths, boundary mass) is
reported as flags on the result objects instead.
"""

from typing import Optional


class MorreyLabError(Exception):
    """Base class for all lab errors."""


class ConfigError(MorreyLabError):
    """Invalid experiment configuration, optionally tied to a config line."""

    def __init__(self, message: str, line: Optional[int] = None, key: Optional[str] = None) -> None:
        self.line = line
        self.key = key
        super().__init__(message)

    def __str__(self) -> str:
        message = super().__str__()
        if self.line is not None:
            return f"line {self.line}: {message}"
        if self.key is not None:
            return f"{self.key}: {message}"
        return message


class PreconditionError(MorreyLabError, ValueError):
    """An operation was called outside its stated domain."""


class CFLViolation(PreconditionError):
    """Explicit time step too large for the grid pitch and ellipticity."""


class RadiiRuleError(PreconditionError):
    """A radii rule whose volume sum exceeds the admissible total."""


class DegenerateFamilyError(PreconditionError):
    """A test-function family with no nonzero member."""
