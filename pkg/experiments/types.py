"""
Type definitions for experiment runs.

This module contains the result a handler returns, the plot descriptions
the output writer renders, and the manifest written next to every run.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

from estimates.types import EstimateReport, Verdict, json_safe
from experiments.config import ExperimentKind


class RunStatus:
    """Status strings recorded in manifests."""

    COMPLETE = "complete"
    INVALID = "invalid"
    ERROR = "error"


@dataclass
class Series:
    """One labelled curve of a plot."""

    label: str
    x: Sequence[float]
    y: Sequence[float]


@dataclass
class PlotSpec:
    """
    A static line or scatter plot, built from the same numbers as the CSV.
    """

    name: str
    title: str
    xlabel: str
    ylabel: str
    series: List[Series] = field(default_factory=list)
    style: str = "line"  # line or scatter
    logx: bool = False
    logy: bool = False


@dataclass
class ExperimentResult:
    """
    Result returned by an experiment handler.

    Handlers put every checked inequality into `reports`; purely descriptive
    experiments (a Morrey norm, a chaos table) leave `reports` empty and put
    their numbers into `tables` and `summary`.
    """

    success: bool
    handler_name: str
    kind: ExperimentKind

    # Result data
    reports: List[EstimateReport] = field(default_factory=list)
    tables: Dict[str, List[Dict[str, Any]]] = field(default_factory=dict)
    summary: Dict[str, Any] = field(default_factory=dict)
    plots: List[PlotSpec] = field(default_factory=list)
    message: Optional[str] = None

    # Error information (if success=False)
    error: Optional[str] = None
    error_code: Optional[str] = None

    @property
    def verdict(self) -> Optional[Verdict]:
        """Combined verdict of the reports, None when nothing was checked."""
        if not self.reports:
            return None
        return Verdict.combine([r.verdict for r in self.reports])

    @property
    def flags(self) -> List[str]:
        seen: List[str] = []
        for report in self.reports:
            for name in report.flags:
                if name not in seen:
                    seen.append(name)
        for name in self.summary.get("flags", []):
            if name not in seen:
                seen.append(name)
        return seen

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for JSON serialization."""
        return {
            "success": self.success,
            "handler_name": self.handler_name,
            "kind": self.kind.value,
            "verdict": self.verdict.value if self.verdict else None,
            "reports": [r.to_dict() for r in self.reports],
            "summary": json_safe(self.summary),
            "flags": self.flags,
            "message": self.message,
            "error": self.error,
            "error_code": self.error_code,
        }


@dataclass
class RunManifest:
    """
    Provenance of one run: what was run, with which seeds, and what was written.

    Reruns with an equal config hash reproduce the CSV bodies byte for byte;
    wall_time and the journal are the only run-specific entries.
    """

    config_hash: str
    kind: str
    artifact_version: str
    status: str
    wall_time: float = 0.0
    seeds: List[int] = field(default_factory=list)
    outputs: List[str] = field(default_factory=list)
    verdict: Optional[str] = None
    overrides: Dict[str, Any] = field(default_factory=dict)
    error: Optional[str] = None
    error_code: Optional[str] = None
    journal: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        """0 pass or complete, 1 invalid config, 2 any fail, 3 inconclusive."""
        if self.status == RunStatus.INVALID:
            return 1
        if self.status == RunStatus.ERROR or self.verdict == Verdict.FAIL.value:
            return 2
        if self.verdict == Verdict.INCONCLUSIVE.value:
            return 3
        return 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "config_hash": self.config_hash,
            "kind": self.kind,
            "artifact_version": self.artifact_version,
            "status": self.status,
            "wall_time": self.wall_time,
            "seeds": list(self.seeds),
            "outputs": list(self.outputs),
            "verdict": self.verdict,
            "overrides": json_safe(self.overrides),
            "error": self.error,
            "error_code": self.error_code,
            "journal": list(self.journal),
        }


def combined_exit_code(manifests: Sequence[RunManifest]) -> int:
    """Exit code of a sweep: invalid dominates fail, which dominates inconclusive."""
    codes = {m.exit_code for m in manifests}
    for code in (1, 2, 3):
        if code in codes:
            return code
    return 0
