"""
Run journal embedded in every run manifest.

A RunJournal collects the ordered steps of one experiment run (config
loaded, batch simulated, check finished, files written) with structured
data, and is serialized into the manifest JSON next to the outputs.

Usage:
    journal = create_run_journal(environment=settings.environment)

    journal.step("Simulating", data={"n_paths": 4096})
    journal.warn("Paths died", data={"dead": 3})
    journal.success("Outputs written")

    manifest["journal"] = journal.to_dict()
"""

from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Dict, List, Optional

from logging_config import get_logger

logger = get_logger(__name__)


class JournalLevel(str, Enum):
    """Journal entry levels."""

    DEBUG = "debug"
    INFO = "info"
    STEP = "step"  # For pipeline steps
    WARN = "warn"
    ERROR = "error"
    SUCCESS = "success"

    @property
    def marker(self) -> str:
        return {
            JournalLevel.DEBUG: ".",
            JournalLevel.INFO: "i",
            JournalLevel.STEP: ">",
            JournalLevel.WARN: "!",
            JournalLevel.ERROR: "x",
            JournalLevel.SUCCESS: "+",
        }.get(self, "-")


@dataclass
class JournalEntry:
    """A single journal entry."""

    message: str
    level: JournalLevel
    timestamp: datetime
    data: Optional[Dict[str, Any]] = None

    def format(self, include_timestamp: bool = True) -> str:
        """Format the entry as one plain-text line (data on indented lines)."""
        parts = []
        if include_timestamp:
            parts.append(f"[{self.timestamp.strftime('%H:%M:%S.%f')[:-3]}]")
        parts.append(self.level.marker)
        parts.append(self.message)
        line = " ".join(parts)

        if self.data:
            data_lines = []
            for key, value in self.data.items():
                str_value = str(value)
                if len(str_value) > 100:
                    str_value = str_value[:97] + "..."
                data_lines.append(f"  - {key}: {str_value}")
            line += "\n" + "\n".join(data_lines)
        return line

    def to_dict(self) -> Dict[str, Any]:
        return {
            "message": self.message,
            "level": self.level.value,
            "timestamp": self.timestamp.isoformat(),
            "data": self.data or {},
        }


@dataclass
class RunJournal:
    """
    Collects the steps of one run.

    Entries beyond max_entries are dropped with a warning so a runaway sweep
    cannot grow the manifest without bound. Timestamps only ever reach the
    manifest, never the CSV bodies.
    """

    enabled: bool = True
    max_entries: int = 200
    include_timestamps: bool = True
    header: str = "Run journal"

    # Internal state
    _entries: List[JournalEntry] = field(default_factory=list)
    _start_time: Optional[datetime] = field(default=None)

    def __post_init__(self) -> None:
        if self.enabled:
            self._start_time = datetime.now(timezone.utc)

    def log(
        self,
        message: str,
        level: str = "info",
        data: Optional[Dict[str, Any]] = None,
    ) -> None:
        """
        Add a journal entry.

        Args:
            message: The entry message
            level: Entry level (debug, info, step, warn, error, success)
            data: Optional structured data to include
        """
        if not self.enabled:
            return

        if len(self._entries) >= self.max_entries:
            logger.warning("RunJournal max entries reached, dropping entry")
            return

        try:
            journal_level = JournalLevel(level.lower())
        except ValueError:
            journal_level = JournalLevel.INFO

        self._entries.append(
            JournalEntry(
                message=message,
                level=journal_level,
                timestamp=datetime.now(timezone.utc),
                data=data,
            )
        )
        logger.debug(f"[RunJournal] {message}", extra={"level": level, "data": data})

    def step(self, message: str, data: Optional[Dict[str, Any]] = None) -> None:
        """Log a pipeline step."""
        self.log(message, level="step", data=data)

    def info(self, message: str, data: Optional[Dict[str, Any]] = None) -> None:
        self.log(message, level="info", data=data)

    def debug(self, message: str, data: Optional[Dict[str, Any]] = None) -> None:
        self.log(message, level="debug", data=data)

    def warn(self, message: str, data: Optional[Dict[str, Any]] = None) -> None:
        self.log(message, level="warn", data=data)

    def error(self, message: str, data: Optional[Dict[str, Any]] = None) -> None:
        self.log(message, level="error", data=data)

    def success(self, message: str, data: Optional[Dict[str, Any]] = None) -> None:
        self.log(message, level="success", data=data)

    @property
    def entries(self) -> List[JournalEntry]:
        return list(self._entries)

    @property
    def duration_seconds(self) -> float:
        if self._start_time is None:
            return 0.0
        return (datetime.now(timezone.utc) - self._start_time).total_seconds()

    def format_report(self) -> str:
        """Format all collected entries into a plain-text report."""
        if not self._entries:
            return ""
        lines = [self.header, f"Duration: {int(self.duration_seconds * 1000)}ms", "-" * 19]
        lines.extend(entry.format(include_timestamp=self.include_timestamps) for entry in self._entries)
        lines.append("-" * 19)
        lines.append(f"{len(self._entries)} journal entries")
        return "\n".join(lines)

    def to_dict(self) -> List[Dict[str, Any]]:
        return [entry.to_dict() for entry in self._entries]

    def clear(self) -> None:
        """Drop all entries and restart the clock."""
        self._entries.clear()
        self._start_time = datetime.now(timezone.utc)


def create_run_journal(environment: str, enabled_override: Optional[bool] = None) -> RunJournal:
    """
    Factory for a RunJournal.

    Journals are kept everywhere except production, where only the log
    stream records the run, unless enabled_override says otherwise.
    """
    enabled = enabled_override if enabled_override is not None else environment not in ("production", "prod")
    return RunJournal(enabled=enabled)
