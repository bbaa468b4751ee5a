import os
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

from logging_config import get_environment

ARTIFACT_VERSION = "0.4.1"

_TRUTHY = {"1", "true", "yes", "y", "on"}
_FALSY = {"0", "false", "no", "n", "off"}


@dataclass(frozen=True)
class Settings:
    """Process-wide settings, independent of any single experiment config."""

    workers: int
    output_dir: Path
    plots_enabled: bool
    environment: str = "local"  # local, staging, production
    artifact_version: str = ARTIFACT_VERSION

    @property
    def is_production(self) -> bool:
        """Check if running in production environment."""
        return self.environment in ("production", "prod")

    @property
    def parallel(self) -> bool:
        return self.workers > 1


def _parse_flag(name: str, default: bool) -> bool:
    raw = os.getenv(name)
    if raw is None:
        return default
    value = raw.strip().lower()
    if value in _TRUTHY:
        return True
    if value in _FALSY:
        return False
    raise RuntimeError(f"{name} must be a boolean flag, got {raw!r}")


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Load settings from environment variables."""
    try:
        workers = int(os.getenv("MORREYLAB_WORKERS", "1"))
    except ValueError as exc:
        raise RuntimeError("MORREYLAB_WORKERS must be an integer") from exc
    if workers < 1:
        raise RuntimeError("MORREYLAB_WORKERS must be at least 1")

    output_dir = Path(os.getenv("MORREYLAB_OUTPUT_DIR", "runs"))

    return Settings(
        workers=workers,
        output_dir=output_dir,
        plots_enabled=_parse_flag("MORREYLAB_PLOTS", True),
        environment=get_environment(),
    )


def clear_settings_cache() -> None:
    """Clear the settings cache (for testing)."""
    get_settings.cache_clear()
