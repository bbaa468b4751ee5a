"""Shared fixtures and the --runslow switch for acceptance-scale tests."""

import numpy as np
import pytest

from fields.registry import reset_registry
from settings import clear_settings_cache


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run acceptance-scale tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: acceptance-scale run, skipped unless --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def _isolated_settings(monkeypatch, tmp_path):
    monkeypatch.setenv("MORREYLAB_OUTPUT_DIR", str(tmp_path / "runs"))
    monkeypatch.delenv("MORREYLAB_WORKERS", raising=False)
    monkeypatch.delenv("MORREYLAB_PLOTS", raising=False)
    clear_settings_cache()
    reset_registry()
    yield
    clear_settings_cache()
    reset_registry()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
