import json
import logging

import pytest

from experiments.journal import JournalLevel, RunJournal, create_run_journal
from logging_config import ContextFilter, JSONFormatter, LogContext, get_environment
from settings import clear_settings_cache, get_settings
from worker import WorkerPool, run_job


def test_settings_defaults(monkeypatch):
    monkeypatch.delenv("MORREYLAB_OUTPUT_DIR")
    clear_settings_cache()
    settings = get_settings()
    assert settings.workers == 1
    assert not settings.parallel
    assert str(settings.output_dir) == "runs"
    assert settings.plots_enabled


def test_settings_read_the_environment(monkeypatch):
    monkeypatch.setenv("MORREYLAB_WORKERS", "4")
    monkeypatch.setenv("MORREYLAB_PLOTS", "off")
    monkeypatch.setenv("ENVIRONMENT", "prod")
    settings = get_settings()
    assert settings.workers == 4
    assert settings.parallel
    assert not settings.plots_enabled
    assert settings.is_production


@pytest.mark.parametrize(
    "name, value",
    [("MORREYLAB_WORKERS", "many"), ("MORREYLAB_WORKERS", "0"), ("MORREYLAB_PLOTS", "maybe")],
)
def test_bad_settings_fail_loudly(monkeypatch, name, value):
    monkeypatch.setenv(name, value)
    with pytest.raises(RuntimeError, match=name):
        get_settings()


@pytest.mark.parametrize(
    "value, expected",
    [("production", "production"), ("PROD", "production"), ("stage", "staging"), ("dev", "local")],
)
def test_environment_names(monkeypatch, value, expected):
    monkeypatch.delenv("ENV", raising=False)
    monkeypatch.setenv("ENVIRONMENT", value)
    assert get_environment() == expected


def test_log_context_nests_and_restores():
    with LogContext(config_hash="aaa", experiment="simulate"):
        with LogContext(config_hash="bbb"):
            assert LogContext.get_context() == {"config_hash": "bbb", "experiment": "simulate"}
        assert LogContext.get_context()["config_hash"] == "aaa"
    assert "config_hash" not in LogContext.get_context()


def _record(message="hello", **extra):
    record = logging.LogRecord("morreylab.test", logging.INFO, __file__, 1, message, None, None)
    for key, value in extra.items():
        setattr(record, key, value)
    return record


def test_context_filter_stamps_records_without_overwriting():
    with LogContext(config_hash="abc", seed=3):
        record = _record(seed=9)
        assert ContextFilter().filter(record)
    assert record.config_hash == "abc"
    assert record.seed == 9


def test_json_formatter_carries_extras():
    payload = json.loads(JSONFormatter().format(_record(config_hash="abc", radius=0.5)))
    assert payload["message"] == "hello"
    assert payload["level"] == "INFO"
    assert payload["config_hash"] == "abc"
    assert payload["radius"] == 0.5


def test_pool_keeps_task_order():
    assert WorkerPool(1).map_ordered(abs, [-3, 1, -2]) == [3, 1, 2]
    assert WorkerPool(2).map_ordered(abs, [-3, 1, -2]) == [3, 1, 2]
    assert WorkerPool(0).workers == 1
    assert WorkerPool(2).map_ordered(abs, []) == []


def _raise(exc):
    def fn():
        raise exc

    return fn


@pytest.mark.parametrize(
    "exc, code",
    [
        (ValueError("bad"), "data_error"),
        (KeyError("missing"), "data_error"),
        (FloatingPointError("overflow"), "numerical_error"),
        (RuntimeError("odd"), "unexpected_error"),
    ],
)
def test_run_job_classifies_failures(exc, code):
    outcome = run_job("job-1", _raise(exc))
    assert not outcome.success
    assert outcome.error_code == code
    assert outcome.error.startswith(type(exc).__name__)


def test_run_job_returns_values():
    outcome = run_job("job-2", lambda: 42)
    assert outcome.success
    assert outcome.value == 42
    assert outcome.error_code is None


def test_journal_levels_and_report():
    journal = RunJournal()
    journal.step("Config validated", data={"experiment": "simulate"})
    journal.log("odd level", level="shout")
    journal.success("Outputs written")
    levels = [entry.level for entry in journal.entries]
    assert levels == [JournalLevel.STEP, JournalLevel.INFO, JournalLevel.SUCCESS]
    assert [entry["level"] for entry in journal.to_dict()] == ["step", "info", "success"]

    report = journal.format_report()
    assert report.startswith("Run journal")
    assert "> Config validated\n  - experiment: simulate" in report
    assert report.endswith("3 journal entries")

    journal.clear()
    assert journal.format_report() == ""


def test_journal_caps_entries():
    journal = RunJournal(max_entries=2)
    for i in range(5):
        journal.info(f"entry {i}")
    assert len(journal.entries) == 2


def test_journal_is_off_in_production():
    assert not create_run_journal("production").enabled
    assert create_run_journal("production", enabled_override=True).enabled
    quiet = create_run_journal("prod")
    quiet.error("ignored")
    assert quiet.entries == []
    assert create_run_journal("local").enabled


def test_journal_markers():
    assert [level.marker for level in JournalLevel] == [".", "i", ">", "!", "x", "+"]
