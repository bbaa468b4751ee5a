from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from errors import ConfigError
from experiments.config import (
    ExperimentKind,
    load_config,
    load_grid,
    parse_config_text,
    parse_value,
    validate_config,
)

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"

MORREY = """\
# inverse distance bump
experiment = morrey-norm
field.kind = inverse-radial
field.d = 3
params.q = 2.0   # exponent
output.plots = false
"""


@pytest.mark.parametrize(
    "text, expected",
    [
        ("3", 3),
        ("-2", -2),
        ("1e-3", 1e-3),
        ("0.5", 0.5),
        ("true", True),
        ("False", False),
        ("[1, 2.5]", [1, 2.5]),
        ("example", "example"),
        ('"3"', "3"),
    ],
)
def test_parse_value(text, expected):
    value = parse_value(text)
    assert value == expected
    assert type(value) is type(expected)


def test_parse_value_rejects_empty_and_malformed_lists():
    with pytest.raises(ConfigError):
        parse_value("   ")
    with pytest.raises(ConfigError, match="malformed list"):
        parse_value("[1, 2", line=4)


def test_parse_config_text_strips_comments_and_keeps_lines():
    config = parse_config_text(MORREY)
    assert config.kind == ExperimentKind.MORREY_NORM
    assert config.get("params.q") == 2.0
    assert config.line_of("params.q") == 5
    assert config.field_names == ["field"]
    assert config.field_definition() == {"kind": "inverse-radial", "d": 3}


@pytest.mark.parametrize(
    "text, line",
    [
        ("experiment = morrey-norm\nfield.kind = constant\nfield.kind = example\n", 3),
        ("experiment = morrey-norm\nnot an assignment\n", 2),
        ("experiment = morrey-norm\nsim = 3\n", 2),
        ("experiment = morrey-norm\nbogus.key = 1\n", 2),
        ("experiment = nope\n", 1),
        ("experiment = morrey-norm\n1bad.key = 1\n", 2),
    ],
)
def test_parse_errors_carry_the_line(text, line):
    with pytest.raises(ConfigError) as info:
        parse_config_text(text)
    assert info.value.line == line
    assert str(info.value).startswith(f"line {line}: ")


def test_missing_experiment_is_reported_by_key():
    with pytest.raises(ConfigError) as info:
        parse_config_text("field.kind = constant\n")
    assert str(info.value).startswith("experiment: ")


def test_config_errors_are_not_value_errors():
    assert not issubclass(ConfigError, ValueError)


def test_hash_ignores_output_keys_and_comments():
    base = parse_config_text(MORREY)
    other = parse_config_text(MORREY.replace("output.plots = false", "output.plots = true") + "# trailing\n")
    assert base.config_hash == other.config_hash
    assert len(base.short_hash) == 12


def test_hash_follows_parameters_and_key_order_does_not_matter():
    base = parse_config_text(MORREY)
    reordered = parse_config_text(
        "experiment = morrey-norm\nparams.q = 2.0\nfield.d = 3\nfield.kind = inverse-radial\n"
    )
    assert base.config_hash == reordered.config_hash
    assert base.with_overrides({"params.q": 2.5}).config_hash != base.config_hash


def test_overrides_can_switch_the_experiment():
    config = parse_config_text(MORREY).with_overrides({"experiment": "oscillation", "check.r": 0.25})
    assert config.kind == ExperimentKind.OSCILLATION
    assert config.number("check.r") == 0.25


def test_typed_getters_fall_back_to_defaults():
    config = parse_config_text("experiment = simulate\nfield.kind = constant\nsim.start = 0.5\n")
    assert config.number("sim.T") == 2.0
    assert config.numbers("check.radii") == [1.0]
    assert config.vector("sim.start", 3).tolist() == [0.5, 0.5, 0.5]
    assert config.integer("sim.n_paths") == 4096
    assert config.seeds == [0]
    with pytest.raises(ConfigError):
        config.flag("sim.start")


_values = st.one_of(
    st.integers(min_value=-10 ** 6, max_value=10 ** 6),
    st.floats(allow_nan=False, allow_infinity=False, width=64),
    st.booleans(),
    st.lists(st.integers(min_value=0, max_value=100), min_size=1, max_size=4),
)


@given(st.dictionaries(st.sampled_from(["params.q", "sim.dt", "check.radii", "grid.h", "field.beta"]), _values))
@settings(max_examples=60)
def test_text_form_parses_back_to_the_same_config(values):
    config = parse_config_text("experiment = exit-stats\n").with_overrides(values)
    again = parse_config_text(config.to_text())
    assert again.values == config.values
    assert again.config_hash == config.config_hash


def test_validate_rejects_configs_without_fields():
    config = parse_config_text("experiment = morrey-norm\nparams.q = 2.0\n")
    with pytest.raises(ConfigError, match="no field"):
        validate_config(config)


def test_validate_points_at_the_offending_line():
    text = "experiment = morrey-norm\nfield.kind = inverse-radial\nfield.d = 3\nparams.q = 4.0\n"
    with pytest.raises(ConfigError) as info:
        validate_config(parse_config_text(text))
    assert info.value.line == 4


def test_validate_reports_registry_errors_at_the_kind_line():
    text = "experiment = simulate\n\nfield.kind = no-such-field\n"
    with pytest.raises(ConfigError) as info:
        validate_config(parse_config_text(text))
    assert info.value.line == 3


def test_validate_checks_simulation_parameters():
    text = "experiment = simulate\nfield.kind = constant\nsim.dt = 0.5\nsim.T = 0.1\n"
    with pytest.raises(ConfigError) as info:
        validate_config(parse_config_text(text))
    assert info.value.key in ("sim.dt", "sim.T")


def test_validate_returns_the_built_fields():
    built = validate_config(parse_config_text(MORREY))
    assert list(built) == ["field"]
    assert built["field"].dim == 3


@pytest.mark.parametrize("path", sorted(CONFIG_DIR.glob("*.cfg")), ids=lambda p: p.stem)
def test_shipped_configs_validate(path):
    if path.stem.endswith("_grid"):
        assert load_grid(path)
        return
    validate_config(load_config(path))


def test_load_grid_wraps_scalars(tmp_path):
    grid_file = tmp_path / "grid.cfg"
    grid_file.write_text("params.q = [2.0, 2.5]\nsim.master_seed = 3\n")
    assert load_grid(grid_file) == {"params.q": [2.0, 2.5], "sim.master_seed": [3]}
    empty = tmp_path / "empty.cfg"
    empty.write_text("# nothing\n")
    with pytest.raises(ConfigError):
        load_grid(empty)


def test_unreadable_config_is_a_config_error(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.cfg")
