import pytest

from opdpipe import StageRegistry
from opdpipe.config import RunConfig
from opdpipe.errors import ConfigError, InvalidValueError, StageError
from opdpipe.registry import PIPELINE_ORDER
from opdpipe.stages.base import StageResult, run_units


def test_registry_initializes_with_defaults():
    registry = StageRegistry.from_default_spec()
    described = registry.described_stages()
    names = {entry["name"] for entry in described}
    assert set(PIPELINE_ORDER) <= names
    assert {"evaluate", "simulate"} <= names
    assert registry.missing_stages() == []


def test_unknown_stage_lookup_fails():
    registry = StageRegistry.from_default_spec()
    with pytest.raises(KeyError, match="not registered"):
        registry.get("teleport")


def test_undeclared_argument_becomes_failed_result(tmp_path):
    registry = StageRegistry.from_default_spec()
    result = registry.call("link", RunConfig(output_dir=str(tmp_path)), colour="red")
    assert not result.success
    assert isinstance(result.exception, ConfigError)
    with pytest.raises(ConfigError):
        result.unwrap()


def test_stage_input_errors_are_folded_into_results(tmp_path):
    registry = StageRegistry.from_default_spec()
    result = registry.call("consolidate", RunConfig(output_dir=str(tmp_path)))
    assert not result.success
    assert "No detection files" in (result.error or "")


def test_simulate_stage_writes_files(tmp_path):
    registry = StageRegistry.from_default_spec()
    spec = tmp_path / "spec.yaml"
    spec.write_text(
        "seed: 9\nstart: 2017Q1\nend: 2017Q2\nplatforms:\n"
        "  - {name: a, center: [50, 50], size: [4, 4], birth: 2017Q1, death: 2017Q2, brightness: -6.0}\n",
        encoding="utf-8",
    )
    result = registry.call("simulate", RunConfig(output_dir=str(tmp_path)), spec_path=str(spec), verify=True)
    assert result.success, result.error
    assert result.data["platforms"] == 1
    assert result.data["diffs"] == []
    assert all(path.exists() for path in result.files)


def test_successful_result_unwraps_to_data():
    assert StageResult(success=True, data=3).unwrap() == 3


def test_run_units_keeps_order_and_names_the_failing_unit():
    assert run_units("demo", lambda x: x * 2, [3, 1, 2], workers=3, label=str) == [6, 2, 4]

    def _fail_on_two(x):
        if x == 2:
            raise InvalidValueError("bad unit")
        return x

    with pytest.raises(StageError) as excinfo:
        run_units("demo", _fail_on_two, [1, 2, 3], workers=1, label=lambda x: f"unit-{x}")
    assert excinfo.value.unit == "unit-2"
    assert "demo[unit-2]" in str(excinfo.value)
