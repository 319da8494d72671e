import json
from pathlib import Path

import pytest

from scripts._plateau.config import (
    BoundQuery,
    ConfigParseError,
    ConfigValidationError,
    apply_overrides,
    dump_config,
    export_schemas,
    infer_target,
    parse_config,
    validate_config,
)
from scripts._plateau.engine import EAConfig, OPOConfig
from scripts._plateau.experiments import ExperimentPlan

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

RUN = {
    "fitness": {"family": "plateau", "n": 20, "r": 2},
    "selection": {"kind": "tournament", "k": 3},
    "mutation": {"kind": "bitwise", "chi": 1.0},
    "lambda": 40,
    "budget": 100000,
    "seed": 1,
}


def write(tmp_path: Path, payload, name: str = "config.json") -> Path:
    path = tmp_path / name
    path.write_text(payload if isinstance(payload, str) else json.dumps(payload, indent=2), encoding="utf-8")
    return path


def test_minimal_run_config_gets_defaults(tmp_path):
    config = parse_config(write(tmp_path, RUN))
    assert isinstance(config, EAConfig)
    assert config.gamma0 == 0.25
    assert config.record_trajectory is False
    assert config.trajectory_stride is None


def test_lambda_zero_names_the_invariant(tmp_path):
    with pytest.raises(ConfigValidationError, match="lambda ≥ 1"):
        parse_config(write(tmp_path, {**RUN, "lambda": 0}))


def test_unknown_key_is_an_error(tmp_path):
    with pytest.raises(ConfigValidationError, match="colour"):
        parse_config(write(tmp_path, {**RUN, "colour": "red"}))


def test_override_leaf_and_dotted(tmp_path):
    path = write(tmp_path, RUN)
    assert parse_config(path, ["chi=2.0"]).mutation.chi == 2.0
    assert parse_config(path, ["selection.k=5"]).selection.k == 5
    assert parse_config(path, ["lambda=80"]).lambda_ == 80


def test_ambiguous_and_malformed_overrides():
    with pytest.raises(ConfigValidationError, match="ambiguous"):
        apply_overrides(RUN, ["kind=point"])
    with pytest.raises(ConfigValidationError):
        apply_overrides(RUN, ["chi"])
    with pytest.raises(ConfigValidationError):
        apply_overrides(RUN, ["budget.x=1"])
    # originals are left untouched
    assert apply_overrides(RUN, ["seed=9"])["seed"] == 9
    assert RUN["seed"] == 1


def test_parse_error_carries_position(tmp_path):
    path = write(tmp_path, '{\n  "budget": 10,\n  "seed": }\n')
    with pytest.raises(ConfigParseError) as info:
        parse_config(path)
    assert info.value.line == 3
    assert str(path) in str(info.value)
    with pytest.raises(ConfigParseError):
        parse_config(write(tmp_path, "[1, 2]", "list.json"))


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        parse_config(tmp_path / "absent.json")


def test_target_inference():
    assert infer_target(RUN) is EAConfig
    assert infer_target({"fitness": {}, "mutation": {}}) is OPOConfig
    assert infer_target({"n_grid": [8]}) is ExperimentPlan
    assert infer_target({"theorem": "pk10"}) is BoundQuery


def test_round_trip():
    config = validate_config(RUN)
    assert validate_config(dump_config(config)) == config
    assert dump_config(config)["lambda"] == 40


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.json")), ids=lambda p: p.name)
def test_shipped_configs_parse_and_round_trip(path):
    config = parse_config(path)
    assert validate_config(dump_config(config), type(config)) == config


def test_export_schemas(tmp_path):
    written = export_schemas(tmp_path)
    assert [p.name for p in written] == ["ea_config.schema.json", "opo_config.schema.json", "experiment_plan.schema.json"]
    schema = json.loads(written[0].read_text(encoding="utf-8"))
    assert "lambda" in schema["properties"]
