"""
JSON configuration: parsing, key=value overrides, validation and schema export.

The target model is picked by the caller (the CLI subcommand) or inferred from
the keys present: `n_grid` → ExperimentPlan, `theorem` → BoundQuery,
`selection` → EAConfig, otherwise OPOConfig.
"""
from __future__ import annotations

import copy
import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Tuple, Type, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from scripts.utils import write_json

from .engine import EAConfig, OPOConfig
from .experiments import ExperimentPlan


class ConfigParseError(ValueError):
    def __init__(self, path: str, line: int, column: int, message: str) -> None:
        self.path, self.line, self.column = path, line, column
        super().__init__(f"{path}:{line}:{column}: {message}")


class ConfigValidationError(ValueError):
    pass


class BoundQuery(BaseModel):
    """A named calculator and its keyword arguments."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    theorem: str
    params: Dict[str, Any] = Field(default_factory=dict)


AnyConfig = Union[EAConfig, OPOConfig, ExperimentPlan, BoundQuery]

TARGETS: Dict[str, Type[BaseModel]] = {
    "run": EAConfig,
    "opo": OPOConfig,
    "experiment": ExperimentPlan,
    "bounds": BoundQuery,
}


def parse_value(text: str) -> Any:
    """JSON literal if it parses, else the raw string."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def load_config_dict(path: Path) -> Dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Missing config file: {path}")
    text = path.read_text(encoding="utf-8")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigParseError(str(path), exc.lineno, exc.colno, exc.msg) from exc
    if not isinstance(raw, dict):
        raise ConfigParseError(str(path), 1, 1, "top level must be a JSON object")
    return raw


def _leaf_paths(raw: Any, leaf: str, prefix: Tuple[str, ...] = ()) -> List[Tuple[str, ...]]:
    found: List[Tuple[str, ...]] = []
    if isinstance(raw, dict):
        for key, value in raw.items():
            here = prefix + (key,)
            if key == leaf:
                found.append(here)
            found.extend(_leaf_paths(value, leaf, here))
    return found


def apply_overrides(raw: Dict[str, Any], overrides: Iterable[str]) -> Dict[str, Any]:
    """
    `a.b.c=value` sets that path; a bare `c=value` sets the single key named
    `c` anywhere in the document (top level if absent). Unknown keys surface
    later as validation errors.
    """
    out = copy.deepcopy(raw)
    for item in overrides:
        if "=" not in item:
            raise ConfigValidationError(f"override must look like key=value, got {item!r}")
        key, value = item.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigValidationError(f"override has an empty key: {item!r}")
        if "." in key:
            path = tuple(key.split("."))
        else:
            matches = _leaf_paths(out, key)
            if len(matches) > 1:
                names = ", ".join(".".join(m) for m in matches)
                raise ConfigValidationError(f"{key}: ambiguous override, matches {names}")
            path = matches[0] if matches else (key,)
        node = out
        for part in path[:-1]:
            if not isinstance(node.get(part), dict):
                raise ConfigValidationError(f"{key}: no such section {part!r}")
            node = node[part]
        node[path[-1]] = parse_value(value)
    return out


def infer_target(raw: Dict[str, Any]) -> Type[BaseModel]:
    if "n_grid" in raw:
        return ExperimentPlan
    if "theorem" in raw:
        return BoundQuery
    if "selection" in raw:
        return EAConfig
    return OPOConfig


def _describe(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "config"
        msg = err["msg"].removeprefix("Value error, ")
        parts.append(f"{loc}: {msg}")
    return "; ".join(parts)


def validate_config(raw: Dict[str, Any], target: Optional[Type[BaseModel]] = None) -> AnyConfig:
    model = target or infer_target(raw)
    try:
        return model.model_validate(raw)
    except ValidationError as exc:
        raise ConfigValidationError(_describe(exc)) from exc


def parse_config(path: Path, overrides: Iterable[str] = (), target: Optional[Type[BaseModel]] = None) -> AnyConfig:
    return validate_config(apply_overrides(load_config_dict(path), overrides), target)


def dump_config(config: BaseModel) -> Dict[str, Any]:
    """JSON-ready dict that parses back to an equal value."""
    return config.model_dump(mode="json", by_alias=True)


def export_schemas(out_dir: Path) -> List[Path]:
    written = []
    for name, model in [("ea_config", EAConfig), ("opo_config", OPOConfig), ("experiment_plan", ExperimentPlan)]:
        path = Path(out_dir) / f"{name}.schema.json"
        write_json(path, model.model_json_schema(by_alias=True))
        written.append(path)
    return written
