"""Catalogues of the CSV tables opdpipe writes and of its pipeline stages.

The table catalogue lives in ``data/tables.json``: one entry per table with an
object-type JSON schema describing its columns. It is validated on load and
copied, restricted to the tables of a run, into ``schema.json``.
``data/stages.json`` declares the keyword parameters of every stage.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

from .errors import ConfigError, OpdSchemaError


def _get_default_schema_dir() -> Path:
    env_dir = os.environ.get("OPDPIPE_SCHEMA_DIR")
    if env_dir:
        return Path(env_dir)
    return Path(__file__).resolve().parent / "data"


TABLES_FILENAME = "tables.json"
STAGES_FILENAME = "stages.json"

SCALAR_JSON_TYPES = {
    "null",
    "boolean",
    "object",
    "array",
    "number",
    "string",
    "integer",
}


def _ensure_json_type(value: str, *, field: str, context: str) -> None:
    if value not in SCALAR_JSON_TYPES:
        raise ValueError(f"Unsupported JSON schema type '{value}' for {field} in {context}")


def _validate_json_schema(schema: dict, *, field: str, context: str) -> None:
    if not isinstance(schema, dict):
        raise TypeError(f"'{field}' for {context} must be a mapping")

    type_value = schema.get("type")
    if type_value is None:
        raise ValueError(f"Missing 'type' declaration in {field} for {context}")
    if isinstance(type_value, str):
        _ensure_json_type(type_value, field=field, context=context)
        type_members = {type_value}
    elif isinstance(type_value, list) and type_value:
        for item in type_value:
            if not isinstance(item, str):
                raise TypeError(f"Entries in '{field}' type list for {context} must be strings")
            _ensure_json_type(item, field=field, context=context)
        type_members = set(type_value)
    else:
        raise TypeError(f"'{field}' type for {context} must be a string or a non-empty list of strings")

    if "enum" in schema and (not isinstance(schema["enum"], list) or not schema["enum"]):
        raise ValueError(f"'enum' for {context} must be a non-empty list when provided")

    properties = schema.get("properties")
    if properties is not None:
        if "object" not in type_members:
            raise ValueError(f"'properties' is only valid for object types in {context}")
        if not isinstance(properties, dict):
            raise TypeError(f"'properties' for {context} must be a mapping")
        for name, subschema in properties.items():
            if not isinstance(name, str) or not name:
                raise ValueError(f"Property names for {context} must be non-empty strings")
            _validate_json_schema(subschema, field=f"property '{name}'", context=context)

    if "required" in schema:
        required = schema["required"]
        if not isinstance(required, list) or not all(isinstance(r, str) and r for r in required):
            raise ValueError(f"'required' for {context} must be a list of non-empty strings")
        unknown = [r for r in required if r not in (properties or {})]
        if unknown:
            raise ValueError(f"'required' for {context} names undeclared columns {unknown}")

    additional = schema.get("additionalProperties")
    if isinstance(additional, dict):
        _validate_json_schema(additional, field="additionalProperties", context=context)
    elif additional is not None and not isinstance(additional, bool):
        raise TypeError(f"'additionalProperties' for {context} must be a boolean or schema mapping")


@dataclass
class TableSpec:
    """Columns of one CSV table."""

    name: str
    description: str
    columns: dict

    def __post_init__(self) -> None:
        _validate_json_schema(self.columns, field="columns", context=self.name)
        if self.columns.get("type") != "object":
            raise ValueError(f"'columns' for {self.name} must describe an object")

    @classmethod
    def from_mapping(cls, mapping: dict) -> "TableSpec":
        missing = {key for key in ("name", "columns") if key not in mapping}
        if missing:
            raise ValueError(f"Table specification missing required fields: {', '.join(sorted(missing))}")
        description = mapping.get("description", "")
        if not isinstance(description, str):
            raise TypeError("Table specification 'description' must be a string if provided")
        return cls(name=mapping["name"], description=description, columns=mapping["columns"])

    @property
    def column_names(self) -> List[str]:
        return list(self.columns.get("properties", {}))

    @property
    def required(self) -> List[str]:
        return list(self.columns.get("required", []))

    def check_columns(self, found: Sequence[str], *, source: Optional[str] = None) -> None:
        """Raise :class:`OpdSchemaError` when a required column is absent."""

        missing = [c for c in self.required if c not in found]
        if missing:
            where = source or self.name
            raise OpdSchemaError(f"{where}: missing required columns {missing}", columns_found=list(found))

    def to_mapping(self) -> dict:
        return {"name": self.name, "description": self.description, "columns": self.columns}


def load_table_specs(path: Path | None = None) -> Dict[str, TableSpec]:
    """Return the table catalogue keyed by file name."""

    tables_path = path or (_get_default_schema_dir() / TABLES_FILENAME)
    data = json.loads(Path(tables_path).read_text(encoding="utf-8"))
    specs = [TableSpec.from_mapping(item) for item in data.get("tables", [])]
    return {spec.name: spec for spec in specs}


@lru_cache(maxsize=1)
def table_catalogue() -> Dict[str, TableSpec]:
    return load_table_specs()


def table_spec(name: str) -> TableSpec:
    try:
        return table_catalogue()[name]
    except KeyError:
        raise KeyError(f"No schema registered for table {name!r}") from None


def write_schema(path: Path, tables: Iterable[str]) -> Path:
    """Write the schemas of ``tables`` (file names) as ``schema.json``."""

    catalogue = table_catalogue()
    payload = {"tables": [catalogue[name].to_mapping() for name in sorted(set(tables))]}
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


@dataclass
class StageSpec:
    """Name, description and keyword parameters of one pipeline stage."""

    name: str
    description: str
    parameters: dict
    returns: Optional[str] = None

    def __post_init__(self) -> None:
        _validate_json_schema(self.parameters, field="parameters", context=self.name)
        if self.parameters.get("type") != "object":
            raise ValueError(f"'parameters' for {self.name} must describe an object")

    @classmethod
    def from_mapping(cls, mapping: dict) -> "StageSpec":
        missing = {key for key in ("name", "description", "parameters") if key not in mapping}
        if missing:
            raise ValueError(f"Stage specification missing required fields: {', '.join(sorted(missing))}")
        returns = mapping.get("returns")
        if returns is not None and not isinstance(returns, str):
            raise TypeError("Stage specification 'returns' must be a string if provided")
        return cls(
            name=mapping["name"],
            description=mapping["description"],
            parameters=mapping["parameters"],
            returns=returns,
        )

    @property
    def properties(self) -> dict:
        return dict(self.parameters.get("properties", {}))

    @property
    def required(self) -> List[str]:
        return list(self.parameters.get("required", []))

    def check_arguments(self, arguments: Iterable[str]) -> None:
        """Raise :class:`ConfigError` for missing or undeclared keyword arguments."""

        given = set(arguments)
        missing = [name for name in self.required if name not in given]
        unknown = sorted(given - set(self.properties))
        problems = []
        if missing:
            problems.append(f"missing {missing}")
        if unknown and self.parameters.get("additionalProperties", True) is False:
            problems.append(f"unexpected {unknown}")
        if problems:
            raise ConfigError(f"Stage {self.name}: " + "; ".join(problems))


def load_stage_specs(path: Path | None = None) -> List[StageSpec]:
    """Return the stage catalogue in pipeline order."""

    stages_path = path or (_get_default_schema_dir() / STAGES_FILENAME)
    data = json.loads(Path(stages_path).read_text(encoding="utf-8"))
    specs = [StageSpec.from_mapping(item) for item in data.get("stages", [])]
    names = [spec.name for spec in specs]
    duplicates = sorted({n for n in names if names.count(n) > 1})
    if duplicates:
        raise ValueError(f"Duplicate stage specifications: {duplicates}")
    return specs


__all__ = [
    "StageSpec",
    "TableSpec",
    "load_stage_specs",
    "load_table_specs",
    "table_catalogue",
    "table_spec",
    "write_schema",
]
