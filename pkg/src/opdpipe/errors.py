"""Exception hierarchy shared by every opdpipe module.

Library code raises these; stages turn them into :class:`StageResult`
failures and the CLI maps them onto process exit codes.
"""

from __future__ import annotations

from typing import Optional, Sequence

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INPUT = 3
EXIT_STAGE = 4


class OpdError(RuntimeError):
    """Base class for all opdpipe failures."""

    exit_code = EXIT_STAGE


class ConfigError(OpdError):
    """Raised when a run configuration is missing or out of range."""

    exit_code = EXIT_CONFIG


class InputError(OpdError):
    """Raised when an input file or value violates its contract."""

    exit_code = EXIT_INPUT


class InvalidValueError(InputError):
    """A scalar input is not finite or outside its domain."""


class ShapeError(InputError):
    """Rasters do not share a grid, or a stack is empty."""


class PaddingRequiredError(InputError):
    """A tile is smaller than one chip and must be padded first."""


class ChipParseError(InputError):
    """A chip detection file contains a malformed record."""

    def __init__(self, message: str, *, line_number: int, source: Optional[str] = None):
        location = f"{source}:{line_number}" if source else f"line {line_number}"
        super().__init__(f"{location}: {message}")
        self.line_number = line_number
        self.source = source


class FootprintError(InputError):
    """A geometry lies entirely outside a raster."""


class LayerLoadError(InputError):
    """A vector layer (exclusion, zones, coastline) is invalid."""


class LinkInputError(InputError):
    """Quarter inventories handed to the linker are inconsistent."""


class SimSpecError(InputError):
    """A synthetic-scene specification violates its invariants."""


class OpdSchemaError(InputError):
    """A product file lacks columns required by the OPD schema."""

    def __init__(self, message: str, *, columns_found: Sequence[str] = ()):
        found = ", ".join(columns_found) or "<none>"
        super().__init__(f"{message} (columns found: {found})")
        self.columns_found = list(columns_found)


class EmptySummaryError(InputError):
    """No platform carries the attribute being summarised."""


class StageError(OpdError):
    """A pipeline stage failed on a given unit of work."""

    exit_code = EXIT_STAGE

    def __init__(self, stage: str, message: str, *, unit: Optional[str] = None):
        where = f"{stage}[{unit}]" if unit else stage
        super().__init__(f"{where}: {message}")
        self.stage = stage
        self.unit = unit


def exit_code_for(exc: BaseException) -> int:
    """Return the process exit code for ``exc``."""

    if isinstance(exc, StageError) and isinstance(exc.__cause__, (ConfigError, InputError)):
        return exc.__cause__.exit_code
    if isinstance(exc, OpdError):
        return exc.exit_code
    return EXIT_STAGE


__all__ = [
    "EXIT_CONFIG",
    "EXIT_INPUT",
    "EXIT_OK",
    "EXIT_STAGE",
    "ChipParseError",
    "ConfigError",
    "EmptySummaryError",
    "FootprintError",
    "InputError",
    "InvalidValueError",
    "LayerLoadError",
    "LinkInputError",
    "OpdError",
    "OpdSchemaError",
    "PaddingRequiredError",
    "ShapeError",
    "SimSpecError",
    "StageError",
    "exit_code_for",
]
