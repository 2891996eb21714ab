"""Run configuration for opdpipe.

A single :class:`RunConfig` carries every threshold, layer path and runtime
knob. Values are layered from lowest to highest precedence:

1. dataclass defaults (the published processing parameters),
2. a flat ``key: value`` YAML file,
3. ``OPDPIPE_<KEY>`` environment variables (a ``.env`` next to the config
   file or in the working directory is loaded first with python-dotenv),
4. explicit overrides, typically CLI ``--key value`` options.

Relative paths in a config file resolve against the file's directory. The
active configuration is kept in a lock-guarded module global.
"""

from __future__ import annotations

import dataclasses
import os
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

import yaml
from dotenv import load_dotenv

from .constants import (
    CONF_MIN,
    DEFAULT_MAX_SEG_KM,
    DEFAULT_PIXEL_SIZE_DEG,
    EVAL_CONF,
    EVAL_IOU,
    IOU_DEDUP,
    IOU_LINK,
    LEVEL_MIN,
    STUDY_END,
    U8_MAX,
)
from .errors import ConfigError, InvalidValueError
from .logging_utils import get_logger
from .quarters import Quarter

logger = get_logger(__name__)

ENV_PREFIX = "OPDPIPE_"

PATH_FIELDS = (
    "scene_manifest",
    "detections_dir",
    "exclusion_path",
    "region_path",
    "eez_path",
    "coast_path",
    "bathymetry_path",
    "output_dir",
)


def _parse_bool(value: object, *, default: bool = False) -> bool:
    """Parse ``value`` into a boolean flag."""

    if isinstance(value, bool):
        return value
    if isinstance(value, (int, float)):
        return bool(value)
    if isinstance(value, str):
        normalised = value.strip().lower()
        if normalised in {"1", "true", "yes", "on"}:
            return True
        if normalised in {"0", "false", "no", "off"}:
            return False
    return default


@dataclass(slots=True)
class RunConfig:
    """Effective settings of one pipeline run."""

    conf_min: float = CONF_MIN
    level_min: int = LEVEL_MIN
    iou_dedup: float = IOU_DEDUP
    iou_link: float = IOU_LINK
    eval_iou: float = EVAL_IOU
    eval_conf: float = EVAL_CONF
    presence: str = "filled"
    snapshot: str = STUDY_END
    scene_manifest: Optional[str] = None
    detections_dir: Optional[str] = None
    exclusion_path: Optional[str] = None
    region_path: Optional[str] = None
    eez_path: Optional[str] = None
    coast_path: Optional[str] = None
    bathymetry_path: Optional[str] = None
    output_dir: str = "output"
    workers: int = 1
    pixel_size: float = DEFAULT_PIXEL_SIZE_DEG
    max_seg_km: float = DEFAULT_MAX_SEG_KM
    export_chips: bool = False

    def copy(self) -> "RunConfig":
        return dataclasses.replace(self)

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in dataclasses.fields(cls)]

    def to_dict(self) -> Dict[str, Any]:
        return {name: getattr(self, name) for name in self.field_names()}

    def path(self, name: str) -> Optional[Path]:
        if name not in PATH_FIELDS:
            raise KeyError(f"{name} is not a path setting")
        value = getattr(self, name)
        return Path(value) if value else None

    def validate(self) -> "RunConfig":
        """Check ranges; raises :class:`ConfigError` listing every problem."""

        problems = []
        for name in ("conf_min", "iou_dedup", "iou_link", "eval_iou", "eval_conf"):
            value = getattr(self, name)
            if not 0.0 < value <= 1.0:
                problems.append(f"{name} must lie in (0, 1], got {value}")
        if not 0 <= self.level_min <= U8_MAX:
            problems.append(f"level_min must lie in [0, {U8_MAX}], got {self.level_min}")
        if self.presence not in ("filled", "observed"):
            problems.append(f"presence must be 'filled' or 'observed', got {self.presence!r}")
        if self.workers < 1:
            problems.append(f"workers must be at least 1, got {self.workers}")
        if not self.pixel_size > 0:
            problems.append(f"pixel_size must be positive, got {self.pixel_size}")
        if not self.max_seg_km > 0:
            problems.append(f"max_seg_km must be positive, got {self.max_seg_km}")
        try:
            Quarter.parse(self.snapshot)
        except InvalidValueError:
            problems.append(f"snapshot must be a quarter label like 2025Q1, got {self.snapshot!r}")
        if problems:
            raise ConfigError("Invalid configuration: " + "; ".join(problems))
        return self


_DEFAULTS = RunConfig()


def _coerce(name: str, value: Any, *, base_dir: Optional[Path] = None) -> Any:
    default = getattr(_DEFAULTS, name)
    try:
        if name in PATH_FIELDS:
            if value in (None, ""):
                return None if default is None else default
            candidate = Path(str(value)).expanduser()
            if base_dir is not None and not candidate.is_absolute():
                candidate = base_dir / candidate
            return str(candidate)
        if isinstance(default, bool):
            if isinstance(value, str) and value.strip().lower() not in {"1", "true", "yes", "on", "0", "false", "no", "off"}:
                raise ValueError(f"not a boolean: {value!r}")
            return _parse_bool(value, default=default)
        if isinstance(default, int):
            if isinstance(value, float) and not value.is_integer():
                raise ValueError(f"not an integer: {value!r}")
            return int(value)
        if isinstance(default, float):
            return float(value)
        return str(value).strip()
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"Invalid value for {name}: {value!r} ({exc})") from exc


def _apply(config: RunConfig, values: Mapping[str, Any], *, source: str, base_dir: Optional[Path] = None) -> None:
    known = set(RunConfig.field_names())
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"Unknown configuration keys in {source}: {', '.join(unknown)}")
    for name, value in values.items():
        setattr(config, name, _coerce(name, value, base_dir=base_dir))
    if values:
        logger.debug("Applied %d settings from %s", len(values), source)


def _load_sidecar_env_files(path: Optional[Path]) -> None:
    """Load ``.env`` files from the config file's directory and the current working directory."""

    candidates = []
    if path is not None:
        candidates.append(path.resolve().parent / ".env")
    candidates.append(Path.cwd() / ".env")

    seen: set[Path] = set()
    for candidate in candidates:
        resolved = candidate.resolve()
        if resolved in seen:
            continue
        seen.add(resolved)
        if resolved.exists():
            load_dotenv(resolved, override=False)


def _read_yaml(path: Path) -> Dict[str, Any]:
    if not path.exists():
        raise ConfigError(f"Config file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"Config file {path} is not valid YAML: {exc}") from exc
    if data is None:
        logger.warning("Config file is empty: %s", path)
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"Config file {path} must hold a flat key: value mapping")
    nested = sorted(k for k, v in data.items() if isinstance(v, (dict, list)))
    if nested:
        raise ConfigError(f"Config file {path} must be flat; nested values under {', '.join(nested)}")
    return data


def env_settings(env: Optional[Mapping[str, str]] = None) -> Dict[str, str]:
    """``OPDPIPE_<KEY>`` variables that name a configuration field."""

    env_mapping = os.environ if env is None else env
    found = {}
    for name in RunConfig.field_names():
        value = env_mapping.get(f"{ENV_PREFIX}{name.upper()}")
        if value is not None:
            found[name] = value
    return found


def load_run_config(
    path: Optional[Path] = None,
    *,
    env: Optional[Mapping[str, str]] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> RunConfig:
    """Resolve the layered configuration and validate it."""

    config = RunConfig()
    if path is not None:
        path = Path(path)
        _load_sidecar_env_files(path)
        _apply(config, _read_yaml(path), source=str(path), base_dir=path.resolve().parent)
        logger.info("Loaded configuration from %s", path)
    elif env is None:
        _load_sidecar_env_files(None)

    _apply(config, env_settings(env), source="environment")
    if overrides:
        _apply(config, {k: v for k, v in overrides.items() if v is not None}, source="command line")
    return config.validate()


_config_lock = threading.Lock()
_config: RunConfig = RunConfig()


def configure(config: RunConfig) -> None:
    """Install ``config`` as the process-wide configuration."""

    global _config
    config.validate()
    with _config_lock:
        _config = config.copy()
    logger.info("Configuration updated (output_dir=%s workers=%d)", config.output_dir, config.workers)


def get_config() -> RunConfig:
    """Return a copy of the active configuration."""

    with _config_lock:
        return _config.copy()


def reset_config() -> None:
    """Restore the defaults (tests)."""

    global _config
    with _config_lock:
        _config = RunConfig()


__all__ = [
    "PATH_FIELDS",
    "RunConfig",
    "configure",
    "env_settings",
    "get_config",
    "load_run_config",
    "reset_config",
]
