"""opdpipe: offshore platform inventory from SAR composites and detector output."""

from .config import RunConfig, configure, get_config, load_run_config, reset_config
from .errors import ConfigError, InputError, OpdError, StageError
from .pipeline import run_pipeline
from .quarters import Quarter
from .registry import StageRegistry

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "InputError",
    "OpdError",
    "Quarter",
    "RunConfig",
    "StageError",
    "StageRegistry",
    "__version__",
    "configure",
    "get_config",
    "load_run_config",
    "reset_config",
    "run_pipeline",
]
