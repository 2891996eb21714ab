"""Base classes shared by opdpipe stage implementations."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, TypeVar

from ..config import RunConfig
from ..errors import OpdError, StageError
from ..logging_utils import get_logger
from ..schema import StageSpec

logger = get_logger(__name__)

T = TypeVar("T")
R = TypeVar("R")


@dataclass
class StageResult:
    """Standardized container for stage call results."""

    success: bool
    output: Optional[str] = None
    data: Any | None = None
    error: Optional[str] = None
    files: List[Path] = field(default_factory=list)
    exception: Optional[BaseException] = field(default=None, repr=False)

    def unwrap(self) -> Any:
        """Return ``data`` when successful or re-raise the failure otherwise."""

        if not self.success:
            if self.exception is not None:
                raise self.exception
            raise OpdError(self.error or "Stage execution failed")
        return self.data


@dataclass(frozen=True)
class OutputLayout:
    """Where each stage reads and writes inside a run directory."""

    root: Path

    @property
    def composites(self) -> Path:
        return self.root / "composites"

    @property
    def chips_csv(self) -> Path:
        return self.root / "chips.csv"

    @property
    def chips(self) -> Path:
        return self.root / "chips"

    @property
    def detections(self) -> Path:
        return self.root / "detections"

    @property
    def inventories(self) -> Path:
        return self.root / "inventories"

    @property
    def tracks(self) -> Path:
        return self.root / "tracks.geojson"

    @property
    def enriched(self) -> Path:
        return self.root / "enriched.geojson"

    @property
    def tables(self) -> Path:
        return self.root / "tables"

    @property
    def products(self) -> Path:
        return self.root / "products"

    @property
    def eval_report(self) -> Path:
        return self.root / "eval_report.json"

    @property
    def manifest(self) -> Path:
        return self.root / "manifest.json"


def clear_outputs(directory: Path, pattern: str) -> int:
    """Delete files matching ``pattern`` that an earlier run left in ``directory``."""

    removed = 0
    for path in sorted(Path(directory).glob(pattern)):
        if path.is_file():
            path.unlink()
            removed += 1
    if removed:
        logger.info("Removed %d stale files from %s", removed, directory)
    return removed


def run_units(
    stage: str,
    func: Callable[[T], R],
    units: Sequence[T],
    *,
    workers: int,
    label: Callable[[T], str],
) -> List[R]:
    """Apply ``func`` to every unit, in a thread pool when ``workers > 1``.

    Results keep the order of ``units``; the first failing unit aborts with a
    :class:`StageError` naming it.
    """

    def _guarded(unit: T) -> R:
        try:
            return func(unit)
        except StageError:
            raise
        except (OpdError, OSError, ValueError) as exc:
            raise StageError(stage, str(exc), unit=label(unit)) from exc

    if workers <= 1 or len(units) <= 1:
        return [_guarded(unit) for unit in units]
    with ThreadPoolExecutor(max_workers=workers, thread_name_prefix=f"opdpipe-{stage}") as pool:
        return list(pool.map(_guarded, units))


class Stage:
    """Abstract base class for pipeline stages."""

    name: str

    def __init__(self, spec: StageSpec):
        self.spec = spec

    def call(self, config: RunConfig, **kwargs: Any) -> StageResult:
        """Run the stage, folding any :class:`OpdError` into a failed result."""

        try:
            self.spec.check_arguments(kwargs)
            return self.run(config, **kwargs)
        except OpdError as exc:
            logger.error("Stage %s failed: %s", self.name, exc)
            return StageResult(success=False, error=str(exc), exception=exc)

    def run(self, config: RunConfig, **kwargs: Any) -> StageResult:  # pragma: no cover - override hook
        raise NotImplementedError

    def layout(self, config: RunConfig, out_dir: Optional[str] = None) -> OutputLayout:
        return OutputLayout(Path(out_dir or config.output_dir))

    def describe(self) -> Dict[str, Any]:
        """Return metadata about the stage suitable for serialization."""

        return {
            "name": self.spec.name,
            "description": self.spec.description,
            "parameters": self.spec.parameters,
            "returns": self.spec.returns,
            "implementation": self.__class__.__name__,
        }


def sorted_paths(paths: Iterable[Path]) -> List[Path]:
    return sorted(paths, key=lambda p: p.as_posix())


__all__ = ["OutputLayout", "Stage", "StageResult", "clear_outputs", "run_units", "sorted_paths"]
