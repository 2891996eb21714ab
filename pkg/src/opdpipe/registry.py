"""Stage registry that binds stage specifications to implementations."""

from __future__ import annotations

from typing import Any, Dict, Iterable, List, Mapping, Optional

from . import schema as schema_module
from .config import RunConfig, get_config
from .schema import StageSpec
from .stages import (
    ChipStage,
    CompositeStage,
    ConsolidateStage,
    EnrichStage,
    EvaluateStage,
    ExportStage,
    IngestStage,
    LinkStage,
    SimulateStage,
    StatsStage,
)
from .stages.base import Stage, StageResult

# composite → export is the order a full run executes
PIPELINE_ORDER = ("composite", "chip", "ingest", "consolidate", "link", "enrich", "stats", "export")


class StageRegistry:
    """Registry providing lookup and invocation for stages."""

    def __init__(self, specs: Iterable[StageSpec]):
        self._specs: Dict[str, StageSpec] = {item.name: item for item in specs}
        self._stages: Dict[str, Stage] = {}

    @classmethod
    def from_default_spec(cls) -> "StageRegistry":
        registry = cls(schema_module.load_stage_specs())
        registry.register_default_implementations()
        return registry

    def register(self, stage: Stage) -> None:
        spec = self._specs.get(stage.name)
        if not spec:
            raise KeyError(f"Stage '{stage.name}' is not part of the catalogue")
        self._stages[stage.name] = stage

    def register_default_implementations(self) -> None:
        mapping: Mapping[str, type[Stage]] = {
            CompositeStage.name: CompositeStage,
            ChipStage.name: ChipStage,
            IngestStage.name: IngestStage,
            ConsolidateStage.name: ConsolidateStage,
            LinkStage.name: LinkStage,
            EnrichStage.name: EnrichStage,
            StatsStage.name: StatsStage,
            ExportStage.name: ExportStage,
            EvaluateStage.name: EvaluateStage,
            SimulateStage.name: SimulateStage,
        }
        for name, cls in mapping.items():
            spec = self._specs.get(name)
            if spec:
                self.register(cls(spec))

    def get(self, name: str) -> Stage:
        try:
            return self._stages[name]
        except KeyError as exc:
            raise KeyError(f"Stage '{name}' is not registered") from exc

    def call(self, name: str, config: Optional[RunConfig] = None, **kwargs: Any) -> StageResult:
        stage = self.get(name)
        return stage.call(config if config is not None else get_config(), **kwargs)

    def list_specs(self) -> List[StageSpec]:
        return list(self._specs.values())

    def described_stages(self) -> List[dict]:
        return [stage.describe() for stage in self._stages.values()]

    def missing_stages(self) -> List[str]:
        return [name for name in self._specs if name not in self._stages]


__all__ = ["PIPELINE_ORDER", "StageRegistry"]
