"""Stage implementations for opdpipe."""

from .base import OutputLayout, Stage, StageResult
from .evaluation import EvaluateStage, SimulateStage
from .fleet import EnrichStage, ExportStage, StatsStage
from .imagery import ChipStage, CompositeStage
from .inventory import ConsolidateStage, IngestStage, LinkStage

__all__ = [
    "ChipStage",
    "CompositeStage",
    "ConsolidateStage",
    "EnrichStage",
    "EvaluateStage",
    "ExportStage",
    "IngestStage",
    "LinkStage",
    "OutputLayout",
    "SimulateStage",
    "Stage",
    "StageResult",
    "StatsStage",
]
