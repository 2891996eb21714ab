"""Evaluation and simulation stages."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Optional

from ..config import RunConfig
from ..enrich import ZoneKind, load_zone_layer
from ..errors import ConfigError
from ..evalkit import MatchConfig, compare_datasets, read_predictions, read_truth, write_report
from ..logging_utils import get_logger
from ..simkit import load_sim_spec, random_spec, verify_roundtrip, write_simulation
from .base import Stage, StageResult

logger = get_logger(__name__)


class EvaluateStage(Stage):
    name = "evaluate"

    def run(  # type: ignore[override]
        self,
        config: RunConfig,
        predictions: Mapping[str, str],
        truth: str,
        regions_path: Optional[str] = None,
        point_in_box: bool = False,
        unscored: bool = False,
        out_path: Optional[str] = None,
    ) -> StageResult:
        if not predictions:
            raise ConfigError("At least one prediction set is required")
        cfg = MatchConfig(
            iou_min=config.eval_iou,
            conf_min=None if unscored else config.eval_conf,
            point_in_box=point_in_box,
        )
        regions = load_zone_layer(regions_path or config.region_path, ZoneKind.REGION) if (regions_path or config.region_path) else None
        datasets = {name: read_predictions(path) for name, path in sorted(predictions.items())}
        reports = compare_datasets(datasets, read_truth(truth), cfg, regions)
        path = write_report(reports, Path(out_path) if out_path else self.layout(config).eval_report, cfg)
        summary = ", ".join(f"{name}: macro F1 {r.macro_f1:.3f}, micro F1 {r.micro_f1:.3f}" for name, r in reports.items())
        return StageResult(success=True, output=summary, data=reports, files=[path])


class SimulateStage(Stage):
    name = "simulate"

    def run(  # type: ignore[override]
        self,
        config: RunConfig,
        spec_path: Optional[str] = None,
        seed: Optional[int] = None,
        max_platforms: int = 50,
        out_dir: Optional[str] = None,
        verify: bool = False,
    ) -> StageResult:
        if spec_path:
            spec = load_sim_spec(spec_path)
        elif seed is not None:
            spec = random_spec(int(seed), max_platforms=int(max_platforms))
        else:
            raise ConfigError("simulate needs a spec file or a seed")
        destination = Path(out_dir) if out_dir else self.layout(config).root / "simulation"
        files = write_simulation(spec, destination)
        data = {"root": str(files.root), "platforms": len(spec.platforms), "ships": len(spec.ships)}
        output = f"Simulation of seed {spec.seed} with {len(spec.platforms)} platforms written to {files.root}"
        if verify:
            report = verify_roundtrip(spec)
            data["diffs"] = list(report.diffs)
            output += f"; round trip {'matches' if report.ok else f'has {len(report.diffs)} differences'}"
        return StageResult(
            success=True,
            output=output,
            data=data,
            files=[files.scene_manifest, files.ingest_manifest, files.truth, files.spec],
        )


__all__ = ["EvaluateStage", "SimulateStage"]
