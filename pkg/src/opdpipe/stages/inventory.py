"""Detection ingest, quarterly consolidation and cross-quarter linking stages."""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from ..asciigrid import read_ascii_grid
from ..config import RunConfig
from ..consolidate import QuarterInventory, consolidate_quarter, load_exclusion_layer, read_inventory, write_inventory
from ..detections import (
    Detection,
    IngestUnit,
    ParseReport,
    ingest_unit,
    read_detections,
    read_ingest_manifest,
    write_detections,
)
from ..errors import ConfigError, InputError, InvalidValueError
from ..logging_utils import get_logger
from ..quarters import Quarter
from ..raster import RasterKind
from ..tracklink import link_quarters, write_tracks
from .base import Stage, StageResult, clear_outputs, run_units
from .imagery import discover_composites

logger = get_logger(__name__)

INVENTORY_PATTERN = "inventory_*.geojson"


def detections_file(directory: Path, tile_id: str, quarter: Quarter) -> Path:
    return Path(directory) / f"{tile_id}_{quarter}.geojson"


class IngestStage(Stage):
    name = "ingest"

    def run(  # type: ignore[override]
        self,
        config: RunConfig,
        manifest: Optional[str] = None,
        composites_dir: Optional[str] = None,
        detections_dir: Optional[str] = None,
        out_dir: Optional[str] = None,
    ) -> StageResult:
        layout = self.layout(config, out_dir)
        if manifest:
            units = read_ingest_manifest(manifest)
        else:
            root = detections_dir or config.detections_dir
            if not root:
                raise ConfigError("No detections directory given (detections_dir in the config or --detections-dir)")
            directory = Path(composites_dir) if composites_dir else layout.composites
            units = [
                IngestUnit(tile_id, quarter, path, Path(root) / tile_id / str(quarter))
                for tile_id, quarter, path in discover_composites(directory)
            ]
        if not units:
            raise InputError("Nothing to ingest: no (tile, quarter) units found")
        layout.detections.mkdir(parents=True, exist_ok=True)
        clear_outputs(layout.detections, "*_*.geojson")

        def _one(unit: IngestUnit) -> Tuple[int, ParseReport, Path]:
            report = ParseReport()
            composite = read_ascii_grid(unit.composite_path, kind=RasterKind.U8)
            if unit.detections_path.is_dir():
                found = ingest_unit(unit.tile_id, unit.quarter, composite, unit.detections_path, report=report)
            else:
                logger.warning("%s/%s: no detections directory %s", unit.tile_id, unit.quarter, unit.detections_path)
                found = []
            path = write_detections(found, detections_file(layout.detections, unit.tile_id, unit.quarter))
            return len(found), report, path

        results = run_units(self.name, _one, units, workers=config.workers, label=lambda u: f"{u.tile_id}/{u.quarter}")
        total = ParseReport()
        for _, report, _ in results:
            total.merge(report)
        if total.rejected:
            source, line, reason = total.rejected[0]
            logger.warning("Rejected %d detection records (first: %s line %d, %s)", len(total.rejected), source, line, reason)
        count = sum(n for n, _, _ in results)
        return StageResult(
            success=True,
            output=f"{count} detections from {len(units)} units ({len(total.rejected)} rejected, {total.clipped_away} clipped away)",
            data={"detections": count, "units": len(units), "rejected": len(total.rejected)},
            files=[path for _, _, path in results],
        )


def _quarter_of(path: Path) -> Quarter:
    _, _, label = path.stem.rpartition("_")
    return Quarter.parse(label)


class ConsolidateStage(Stage):
    name = "consolidate"

    def run(self, config: RunConfig, detections_dir: Optional[str] = None, out_dir: Optional[str] = None) -> StageResult:  # type: ignore[override]
        layout = self.layout(config, out_dir)
        directory = Path(detections_dir) if detections_dir else layout.detections
        by_quarter: Dict[Quarter, List[Path]] = defaultdict(list)
        for path in sorted(directory.glob("*_*.geojson")):
            try:
                by_quarter[_quarter_of(path)].append(path)
            except InvalidValueError:
                logger.debug("Skipping %s: not a unit detection file", path)
        if not by_quarter:
            raise InputError(f"No detection files found in {directory}")
        layer = load_exclusion_layer(config.exclusion_path) if config.exclusion_path else None
        if layer is None:
            logger.warning("No exclusion layer configured; detections are not masked")
        layout.inventories.mkdir(parents=True, exist_ok=True)
        clear_outputs(layout.inventories, INVENTORY_PATTERN)

        def _one(item: Tuple[Quarter, List[Path]]) -> Tuple[QuarterInventory, Path]:
            quarter, paths = item
            detections: List[Detection] = [d for p in paths for d in read_detections(p)]
            inventory = consolidate_quarter(
                detections,
                layer,
                conf_min=config.conf_min,
                level_min=config.level_min,
                iou_min=config.iou_dedup,
                quarter=quarter,
            )
            return inventory, write_inventory(inventory, layout.inventories)

        results = run_units(self.name, _one, sorted(by_quarter.items()), workers=config.workers, label=lambda item: str(item[0]))
        kept = {str(inv.quarter): len(inv.detections) for inv, _ in results}
        return StageResult(
            success=True,
            output=f"{sum(kept.values())} detections kept over {len(kept)} quarters",
            data=kept,
            files=[path for _, path in results],
        )


class LinkStage(Stage):
    name = "link"

    def run(self, config: RunConfig, inventories_dir: Optional[str] = None, out_dir: Optional[str] = None) -> StageResult:  # type: ignore[override]
        layout = self.layout(config, out_dir)
        directory = Path(inventories_dir) if inventories_dir else layout.inventories
        paths = sorted(directory.glob(INVENTORY_PATTERN))
        if not paths:
            raise InputError(f"No quarterly inventories found in {directory}")
        tracks = link_quarters([read_inventory(p) for p in paths], iou_min=config.iou_link)
        path = write_tracks(tracks, layout.tracks)
        return StageResult(success=True, output=f"{len(tracks)} platform tracks", data=len(tracks), files=[path])


__all__ = ["ConsolidateStage", "IngestStage", "LinkStage", "detections_file"]
