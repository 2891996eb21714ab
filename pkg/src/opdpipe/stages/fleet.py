"""Enrichment, statistics and product export stages."""

from __future__ import annotations

from pathlib import Path
from typing import Dict, List, Optional

import yaml

from ..analytics import write_tables
from ..config import RunConfig
from ..enrich import EnrichLayers, enrich_fleet, read_fleet, write_fleet
from ..errors import InputError
from ..opd import write_products
from ..quarters import Quarter
from ..tracklink import PresenceMode, read_tracks
from .base import Stage, StageResult


def load_groups(path: Optional[str]) -> Optional[Dict[str, List[str]]]:
    """Read a ``group: [member, ...]`` YAML mapping."""

    if not path:
        return None
    source = Path(path)
    if not source.exists():
        raise InputError(f"Group file not found: {source}")
    data = yaml.safe_load(source.read_text(encoding="utf-8")) or {}
    if not isinstance(data, dict) or not all(isinstance(v, list) for v in data.values()):
        raise InputError(f"{source}: expected a mapping of group name to a list of keys")
    return {str(group): [str(m) for m in members] for group, members in data.items()}


class EnrichStage(Stage):
    name = "enrich"

    def run(self, config: RunConfig, tracks_path: Optional[str] = None, out_dir: Optional[str] = None) -> StageResult:  # type: ignore[override]
        layout = self.layout(config, out_dir)
        tracks = read_tracks(tracks_path or layout.tracks)
        layers = EnrichLayers.load(
            region_path=config.region_path,
            eez_path=config.eez_path,
            coast_path=config.coast_path,
            bathymetry_path=config.bathymetry_path,
            max_seg_km=config.max_seg_km,
        )
        fleet = enrich_fleet(tracks, layers)
        path = write_fleet(fleet, layout.enriched)
        missing = layers.missing()
        output = f"{len(fleet)} platforms enriched"
        if missing:
            output += f" (no {', '.join(missing)} layer)"
        return StageResult(success=True, output=output, data=len(fleet), files=[path])


class StatsStage(Stage):
    name = "stats"

    def run(  # type: ignore[override]
        self,
        config: RunConfig,
        enriched_path: Optional[str] = None,
        out_dir: Optional[str] = None,
        groups_path: Optional[str] = None,
    ) -> StageResult:
        layout = self.layout(config, out_dir)
        fleet = read_fleet(enriched_path or layout.enriched)
        written = write_tables(
            fleet,
            layout.tables,
            mode=PresenceMode(config.presence),
            groups=load_groups(groups_path),
            snapshot=Quarter.parse(config.snapshot),
        )
        return StageResult(
            success=True,
            output=f"{len(written)} files written to {layout.tables}",
            data=[p.name for p in written],
            files=written,
        )


class ExportStage(Stage):
    name = "export"

    def run(self, config: RunConfig, enriched_path: Optional[str] = None, out_dir: Optional[str] = None) -> StageResult:  # type: ignore[override]
        layout = self.layout(config, out_dir)
        fleet = read_fleet(enriched_path or layout.enriched)
        written = write_products(fleet, layout.products, snapshot=Quarter.parse(config.snapshot))
        files = []
        for path in written.values():
            files += [path, path.with_suffix(".geojson")]
        return StageResult(
            success=True,
            output=f"{len(fleet)} platforms exported to {layout.products}",
            data={product.value: str(path) for product, path in written.items()},
            files=files,
        )


__all__ = ["EnrichStage", "ExportStage", "StatsStage", "load_groups"]
