"""Compositing and chipping stages."""

from __future__ import annotations

import math
from pathlib import Path
from typing import List, Optional, Tuple

import pandas as pd

from ..asciigrid import read_ascii_grid, read_scene_manifest, write_ascii_grid
from ..config import RunConfig
from ..detections import tile_windows
from ..errors import ConfigError, InputError, InvalidValueError
from ..logging_utils import get_logger
from ..quarters import Quarter
from ..raster import RasterKind, extract_chip, median_composite, pad_to_chip, quantize
from .base import Stage, StageResult, clear_outputs, run_units

logger = get_logger(__name__)

CompositeEntry = Tuple[str, Quarter, Path]

CHIP_COLUMNS = ["tile_id", "quarter", "chip", "col0", "row0", "max_level"]


def composite_path(directory: Path, tile_id: str, quarter: Quarter) -> Path:
    return Path(directory) / f"{tile_id}_{quarter}.asc"


def discover_composites(directory: Path) -> List[CompositeEntry]:
    """Composites named ``{tile_id}_{quarter}.asc``, sorted by (quarter, tile)."""

    found = []
    for path in Path(directory).glob("*_*.asc"):
        tile_id, _, label = path.stem.rpartition("_")
        try:
            found.append((tile_id, Quarter.parse(label), path))
        except InvalidValueError:
            logger.debug("Skipping %s: not a composite name", path)
    return sorted(found, key=lambda e: (e[1], e[0]))


class CompositeStage(Stage):
    name = "composite"

    def run(self, config: RunConfig, scene_manifest: Optional[str] = None, out_dir: Optional[str] = None) -> StageResult:  # type: ignore[override]
        manifest = scene_manifest or config.scene_manifest
        if not manifest:
            raise ConfigError("No scene manifest given (scene_manifest in the config or --scene-manifest)")
        units = list(read_scene_manifest(manifest).items())
        layout = self.layout(config, out_dir)
        layout.composites.mkdir(parents=True, exist_ok=True)
        clear_outputs(layout.composites, "*_*.asc")

        def _one(item) -> CompositeEntry:
            (tile_id, quarter), paths = item
            scenes = [read_ascii_grid(p) for p in paths]
            cell = scenes[0].transform.pixel_width
            if not math.isclose(cell, config.pixel_size, rel_tol=1e-9):
                logger.warning("%s/%s: scene pixel size %r differs from the configured %r", tile_id, quarter, cell, config.pixel_size)
            composite = quantize(median_composite(scenes))
            return tile_id, quarter, write_ascii_grid(composite, composite_path(layout.composites, tile_id, quarter))

        written = run_units(
            self.name, _one, units, workers=config.workers, label=lambda item: f"{item[0][0]}/{item[0][1]}"
        )
        logger.info("Composited %d units into %s", len(written), layout.composites)
        return StageResult(
            success=True,
            output=f"{len(written)} composites written to {layout.composites}",
            data=written,
            files=[entry[2] for entry in written],
        )


class ChipStage(Stage):
    name = "chip"

    def run(  # type: ignore[override]
        self,
        config: RunConfig,
        composites_dir: Optional[str] = None,
        out_dir: Optional[str] = None,
        export: Optional[bool] = None,
    ) -> StageResult:
        layout = self.layout(config, out_dir)
        directory = Path(composites_dir) if composites_dir else layout.composites
        composites = discover_composites(directory)
        if not composites:
            raise InputError(f"No composites found in {directory}")
        export = config.export_chips if export is None else export
        clear_outputs(layout.chips, "**/*.asc")

        def _one(entry: CompositeEntry) -> Tuple[List[dict], List[Path]]:
            tile_id, quarter, path = entry
            composite = read_ascii_grid(path, kind=RasterKind.U8)
            padded = pad_to_chip(composite)
            rows, files = [], []
            for window in tile_windows(tile_id, composite):
                chip = extract_chip(padded, window)
                rows.append(
                    {
                        "tile_id": tile_id,
                        "quarter": str(quarter),
                        "chip": window.name,
                        "col0": window.col0,
                        "row0": window.row0,
                        "max_level": int(chip.values.max()),
                    }
                )
                if export:
                    files.append(write_ascii_grid(chip, layout.chips / tile_id / str(quarter) / f"{window.name}.asc"))
            return rows, files

        results = run_units(self.name, _one, composites, workers=config.workers, label=lambda e: f"{e[0]}/{e[1]}")
        rows = [row for chunk, _ in results for row in chunk]
        files = [path for _, chunk in results for path in chunk]
        layout.root.mkdir(parents=True, exist_ok=True)
        pd.DataFrame(rows, columns=CHIP_COLUMNS).to_csv(layout.chips_csv, index=False, lineterminator="\n")
        return StageResult(
            success=True,
            output=f"{len(rows)} chips from {len(composites)} composites",
            data=len(rows),
            files=[layout.chips_csv, *files],
        )


__all__ = ["ChipStage", "CompositeStage", "composite_path", "discover_composites"]
