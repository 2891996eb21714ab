"""Chip detection files: parsing, georeferencing and backscatter statistics.

A chip detection file holds one record per line::

    class_id cx cy w h confidence

with every value except ``class_id`` normalised to [0, 1] in chip
coordinates. Class ids: 0 = single platform, 1 = platform cluster,
2 = wind turbine. Files are named ``{tile_id}_c{col0}_r{row0}.txt``.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import pandas as pd

from .errors import ChipParseError, FootprintError, InputError
from .geojson_io import box_from_geometry, box_geometry, make_feature, read_features, write_collection
from .geometry import GeoBox
from .logging_utils import get_logger
from .quarters import Quarter
from .raster import ChipWindow, Raster, RasterKind, chip_grid, geo_to_pixel, pad_to_chip, pixel_to_geo

logger = get_logger(__name__)

PathLike = Union[str, Path]


class DetectionClass(str, Enum):
    SINGLE_PLATFORM = "SINGLE_PLATFORM"
    PLATFORM_CLUSTER = "PLATFORM_CLUSTER"
    WIND_TURBINE = "WIND_TURBINE"


CLASS_BY_ID: Dict[int, DetectionClass] = {
    0: DetectionClass.SINGLE_PLATFORM,
    1: DetectionClass.PLATFORM_CLUSTER,
    2: DetectionClass.WIND_TURBINE,
}
ID_BY_CLASS = {cls: class_id for class_id, cls in CLASS_BY_ID.items()}


@dataclass(frozen=True, slots=True)
class Detection:
    """One model output, georeferenced."""

    id: str
    quarter: Quarter
    tile_id: str
    label: DetectionClass
    confidence: float
    box: GeoBox
    max_level: Optional[int] = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.confidence <= 1.0:
            raise InputError(f"{self.id}: confidence {self.confidence} outside [0, 1]")
        if self.max_level is not None and not 0 <= self.max_level <= 255:
            raise InputError(f"{self.id}: max_level {self.max_level} outside [0, 255]")


@dataclass
class ParseReport:
    """Records rejected or dropped while parsing chip files."""

    rejected: List[Tuple[str, int, str]] = field(default_factory=list)
    clipped_away: int = 0
    parsed: int = 0

    def reject(self, source: str, line_number: int, reason: str) -> None:
        self.rejected.append((source, line_number, reason))

    def merge(self, other: "ParseReport") -> None:
        self.rejected.extend(other.rejected)
        self.clipped_away += other.clipped_away
        self.parsed += other.parsed


def detection_id(window: ChipWindow, quarter: Quarter, line_number: int) -> str:
    return f"{window.name}_{quarter}_L{line_number}"


def _parse_fields(raw: str, line_number: int, source: str) -> Tuple[int, List[float]]:
    parts = raw.split()
    if len(parts) != 6:
        raise ChipParseError(f"expected 6 fields, found {len(parts)}", line_number=line_number, source=source)
    try:
        class_id = int(parts[0])
        numbers = [float(p) for p in parts[1:]]
    except ValueError as exc:
        raise ChipParseError(f"non-numeric field in {raw.strip()!r}", line_number=line_number, source=source) from exc
    return class_id, numbers


def parse_chip_detections(
    text: str,
    window: ChipWindow,
    quarter: Quarter,
    *,
    report: Optional[ParseReport] = None,
    source: Optional[str] = None,
) -> List[Detection]:
    """Parse one chip file and georeference its records through the tile transform."""

    if window.tile_transform is None:
        raise InputError(f"Chip window {window.name} carries no tile transform")
    report = report if report is not None else ParseReport()
    source = source or window.name
    transform = window.tile_transform
    tile_w = window.tile_width
    tile_h = window.tile_height

    detections: List[Detection] = []
    for line_number, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        class_id, (cx, cy, w, h, confidence) = _parse_fields(raw, line_number, source)

        label = CLASS_BY_ID.get(class_id)
        if label is None:
            report.reject(source, line_number, f"unknown class id {class_id}")
            continue
        if not all(math.isfinite(v) and 0.0 <= v <= 1.0 for v in (cx, cy, w, h, confidence)):
            report.reject(source, line_number, "normalised value outside [0, 1]")
            continue

        x0 = window.col0 + (cx - w / 2.0) * window.size
        x1 = window.col0 + (cx + w / 2.0) * window.size
        y0 = window.row0 + (cy - h / 2.0) * window.size
        y1 = window.row0 + (cy + h / 2.0) * window.size
        if tile_w is not None:
            x0, x1 = max(0.0, x0), min(float(tile_w), x1)
        if tile_h is not None:
            y0, y1 = max(0.0, y0), min(float(tile_h), y1)
        if x1 <= x0 or y1 <= y0:
            report.clipped_away += 1
            continue

        min_lon, max_lat = pixel_to_geo(transform, x0, y0)
        max_lon, min_lat = pixel_to_geo(transform, x1, y1)
        detections.append(
            Detection(
                id=detection_id(window, quarter, line_number),
                quarter=quarter,
                tile_id=window.tile_id,
                label=label,
                confidence=confidence,
                box=GeoBox(min_lon, min_lat, max_lon, max_lat),
            )
        )

    report.parsed += len(detections)
    if report.rejected or report.clipped_away:
        logger.debug(
            "%s: %d records kept, %d rejected, %d clipped away",
            source,
            len(detections),
            len(report.rejected),
            report.clipped_away,
        )
    return detections


def attach_max_level(d: Detection, composite: Raster) -> Detection:
    """Maximum 8-bit level over the pixels whose centres fall inside the box."""

    if composite.kind is not RasterKind.U8:
        raise InputError("attach_max_level expects a quantised (U8) composite")
    min_lon, min_lat, max_lon, max_lat = composite.bounds
    b = d.box
    if b.max_lon <= min_lon or b.min_lon >= max_lon or b.max_lat <= min_lat or b.min_lat >= max_lat:
        raise FootprintError(f"Detection {d.id} lies outside the composite footprint")

    t = composite.transform
    left, top = geo_to_pixel(t, b.min_lon, b.max_lat)
    right, bottom = geo_to_pixel(t, b.max_lon, b.min_lat)
    c_lo = max(0, math.ceil(left - 0.5))
    c_hi = min(composite.width - 1, math.floor(right - 0.5))
    r_lo = max(0, math.ceil(top - 0.5))
    r_hi = min(composite.height - 1, math.floor(bottom - 0.5))

    if c_lo > c_hi or r_lo > r_hi:
        # sub-pixel box: fall back to the pixel under its centre
        col, row = geo_to_pixel(t, *b.center)
        c_lo = c_hi = min(composite.width - 1, max(0, int(math.floor(col))))
        r_lo = r_hi = min(composite.height - 1, max(0, int(math.floor(row))))

    window = composite.values[r_lo : r_hi + 1, c_lo : c_hi + 1]
    return dataclasses.replace(d, max_level=int(window.max()))


def chip_file_name(window: ChipWindow) -> str:
    return f"{window.name}.txt"


def tile_windows(tile_id: str, composite: Raster) -> List[ChipWindow]:
    """Chip windows of a (padded) tile, clipped back to the tile's own extent."""

    padded = pad_to_chip(composite)
    return [
        dataclasses.replace(w, tile_width=composite.width, tile_height=composite.height)
        for w in chip_grid(padded.width, padded.height, tile_id=tile_id, transform=composite.transform)
    ]


def ingest_texts(
    tile_id: str,
    quarter: Quarter,
    composite: Raster,
    texts: Mapping[str, str],
    *,
    report: Optional[ParseReport] = None,
    source_prefix: str = "",
) -> List[Detection]:
    """Ingest chip records given as ``{chip file name: text}``; absent chips have no detections."""

    report = report if report is not None else ParseReport()
    windows = tile_windows(tile_id, composite)
    results: List[Detection] = []
    missing = 0
    for window in windows:
        name = chip_file_name(window)
        text = texts.get(name)
        if text is None:
            missing += 1
            continue
        parsed = parse_chip_detections(text, window, quarter, report=report, source=source_prefix + name)
        results.extend(attach_max_level(d, composite) for d in parsed)

    logger.info(
        "Ingested %s/%s: %d detections from %d chips (%d without a file)",
        tile_id,
        quarter,
        len(results),
        len(windows) - missing,
        missing,
    )
    return sorted(results, key=lambda d: d.id)


def ingest_unit(
    tile_id: str,
    quarter: Quarter,
    composite: Raster,
    detections_dir: PathLike,
    *,
    report: Optional[ParseReport] = None,
) -> List[Detection]:
    """Ingest every chip file of one (tile, quarter) unit."""

    detections_dir = Path(detections_dir)
    texts = {
        path.name: path.read_text(encoding="utf-8")
        for path in sorted(detections_dir.glob(f"{tile_id}_c*_r*.txt"))
    }
    return ingest_texts(tile_id, quarter, composite, texts, report=report, source_prefix=f"{detections_dir}/")


@dataclass(frozen=True, slots=True)
class IngestUnit:
    tile_id: str
    quarter: Quarter
    composite_path: Path
    detections_path: Path


def read_ingest_manifest(path: PathLike) -> List[IngestUnit]:
    """Read the ``tile_id,quarter,composite_path,detections_path`` manifest."""

    path = Path(path)
    if not path.exists():
        raise InputError(f"Ingest manifest not found: {path}")
    frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    required = ["tile_id", "quarter", "composite_path", "detections_path"]
    missing = [c for c in required if c not in frame.columns]
    if missing:
        raise InputError(f"{path}: manifest lacks columns {missing}")
    base = path.parent
    units = [
        IngestUnit(
            tile_id=row.tile_id,
            quarter=Quarter.parse(row.quarter),
            composite_path=(base / row.composite_path).resolve(),
            detections_path=(base / row.detections_path).resolve(),
        )
        for row in frame.itertuples(index=False)
    ]
    return sorted(units, key=lambda u: (u.quarter, u.tile_id))


def write_ingest_manifest(units: Sequence[IngestUnit], path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    base = path.parent.resolve()
    rows = [
        {
            "tile_id": u.tile_id,
            "quarter": str(u.quarter),
            "composite_path": _relative(u.composite_path, base),
            "detections_path": _relative(u.detections_path, base),
        }
        for u in sorted(units, key=lambda u: (u.quarter, u.tile_id))
    ]
    pd.DataFrame(rows, columns=["tile_id", "quarter", "composite_path", "detections_path"]).to_csv(
        path, index=False, lineterminator="\n"
    )
    return path


def _relative(target: Path, base: Path) -> str:
    target = Path(target).resolve()
    try:
        return target.relative_to(base).as_posix()
    except ValueError:
        return target.as_posix()


def detection_to_feature(d: Detection) -> dict:
    return make_feature(
        box_geometry(d.box),
        {
            "id": d.id,
            "quarter": str(d.quarter),
            "tile_id": d.tile_id,
            "class": d.label.value,
            "confidence": d.confidence,
            "max_level": d.max_level,
        },
    )


def detection_from_feature(feature: dict) -> Detection:
    props = feature.get("properties") or {}
    try:
        return Detection(
            id=str(props["id"]),
            quarter=Quarter.parse(props["quarter"]),
            tile_id=str(props.get("tile_id", "")),
            label=DetectionClass(props["class"]),
            confidence=float(props["confidence"]),
            box=box_from_geometry(feature["geometry"]),
            max_level=None if props.get("max_level") is None else int(props["max_level"]),
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise InputError(f"Invalid detection feature {props.get('id', '?')}: {exc}") from exc


def write_detections(detections: Sequence[Detection], path: PathLike) -> Path:
    """Write detections as a canonical GeoJSON FeatureCollection sorted by id."""

    ordered = sorted(detections, key=lambda d: d.id)
    return write_collection((detection_to_feature(d) for d in ordered), path)


def read_detections(path: PathLike) -> List[Detection]:
    return [detection_from_feature(f) for f in read_features(path)]


__all__ = [
    "CLASS_BY_ID",
    "Detection",
    "DetectionClass",
    "IngestUnit",
    "ParseReport",
    "attach_max_level",
    "chip_file_name",
    "detection_from_feature",
    "detection_id",
    "detection_to_feature",
    "ingest_texts",
    "ingest_unit",
    "parse_chip_detections",
    "read_detections",
    "read_ingest_manifest",
    "tile_windows",
    "write_detections",
    "write_ingest_manifest",
]
