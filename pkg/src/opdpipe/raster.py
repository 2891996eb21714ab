"""Raster container, geotransform math, quantisation, compositing and chipping.

All rasters are immutable numpy-backed grids in geographic degrees. The
8-bit scaling maps the σ⁰ window [-40 dB, 0 dB] linearly onto 0..255 with
round-half-up; composites are computed in dB and quantised once.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import List, Sequence, Tuple

import numpy as np

from .constants import (
    CHIP_SIZE,
    CHIP_STRIDE,
    DB_MAX,
    DB_MIN,
    DEFAULT_PIXEL_SIZE_DEG,
    TILE_STEP_DEG,
    U8_MAX,
)
from .errors import InvalidValueError, PaddingRequiredError, ShapeError
from .logging_utils import get_logger

logger = get_logger(__name__)

# Pixel coordinates closer than this to an integer snap onto it.
_SNAP_TOLERANCE = 1e-9
DEFAULT_NODATA = -9999.0


class RasterKind(str, Enum):
    DB_FLOAT = "DB_FLOAT"
    U8 = "U8"
    METERS = "METERS"


@dataclass(frozen=True, slots=True)
class GeoTransform:
    """North-up affine transform; rows advance southward."""

    origin_lon: float
    origin_lat: float
    pixel_width: float
    pixel_height: float

    def __post_init__(self) -> None:
        if not (self.pixel_width > 0 and self.pixel_height > 0):
            raise InvalidValueError(
                f"Pixel sizes must be strictly positive, got {self.pixel_width}, {self.pixel_height}"
            )

    def offset(self, col: float, row: float) -> "GeoTransform":
        """Transform of a window starting at (col, row)."""

        lon, lat = pixel_to_geo(self, col, row)
        return GeoTransform(lon, lat, self.pixel_width, self.pixel_height)


def pixel_to_geo(t: GeoTransform, col: float, row: float) -> Tuple[float, float]:
    return (t.origin_lon + col * t.pixel_width, t.origin_lat - row * t.pixel_height)


def _snap(value: float) -> float:
    nearest = round(value)
    return float(nearest) if abs(value - nearest) <= _SNAP_TOLERANCE * max(1.0, abs(value)) else value


def geo_to_pixel(t: GeoTransform, lon: float, lat: float) -> Tuple[float, float]:
    """Inverse of :func:`pixel_to_geo`; near-integer results snap to integers."""

    col = (lon - t.origin_lon) / t.pixel_width
    row = (t.origin_lat - lat) / t.pixel_height
    return (_snap(col), _snap(row))


@dataclass(frozen=True, slots=True, eq=False)
class Raster:
    """Georeferenced grid; ``values`` has shape ``(height, width)``."""

    values: np.ndarray
    transform: GeoTransform
    kind: RasterKind = RasterKind.DB_FLOAT
    nodata: float | None = DEFAULT_NODATA

    def __post_init__(self) -> None:
        values = np.asarray(self.values)
        if values.ndim != 2:
            raise ShapeError(f"Raster values must be 2-D, got shape {values.shape}")
        if self.kind is RasterKind.U8:
            if values.size and (values.min() < 0 or values.max() > U8_MAX):
                raise InvalidValueError("U8 raster values must lie in [0, 255]")
            values = values.astype(np.uint8)
        else:
            values = values.astype(np.float64)
            valid = values if self.nodata is None else values[values != self.nodata]
            if not np.all(np.isfinite(valid)):
                raise InvalidValueError("Float raster values must be finite or nodata")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def width(self) -> int:
        return int(self.values.shape[1])

    @property
    def height(self) -> int:
        return int(self.values.shape[0])

    @property
    def bounds(self) -> Tuple[float, float, float, float]:
        """(min_lon, min_lat, max_lon, max_lat) of the outer pixel edges."""

        min_lon, max_lat = pixel_to_geo(self.transform, 0, 0)
        max_lon, min_lat = pixel_to_geo(self.transform, self.width, self.height)
        return (min_lon, min_lat, max_lon, max_lat)

    def same_grid(self, other: "Raster") -> bool:
        return self.values.shape == other.values.shape and self.transform == other.transform

    def valid_mask(self) -> np.ndarray:
        if self.nodata is None or self.kind is RasterKind.U8:
            return np.ones(self.values.shape, dtype=bool)
        return self.values != self.nodata


def db_to_u8(db: float) -> int:
    """Quantise one σ⁰ value (dB) to an 8-bit level."""

    if not math.isfinite(db):
        raise InvalidValueError(f"Backscatter must be finite, got {db!r}")
    clamped = min(DB_MAX, max(DB_MIN, db))
    return int(math.floor((clamped - DB_MIN) / (DB_MAX - DB_MIN) * U8_MAX + 0.5))


def db_to_u8_array(db: np.ndarray) -> np.ndarray:
    """Vectorised :func:`db_to_u8`; callers must mask non-finite values first."""

    clamped = np.clip(np.asarray(db, dtype=np.float64), DB_MIN, DB_MAX)
    return np.floor((clamped - DB_MIN) / (DB_MAX - DB_MIN) * U8_MAX + 0.5).astype(np.uint8)


def u8_to_db(level: int) -> float:
    return level / U8_MAX * (DB_MAX - DB_MIN) + DB_MIN


def quantize(raster: Raster) -> Raster:
    """Quantise a dB raster; nodata pixels become level 0 (-40 dB)."""

    if raster.kind is not RasterKind.DB_FLOAT:
        raise ShapeError(f"quantize expects a DB_FLOAT raster, got {raster.kind.value}")
    mask = raster.valid_mask()
    filled = np.where(mask, raster.values, DB_MIN)
    return Raster(db_to_u8_array(filled), raster.transform, RasterKind.U8, nodata=None)


def median_composite(stack: Sequence[Raster]) -> Raster:
    """Per-pixel median of non-nodata values over a co-registered stack."""

    if not stack:
        raise ShapeError("Cannot composite an empty stack")
    first = stack[0]
    for index, scene in enumerate(stack):
        if scene.kind is not RasterKind.DB_FLOAT:
            raise ShapeError(f"Scene {index} is {scene.kind.value}, expected DB_FLOAT")
        if not first.same_grid(scene):
            raise ShapeError(f"Scene {index} does not share the grid of scene 0")

    nodata = first.nodata if first.nodata is not None else DEFAULT_NODATA
    cube = np.stack([np.where(s.valid_mask(), s.values, np.nan) for s in stack])
    if np.isnan(cube).any():
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", category=RuntimeWarning)  # all-NaN pixels
            composite = np.nanmedian(cube, axis=0)
    else:
        composite = np.median(cube, axis=0)
    composite = np.where(np.isnan(composite), nodata, composite)
    return Raster(composite, first.transform, RasterKind.DB_FLOAT, nodata=nodata)


@dataclass(frozen=True, slots=True)
class ChipWindow:
    """A square model input window inside a tile."""

    tile_id: str
    col0: int
    row0: int
    size: int = CHIP_SIZE
    tile_transform: GeoTransform | None = None
    tile_width: int | None = None
    tile_height: int | None = None

    @property
    def name(self) -> str:
        return f"{self.tile_id}_c{self.col0}_r{self.row0}"


def _axis_offsets(length: int, size: int, stride: int) -> List[int]:
    offsets = list(range(0, length - size + 1, stride))
    if offsets[-1] + size < length:
        offsets.append(length - size)
    return offsets


def chip_grid(
    tile_width: int,
    tile_height: int,
    *,
    tile_id: str = "",
    transform: GeoTransform | None = None,
    size: int = CHIP_SIZE,
    stride: int = CHIP_STRIDE,
) -> List[ChipWindow]:
    """Overlapping chip windows covering a tile, row-major order."""

    if tile_width < size or tile_height < size:
        raise PaddingRequiredError(
            f"Tile {tile_id or '?'} is {tile_width}x{tile_height} px; pad to at least {size}x{size}"
        )
    return [
        ChipWindow(tile_id, col0, row0, size, transform, tile_width, tile_height)
        for row0 in _axis_offsets(tile_height, size, stride)
        for col0 in _axis_offsets(tile_width, size, stride)
    ]


def pad_to_chip(raster: Raster, size: int = CHIP_SIZE) -> Raster:
    """Zero-pad a U8 raster on the right/bottom so both sides reach ``size``."""

    if raster.kind is not RasterKind.U8:
        raise ShapeError("Only quantised rasters are padded")
    pad_rows = max(0, size - raster.height)
    pad_cols = max(0, size - raster.width)
    if not (pad_rows or pad_cols):
        return raster
    logger.debug("Padding %dx%d raster by (%d cols, %d rows)", raster.width, raster.height, pad_cols, pad_rows)
    padded = np.pad(raster.values, ((0, pad_rows), (0, pad_cols)), constant_values=0)
    return Raster(padded, raster.transform, RasterKind.U8, nodata=None)


def extract_chip(raster: Raster, window: ChipWindow) -> Raster:
    rows = slice(window.row0, window.row0 + window.size)
    cols = slice(window.col0, window.col0 + window.size)
    sub = raster.values[rows, cols]
    if sub.shape != (window.size, window.size):
        raise ShapeError(f"Window {window.name} exceeds the raster extent")
    return Raster(sub, raster.transform.offset(window.col0, window.row0), raster.kind, raster.nodata)


@dataclass(frozen=True, slots=True)
class TileSpec:
    tile_id: str
    transform: GeoTransform
    width: int
    height: int


def tile_grid(
    min_lon: float,
    min_lat: float,
    max_lon: float,
    max_lat: float,
    *,
    step: float = TILE_STEP_DEG,
    pixel_size: float = DEFAULT_PIXEL_SIZE_DEG,
) -> List[TileSpec]:
    """Tile a study area into ``step``-degree squares, north-west first."""

    if not (min_lon < max_lon and min_lat < max_lat):
        raise InvalidValueError("Study area bounds are degenerate")
    n_cols = math.ceil(round((max_lon - min_lon) / step, 9))
    n_rows = math.ceil(round((max_lat - min_lat) / step, 9))
    side = int(round(step / pixel_size))
    tiles = []
    for row in range(n_rows):
        for col in range(n_cols):
            transform = GeoTransform(min_lon + col * step, max_lat - row * step, pixel_size, pixel_size)
            tiles.append(TileSpec(f"T{col:03d}{row:03d}", transform, side, side))
    return tiles


__all__ = [
    "ChipWindow",
    "GeoTransform",
    "Raster",
    "RasterKind",
    "TileSpec",
    "chip_grid",
    "db_to_u8",
    "db_to_u8_array",
    "extract_chip",
    "geo_to_pixel",
    "median_composite",
    "pad_to_chip",
    "pixel_to_geo",
    "quantize",
    "tile_grid",
    "u8_to_db",
]
