"""Planar box math, polygon containment and great-circle distances."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from shapely.geometry import Point, Polygon, box as shapely_box
from shapely.geometry.base import BaseGeometry
from shapely.prepared import prep
from shapely.strtree import STRtree

from .constants import EARTH_RADIUS_KM, METERS_PER_DEG_LAT, METERS_PER_DEG_LON_EQUATOR
from .errors import InvalidValueError, LayerLoadError

LonLat = Tuple[float, float]
Ring = Sequence[LonLat]


@dataclass(frozen=True, slots=True)
class GeoBox:
    """Axis-aligned box in geographic degrees."""

    min_lon: float
    min_lat: float
    max_lon: float
    max_lat: float

    def __post_init__(self) -> None:
        values = (self.min_lon, self.min_lat, self.max_lon, self.max_lat)
        if not all(math.isfinite(v) for v in values):
            raise InvalidValueError(f"Box coordinates must be finite: {values}")
        if not (self.min_lon < self.max_lon and self.min_lat < self.max_lat):
            raise InvalidValueError(f"Degenerate box: {values}")

    @property
    def center(self) -> LonLat:
        return ((self.min_lon + self.max_lon) / 2.0, (self.min_lat + self.max_lat) / 2.0)

    @property
    def area(self) -> float:
        return (self.max_lon - self.min_lon) * (self.max_lat - self.min_lat)

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return (self.min_lon, self.min_lat, self.max_lon, self.max_lat)

    def contains_point(self, lon: float, lat: float) -> bool:
        return self.min_lon <= lon <= self.max_lon and self.min_lat <= lat <= self.max_lat

    def translate(self, dlon: float, dlat: float) -> "GeoBox":
        return GeoBox(self.min_lon + dlon, self.min_lat + dlat, self.max_lon + dlon, self.max_lat + dlat)

    def to_shapely(self) -> Polygon:
        return shapely_box(self.min_lon, self.min_lat, self.max_lon, self.max_lat)


def iou(a: GeoBox, b: GeoBox) -> float:
    """Intersection over union in planar degree² arithmetic."""

    inter_w = min(a.max_lon, b.max_lon) - max(a.min_lon, b.min_lon)
    inter_h = min(a.max_lat, b.max_lat) - max(a.min_lat, b.min_lat)
    if inter_w <= 0.0 or inter_h <= 0.0:
        return 0.0
    inter = inter_w * inter_h
    union = a.area + b.area - inter
    return min(1.0, inter / union)


def iou_matrix(boxes: Sequence[GeoBox], others: Optional[Sequence[GeoBox]] = None) -> np.ndarray:
    """IoU of every box in ``boxes`` against every box in ``others`` (default: itself)."""

    others = boxes if others is None else others
    if not boxes or not others:
        return np.zeros((len(boxes), len(others)))
    a = np.array([b.as_tuple() for b in boxes], dtype=float)
    b = np.array([o.as_tuple() for o in others], dtype=float)
    iw = np.minimum(a[:, 2, None], b[None, :, 2]) - np.maximum(a[:, 0, None], b[None, :, 0])
    ih = np.minimum(a[:, 3, None], b[None, :, 3]) - np.maximum(a[:, 1, None], b[None, :, 1])
    inter = np.clip(iw, 0.0, None) * np.clip(ih, 0.0, None)
    area_a = (a[:, 2] - a[:, 0]) * (a[:, 3] - a[:, 1])
    area_b = (b[:, 2] - b[:, 0]) * (b[:, 3] - b[:, 1])
    union = area_a[:, None] + area_b[None, :] - inter
    return np.minimum(1.0, inter / union)


def box_area_ha(b: GeoBox) -> float:
    """Equirectangular bounding-box area in hectares."""

    mid_lat = math.radians((b.min_lat + b.max_lat) / 2.0)
    width_m = (b.max_lon - b.min_lon) * METERS_PER_DEG_LON_EQUATOR * math.cos(mid_lat)
    height_m = (b.max_lat - b.min_lat) * METERS_PER_DEG_LAT
    return width_m * height_m / 10_000.0


def box_from_area(lon: float, lat: float, area_ha: float) -> GeoBox:
    """Square box of ``area_ha`` centred on (lon, lat); inverse of :func:`box_area_ha`."""

    side_m = math.sqrt(max(area_ha, 1e-9) * 10_000.0)
    half_lon = side_m / (METERS_PER_DEG_LON_EQUATOR * math.cos(math.radians(lat))) / 2.0
    half_lat = side_m / METERS_PER_DEG_LAT / 2.0
    return GeoBox(lon - half_lon, lat - half_lat, lon + half_lon, lat + half_lat)


def haversine_km(lon1, lat1, lon2, lat2, radius_km: float = EARTH_RADIUS_KM):
    """Great-circle distance; broadcasts over numpy arrays."""

    lon1, lat1, lon2, lat2 = (np.radians(np.asarray(v, dtype=float)) for v in (lon1, lat1, lon2, lat2))
    dlat = lat2 - lat1
    dlon = lon2 - lon1
    a = np.sin(dlat / 2.0) ** 2 + np.cos(lat1) * np.cos(lat2) * np.sin(dlon / 2.0) ** 2
    result = 2.0 * radius_km * np.arcsin(np.sqrt(np.clip(a, 0.0, 1.0)))
    return float(result) if np.ndim(result) == 0 else result


def validate_ring(ring: Ring, *, context: str) -> List[LonLat]:
    """Return ``ring`` as a list of tuples or raise :class:`LayerLoadError`."""

    points = [(float(x), float(y)) for x, y, *_ in ring]
    if len(points) < 4:
        raise LayerLoadError(f"{context}: ring has {len(points)} vertices, need at least 4")
    if points[0] != points[-1]:
        raise LayerLoadError(f"{context}: ring is not closed (first {points[0]} != last {points[-1]})")
    return points


def polygon_from_rings(rings: Sequence[Ring], *, context: str) -> Polygon:
    """Build a polygon (first ring = shell, others = holes) after validation."""

    if not rings:
        raise LayerLoadError(f"{context}: polygon has no rings")
    checked = [validate_ring(r, context=context) for r in rings]
    return Polygon(checked[0], checked[1:])


class PolygonIndex:
    """Ordered polygons with boundary-inclusive point containment."""

    def __init__(self, polygons: Iterable[BaseGeometry]):
        self._polygons = list(polygons)
        self._prepared = [prep(p) for p in self._polygons]
        self._tree = STRtree(self._polygons) if self._polygons else None

    def __len__(self) -> int:
        return len(self._polygons)

    def first_containing(self, lon: float, lat: float) -> int | None:
        """Index of the first polygon covering the point, boundary included."""

        if self._tree is None:
            return None
        pt = Point(lon, lat)
        for index in sorted(int(i) for i in self._tree.query(pt)):
            if self._prepared[index].covers(pt):
                return index
        return None

    def any_contains(self, lon: float, lat: float) -> bool:
        return self.first_containing(lon, lat) is not None


__all__ = [
    "GeoBox",
    "LonLat",
    "PolygonIndex",
    "box_area_ha",
    "box_from_area",
    "haversine_km",
    "iou",
    "iou_matrix",
    "polygon_from_rings",
    "validate_ring",
]
