"""Canonical GeoJSON reading and writing.

Geometries are read through ``shapely.geometry.shape``; collections are
written with sorted keys and full float precision so a read → write cycle
reproduces the file byte for byte.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Union

from shapely.geometry import shape

from .errors import InputError, LayerLoadError
from .geometry import GeoBox
from .logging_utils import get_logger

logger = get_logger(__name__)

PathLike = Union[str, Path]
Feature = Dict[str, Any]


def box_geometry(box: GeoBox) -> Dict[str, Any]:
    x0, y0, x1, y1 = box.as_tuple()
    ring = [[x0, y0], [x1, y0], [x1, y1], [x0, y1], [x0, y0]]
    return {"type": "Polygon", "coordinates": [ring]}


def point_geometry(lon: float, lat: float) -> Dict[str, Any]:
    return {"type": "Point", "coordinates": [lon, lat]}


def box_from_geometry(geometry: Mapping[str, Any]) -> GeoBox:
    """Bounding box of any GeoJSON geometry."""

    return GeoBox(*shape(geometry).bounds)


def make_feature(geometry: Optional[Mapping[str, Any]], properties: Mapping[str, Any]) -> Feature:
    return {"type": "Feature", "geometry": geometry, "properties": dict(properties)}


def dumps_collection(features: Iterable[Feature]) -> str:
    payload = {"type": "FeatureCollection", "features": list(features)}
    return json.dumps(payload, sort_keys=True, ensure_ascii=False, allow_nan=False) + "\n"


def write_collection(features: Iterable[Feature], path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_collection(features), encoding="utf-8")
    return path


def loads_features(text: str, *, source: str = "<geojson>", error: type[InputError] = InputError) -> List[Feature]:
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise error(f"{source}: invalid JSON ({exc})") from exc
    if not isinstance(payload, dict) or payload.get("type") != "FeatureCollection":
        raise error(f"{source}: expected a GeoJSON FeatureCollection")
    features = payload.get("features")
    if not isinstance(features, list):
        raise error(f"{source}: 'features' must be a list")
    return features


def read_features(path: PathLike, *, error: type[InputError] = InputError) -> List[Feature]:
    path = Path(path)
    if not path.exists():
        raise error(f"GeoJSON file not found: {path}")
    features = loads_features(path.read_text(encoding="utf-8"), source=str(path), error=error)
    logger.debug("Read %d features from %s", len(features), path)
    return features


def polygon_rings(geometry: Mapping[str, Any], *, context: str) -> List[List[List[List[float]]]]:
    """Return the ring lists of each polygon part of a (Multi)Polygon geometry."""

    kind = geometry.get("type") if isinstance(geometry, Mapping) else None
    coords = geometry.get("coordinates") if isinstance(geometry, Mapping) else None
    if kind == "Polygon":
        return [coords]
    if kind == "MultiPolygon":
        return list(coords)
    raise LayerLoadError(f"{context}: expected Polygon or MultiPolygon geometry, got {kind!r}")


__all__ = [
    "box_from_geometry",
    "box_geometry",
    "dumps_collection",
    "loads_features",
    "make_feature",
    "point_geometry",
    "polygon_rings",
    "read_features",
    "write_collection",
]
