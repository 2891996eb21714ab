"""Spatial enrichment of platform tracks.

Each track centre is joined with maritime zones (EEZ and study region),
measured against a densified coastline, sampled on a bathymetry grid, and
its representative box converted into hectares.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .asciigrid import read_ascii_grid
from .constants import DEFAULT_MAX_SEG_KM, EARTH_RADIUS_KM, NONE, REGION_ALIASES, REGION_CODES
from .errors import FootprintError, InputError, InvalidValueError, LayerLoadError
from .geojson_io import make_feature, point_geometry, polygon_rings, read_features, write_collection
from .geometry import LonLat, PolygonIndex, box_area_ha, haversine_km, polygon_from_rings
from .logging_utils import get_logger
from .raster import Raster, RasterKind, geo_to_pixel
from .tracklink import PlatformTrack, track_from_properties, track_properties

logger = get_logger(__name__)

PathLike = Union[str, Path]

_EEZ_CODE_KEYS = ("country_code", "ISO_SOV1", "ISO_TER1", "iso", "ISO")
_NAME_KEYS = ("name", "NAME", "GEONAME", "region", "REGION")


class ZoneKind(str, Enum):
    EEZ = "EEZ"
    REGION = "REGION"


@dataclass(frozen=True)
class Zone:
    name: str
    code: Optional[str]
    polygons: Tuple[Tuple[Tuple[LonLat, ...], ...], ...]
    # file position of each polygon; empty means the zone's own position
    ranks: Tuple[int, ...] = ()


@dataclass
class ZoneLayer:
    """Zones whose polygons are tried in rank order; the first covering polygon wins."""

    zones: List[Zone]
    kind: ZoneKind
    _index: Optional[PolygonIndex] = field(default=None, init=False, repr=False, compare=False)
    _owners: List[int] = field(default_factory=list, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        names = [z.name for z in self.zones]
        duplicates = sorted({n for n in names if names.count(n) > 1})
        if duplicates:
            raise LayerLoadError(f"{self.kind.value} layer has duplicate zone names: {duplicates}")
        for zone in self.zones:
            if zone.ranks and len(zone.ranks) != len(zone.polygons):
                raise LayerLoadError(f"zone {zone.name!r} has {len(zone.ranks)} ranks for {len(zone.polygons)} polygons")

    def index(self) -> PolygonIndex:
        if self._index is None:
            entries = []
            for position, zone in enumerate(self.zones):
                ranks = zone.ranks or (position,) * len(zone.polygons)
                for rank, rings in zip(ranks, zone.polygons):
                    entries.append((rank, position, polygon_from_rings(rings, context=f"zone {zone.name!r}")))
            entries.sort(key=lambda entry: entry[:2])
            self._owners = [position for _, position, _ in entries]
            self._index = PolygonIndex([geom for _, _, geom in entries])
        return self._index

    def zone_at(self, lon: float, lat: float) -> Optional[Zone]:
        hit = self.index().first_containing(lon, lat)
        return None if hit is None else self.zones[self._owners[hit]]


def normalize_region(name: str) -> str:
    """Map a region name or alias onto NS/PG/GOM."""

    text = name.strip()
    if text.upper() in REGION_CODES:
        return text.upper()
    try:
        return REGION_ALIASES[text.lower()]
    except KeyError:
        raise LayerLoadError(f"Unknown region name {name!r}; expected one of {', '.join(REGION_CODES)}") from None


def _first_property(props: dict, keys: Sequence[str]) -> Optional[str]:
    for key in keys:
        value = props.get(key)
        if value not in (None, ""):
            return str(value)
    return None


def load_zone_layer(path: PathLike, kind: Union[ZoneKind, str]) -> ZoneLayer:
    """Load EEZ or region polygons from a GeoJSON FeatureCollection."""

    kind = ZoneKind(kind)
    features = read_features(path, error=LayerLoadError)
    merged: Dict[str, Tuple[Optional[str], list, list]] = {}
    for position, feature in enumerate(features):
        props = feature.get("properties") or {}
        code = _first_property(props, _EEZ_CODE_KEYS) if kind is ZoneKind.EEZ else None
        name = _first_property(props, _NAME_KEYS) or code
        if name is None:
            raise LayerLoadError(f"{path}: feature {position} has no zone name")
        if kind is ZoneKind.REGION:
            name = normalize_region(name)
        parts = [
            tuple(tuple((float(x), float(y)) for x, y, *_ in ring) for ring in rings)
            for rings in polygon_rings(feature.get("geometry") or {}, context=f"{path} feature {name!r}")
        ]
        # features sharing a name merge into one zone; each polygon keeps its file position
        previous_code, previous_parts, ranks = merged.get(name, (code, [], []))
        merged[name] = (previous_code or code, previous_parts + parts, ranks + [position] * len(parts))

    layer = ZoneLayer(
        [Zone(name, code, tuple(parts), tuple(ranks)) for name, (code, parts, ranks) in merged.items()], kind
    )
    layer.index()
    logger.info("Loaded %s layer %s with %d zones", kind.value, path, len(layer.zones))
    return layer


def assign_zone(p: LonLat, layer: ZoneLayer) -> str:
    zone = layer.zone_at(*p)
    return NONE if zone is None else zone.name


def _unit_vectors(lon: np.ndarray, lat: np.ndarray) -> np.ndarray:
    lon, lat = np.radians(lon), np.radians(lat)
    return np.stack([np.cos(lat) * np.cos(lon), np.cos(lat) * np.sin(lon), np.sin(lat)], axis=-1)


def _densify_chain(chain: Sequence[LonLat], max_seg_km: float) -> np.ndarray:
    """Insert great-circle points so consecutive vertices are at most ``max_seg_km`` apart."""

    pts = np.asarray(chain, dtype=float)
    out = [pts[:1]]
    for a, b in zip(pts[:-1], pts[1:]):
        length = haversine_km(a[0], a[1], b[0], b[1])
        steps = max(1, math.ceil(length / max_seg_km))
        if steps == 1:
            out.append(b[None, :])
            continue
        va, vb = _unit_vectors(a[:1], a[1:]), _unit_vectors(b[:1], b[1:])
        omega = length / EARTH_RADIUS_KM
        f = np.arange(1, steps + 1, dtype=float)[:, None] / steps
        v = (np.sin((1.0 - f) * omega) * va + np.sin(f * omega) * vb) / math.sin(omega)
        lat = np.degrees(np.arcsin(np.clip(v[:, 2], -1.0, 1.0)))
        lon = np.degrees(np.arctan2(v[:, 1], v[:, 0]))
        lon[-1], lat[-1] = b
        out.append(np.column_stack([lon, lat]))
    return np.concatenate(out)


@dataclass(frozen=True, eq=False)
class Coastline:
    """Coastline vertex chains after densification."""

    polylines: Tuple[np.ndarray, ...]
    max_seg_km: float = DEFAULT_MAX_SEG_KM
    vertices: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if not self.polylines:
            raise LayerLoadError("Coastline has no polylines")
        for chain in self.polylines:
            if len(chain) < 2:
                raise LayerLoadError("Coastline chains need at least 2 vertices")
        object.__setattr__(self, "vertices", np.concatenate(self.polylines))

    @classmethod
    def from_chains(cls, chains: Iterable[Sequence[LonLat]], max_seg_km: float = DEFAULT_MAX_SEG_KM) -> "Coastline":
        if not max_seg_km > 0:
            raise InvalidValueError(f"max_seg_km must be positive, got {max_seg_km}")
        chains = [list(c) for c in chains]
        for chain in chains:
            if len(chain) < 2:
                raise LayerLoadError("Coastline chains need at least 2 vertices")
        return cls(tuple(_densify_chain(c, max_seg_km) for c in chains), max_seg_km)


def _geometry_chains(geometry: dict, context: str) -> List[List[LonLat]]:
    kind = geometry.get("type")
    coords = geometry.get("coordinates") or []
    if kind == "LineString":
        lines = [coords]
    elif kind == "MultiLineString":
        lines = list(coords)
    elif kind in ("Polygon", "MultiPolygon"):
        lines = [ring for rings in polygon_rings(geometry, context=context) for ring in rings]
    else:
        raise LayerLoadError(f"{context}: unsupported coastline geometry {kind!r}")
    return [[(float(x), float(y)) for x, y, *_ in line] for line in lines]


def load_coastline(path: PathLike, max_seg_km: float = DEFAULT_MAX_SEG_KM) -> Coastline:
    """Load (Multi)LineString or polygon-outline coastlines from GeoJSON."""

    chains: List[List[LonLat]] = []
    for position, feature in enumerate(read_features(path, error=LayerLoadError)):
        chains.extend(_geometry_chains(feature.get("geometry") or {}, f"{path} feature {position}"))
    coast = Coastline.from_chains(chains, max_seg_km)
    logger.info("Loaded coastline %s: %d chains, %d vertices after densification", path, len(chains), len(coast.vertices))
    return coast


def coast_distance(p: LonLat, coast: Coastline) -> float:
    """Minimum haversine distance (km) from ``p`` to any coastline vertex."""

    lon, lat = p
    distances = haversine_km(lon, lat, coast.vertices[:, 0], coast.vertices[:, 1])
    return float(np.min(distances))


def depth_at(p: LonLat, bathy: Raster) -> Optional[float]:
    """Depth in metres at ``p``; nodata cells fall back to their 3x3 mean."""

    min_lon, min_lat, max_lon, max_lat = bathy.bounds
    lon, lat = p
    if not (min_lon <= lon <= max_lon and min_lat <= lat <= max_lat):
        raise FootprintError(f"Point ({lon}, {lat}) lies outside the bathymetry footprint")
    col, row = geo_to_pixel(bathy.transform, lon, lat)
    c = min(bathy.width - 1, int(math.floor(col)))
    r = min(bathy.height - 1, int(math.floor(row)))

    valid = bathy.valid_mask()
    if valid[r, c]:
        return float(bathy.values[r, c])
    r0, r1 = max(0, r - 1), min(bathy.height, r + 2)
    c0, c1 = max(0, c - 1), min(bathy.width, c + 2)
    window = bathy.values[r0:r1, c0:c1][valid[r0:r1, c0:c1]]
    if window.size == 0:
        return None
    return float(window.mean())


def load_bathymetry(path: PathLike) -> Raster:
    return read_ascii_grid(path, kind=RasterKind.METERS)


@dataclass(frozen=True)
class EnrichedPlatform:
    track: PlatformTrack
    region: str
    eez: str
    coast_km: Optional[float]
    depth_m: Optional[float]
    area_ha: float

    def __post_init__(self) -> None:
        if self.coast_km is not None and self.coast_km < 0:
            raise InvalidValueError(f"{self.platform_id}: negative coast distance {self.coast_km}")
        if not self.area_ha > 0:
            raise InvalidValueError(f"{self.platform_id}: area must be positive, got {self.area_ha}")

    @property
    def platform_id(self) -> str:
        return self.track.platform_id

    @property
    def center(self) -> LonLat:
        return self.track.center


@dataclass
class EnrichLayers:
    regions: Optional[ZoneLayer] = None
    eez: Optional[ZoneLayer] = None
    coast: Optional[Coastline] = None
    bathymetry: Optional[Raster] = None

    @classmethod
    def load(
        cls,
        *,
        region_path: Optional[PathLike] = None,
        eez_path: Optional[PathLike] = None,
        coast_path: Optional[PathLike] = None,
        bathymetry_path: Optional[PathLike] = None,
        max_seg_km: float = DEFAULT_MAX_SEG_KM,
    ) -> "EnrichLayers":
        return cls(
            regions=load_zone_layer(region_path, ZoneKind.REGION) if region_path else None,
            eez=load_zone_layer(eez_path, ZoneKind.EEZ) if eez_path else None,
            coast=load_coastline(coast_path, max_seg_km) if coast_path else None,
            bathymetry=load_bathymetry(bathymetry_path) if bathymetry_path else None,
        )

    def missing(self) -> List[str]:
        names = {"regions": self.regions, "eez": self.eez, "coast": self.coast, "bathymetry": self.bathymetry}
        return [name for name, layer in names.items() if layer is None]


def enrich_track(t: PlatformTrack, layers: EnrichLayers) -> EnrichedPlatform:
    center = t.center
    region = assign_zone(center, layers.regions) if layers.regions is not None else NONE
    eez = NONE
    if layers.eez is not None:
        zone = layers.eez.zone_at(*center)
        if zone is not None:
            eez = zone.code or zone.name
    coast_km = coast_distance(center, layers.coast) if layers.coast is not None else None
    depth_m = None
    if layers.bathymetry is not None:
        try:
            depth_m = depth_at(center, layers.bathymetry)
        except FootprintError:
            depth_m = None
    return EnrichedPlatform(t, region, eez, coast_km, depth_m, box_area_ha(t.rep_box))


def enrich_fleet(tracks: Sequence[PlatformTrack], layers: EnrichLayers) -> List[EnrichedPlatform]:
    """Enrich every track; a missing layer leaves its attribute empty."""

    for name in layers.missing():
        logger.warning("No %s layer supplied; the matching attribute stays empty", name)
    fleet = [enrich_track(t, layers) for t in sorted(tracks, key=lambda t: t.platform_id)]
    if layers.bathymetry is not None:
        no_depth = sum(1 for p in fleet if p.depth_m is None)
        if no_depth:
            logger.warning("%d platforms have no depth (outside the grid or nodata neighbourhood)", no_depth)
    logger.info("Enriched %d platforms", len(fleet))
    return fleet


def write_fleet(fleet: Sequence[EnrichedPlatform], path: PathLike) -> Path:
    """Track features extended with the enrichment attributes, sorted by platform id."""

    features = []
    for p in sorted(fleet, key=lambda p: p.platform_id):
        props = track_properties(p.track)
        props.update(
            {"region": p.region, "eez": p.eez, "coast_km": p.coast_km, "depth_m": p.depth_m, "area_ha": p.area_ha}
        )
        features.append(make_feature(point_geometry(*p.center), props))
    return write_collection(features, path)


def read_fleet(path: PathLike) -> List[EnrichedPlatform]:
    fleet = []
    for feature in read_features(path):
        props = feature.get("properties") or {}
        track = track_from_properties(props)
        try:
            fleet.append(
                EnrichedPlatform(
                    track,
                    str(props["region"]),
                    str(props["eez"]),
                    None if props.get("coast_km") is None else float(props["coast_km"]),
                    None if props.get("depth_m") is None else float(props["depth_m"]),
                    float(props["area_ha"]),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"{path}: invalid enriched platform {track.platform_id}: {exc}") from exc
    return fleet


__all__ = [
    "Coastline",
    "EnrichLayers",
    "EnrichedPlatform",
    "Zone",
    "ZoneKind",
    "ZoneLayer",
    "assign_zone",
    "box_area_ha",
    "coast_distance",
    "depth_at",
    "enrich_fleet",
    "enrich_track",
    "load_bathymetry",
    "load_coastline",
    "load_zone_layer",
    "normalize_region",
    "read_fleet",
    "write_fleet",
]
