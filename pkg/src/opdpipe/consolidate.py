"""Quarter-level postprocessing of detections.

Order of operations per quarter: confidence/backscatter gate, transitive
IoU grouping of chip-overlap duplicates, representative selection by class
consensus, then wind-farm exclusion.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from shapely.strtree import STRtree

from .constants import CONF_MIN, IOU_DEDUP, LEVEL_MIN
from .detections import Detection, DetectionClass, read_detections, write_detections
from .errors import InputError, LayerLoadError
from .geojson_io import polygon_rings, read_features
from .geometry import GeoBox, PolygonIndex, iou, polygon_from_rings
from .logging_utils import get_logger
from .quarters import Quarter
from .unionfind import UnionFind

logger = get_logger(__name__)

PathLike = Union[str, Path]
Ring = List[Tuple[float, float]]


@dataclass
class ExclusionLayer:
    """Named polygons (e.g. offshore wind farms) that veto detections."""

    polygons: List[Tuple[str, List[Ring]]] = field(default_factory=list)
    _index: Optional[PolygonIndex] = field(default=None, init=False, repr=False, compare=False)

    def index(self) -> PolygonIndex:
        if self._index is None:
            self._index = PolygonIndex(
                polygon_from_rings(rings, context=f"exclusion polygon {name!r}") for name, rings in self.polygons
            )
        return self._index

    def covers(self, lon: float, lat: float) -> bool:
        return self.index().any_contains(lon, lat)


def load_exclusion_layer(path: PathLike) -> ExclusionLayer:
    """Load a GeoJSON FeatureCollection of (Multi)Polygons."""

    features = read_features(path, error=LayerLoadError)
    polygons: List[Tuple[str, List[Ring]]] = []
    for position, feature in enumerate(features):
        props = feature.get("properties") or {}
        name = str(props.get("name") or props.get("NAME") or props.get("id") or f"feature-{position}")
        for rings in polygon_rings(feature.get("geometry") or {}, context=f"{path} feature {name!r}"):
            polygons.append((name, [[(float(x), float(y)) for x, y, *_ in ring] for ring in rings]))
    layer = ExclusionLayer(polygons)
    layer.index()  # validate rings eagerly
    logger.info("Loaded exclusion layer %s with %d polygons", path, len(polygons))
    return layer


@dataclass(frozen=True)
class QuarterInventory:
    """Representatives that survived postprocessing for one quarter."""

    quarter: Quarter
    detections: Tuple[Detection, ...]


def gate_detections(
    ds: Sequence[Detection],
    conf_min: float = CONF_MIN,
    level_min: int = LEVEL_MIN,
) -> List[Detection]:
    """Keep detections meeting both inclusive thresholds; order preserved."""

    return [
        d
        for d in ds
        if d.confidence >= conf_min and d.max_level is not None and d.max_level >= level_min
    ]


def overlap_pairs(boxes: Sequence[GeoBox], iou_min: float) -> Iterable[Tuple[int, int]]:
    """Index pairs ``i < j`` with ``iou >= iou_min``, found through an STR-tree."""

    if len(boxes) < 2:
        return []
    geoms = [b.to_shapely() for b in boxes]
    tree = STRtree(geoms)
    left, right = tree.query(geoms, predicate="intersects")
    pairs = []
    for i, j in zip(left.tolist(), right.tolist()):
        if i < j and iou(boxes[i], boxes[j]) >= iou_min:
            pairs.append((i, j))
    return pairs


def group_overlaps(ds: Sequence[Detection], iou_min: float = IOU_DEDUP) -> List[List[Detection]]:
    """Connected components of the ``iou >= iou_min`` graph."""

    ordered = sorted(ds, key=lambda d: d.id)
    forest = UnionFind(range(len(ordered)))
    for i, j in overlap_pairs([d.box for d in ordered], iou_min):
        forest.union(i, j)
    return [[ordered[i] for i in sorted(component)] for component in forest.components()]


def select_representative(cluster: Sequence[Detection]) -> Detection:
    """Majority class wins, then highest confidence within it, then smallest id."""

    if not cluster:
        raise InputError("Cannot select a representative from an empty cluster")
    counts: Dict[DetectionClass, int] = defaultdict(int)
    summed: Dict[DetectionClass, float] = defaultdict(float)
    for d in cluster:
        counts[d.label] += 1
        summed[d.label] += d.confidence
    winner = min(counts, key=lambda c: (-counts[c], -summed[c], c.value))
    members = [d for d in cluster if d.label is winner]
    return min(members, key=lambda d: (-d.confidence, d.id))


def apply_exclusion(ds: Sequence[Detection], layer: Optional[ExclusionLayer]) -> List[Detection]:
    """Drop wind turbines and detections centred inside an exclusion polygon."""

    kept = []
    for d in ds:
        if d.label is DetectionClass.WIND_TURBINE:
            continue
        if layer is not None and layer.covers(*d.box.center):
            continue
        kept.append(d)
    return kept


def consolidate_quarter(
    ds: Sequence[Detection],
    layer: Optional[ExclusionLayer] = None,
    *,
    conf_min: float = CONF_MIN,
    level_min: int = LEVEL_MIN,
    iou_min: float = IOU_DEDUP,
    quarter: Optional[Quarter] = None,
) -> QuarterInventory:
    """Run the full postprocessing chain for one quarter."""

    quarters = {d.quarter for d in ds}
    if quarter is not None:
        quarters.add(quarter)
    if len(quarters) > 1:
        raise InputError(f"Detections span several quarters: {sorted(str(q) for q in quarters)}")
    if not quarters:
        raise InputError("consolidate_quarter needs detections or an explicit quarter")
    (only_quarter,) = quarters

    gated = gate_detections(ds, conf_min, level_min)
    clusters = group_overlaps(gated, iou_min)
    representatives = [select_representative(c) for c in clusters]
    kept = sorted(apply_exclusion(representatives, layer), key=lambda d: d.id)
    logger.info(
        "%s: %d detections -> %d gated -> %d groups -> %d kept",
        only_quarter,
        len(ds),
        len(gated),
        len(clusters),
        len(kept),
    )
    return QuarterInventory(only_quarter, tuple(kept))


def inventory_path(directory: PathLike, quarter: Quarter) -> Path:
    return Path(directory) / f"inventory_{quarter}.geojson"


def write_inventory(inventory: QuarterInventory, directory: PathLike) -> Path:
    return write_detections(inventory.detections, inventory_path(directory, inventory.quarter))


def read_inventory(path: PathLike) -> QuarterInventory:
    path = Path(path)
    detections = read_detections(path)
    stem = path.stem.removeprefix("inventory_")
    quarter = Quarter.parse(stem)
    stray = [d.id for d in detections if d.quarter != quarter]
    if stray:
        raise InputError(f"{path}: detections from other quarters ({stray[:3]}...)")
    return QuarterInventory(quarter, tuple(sorted(detections, key=lambda d: d.id)))


__all__ = [
    "ExclusionLayer",
    "QuarterInventory",
    "apply_exclusion",
    "consolidate_quarter",
    "gate_detections",
    "group_overlaps",
    "inventory_path",
    "load_exclusion_layer",
    "overlap_pairs",
    "read_inventory",
    "select_representative",
    "write_inventory",
]
