"""Detection-dataset evaluation: greedy matching and P/R/F1 per region.

Predictions are matched against ground-truth boxes in descending confidence
order (ties: smaller id). Each prediction takes the unmatched truth box of
highest IoU if that IoU reaches ``iou_min``. In point-in-box mode a
prediction matches a truth box containing its centre, nearest truth centre
first.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Protocol, Sequence, Tuple, Union

import numpy as np

from .constants import EVAL_CONF, EVAL_IOU
from .enrich import ZoneLayer
from .errors import ConfigError, InputError
from .geojson_io import box_from_geometry, read_features
from .geometry import GeoBox, iou_matrix
from .logging_utils import get_logger

logger = get_logger(__name__)

PathLike = Union[str, Path]

ALL = "ALL"
# half-width of the box given to point features, in degrees
POINT_HALF_WIDTH_DEG = 1e-7


class Scored(Protocol):
    id: str
    box: GeoBox
    confidence: Optional[float]


@dataclass(frozen=True, slots=True)
class Prediction:
    """A predicted box; ``confidence=None`` marks an unscored external record."""

    id: str
    box: GeoBox
    confidence: Optional[float] = None


@dataclass(frozen=True, slots=True)
class MatchConfig:
    iou_min: float = EVAL_IOU
    conf_min: Optional[float] = EVAL_CONF
    point_in_box: bool = False

    def __post_init__(self) -> None:
        if not 0.0 < self.iou_min <= 1.0:
            raise ConfigError(f"iou_min must lie in (0, 1], got {self.iou_min}")
        if self.conf_min is not None and not 0.0 < self.conf_min <= 1.0:
            raise ConfigError(f"conf_min must lie in (0, 1], got {self.conf_min}")


@dataclass(frozen=True)
class MatchResult:
    tp: int
    fp: int
    fn: int
    pairs: Tuple[Tuple[str, int], ...] = ()


def _score(p: Scored) -> float:
    return 1.0 if p.confidence is None else float(p.confidence)


def keep_predictions(preds: Sequence[Scored], conf_min: Optional[float]) -> List[Scored]:
    """Apply the confidence gate; unscored predictions always pass."""

    if conf_min is None:
        return list(preds)
    return [p for p in preds if p.confidence is None or p.confidence >= conf_min]


def match(preds: Sequence[Scored], truth: Sequence[GeoBox], cfg: MatchConfig = MatchConfig()) -> MatchResult:
    kept = sorted(keep_predictions(preds, cfg.conf_min), key=lambda p: (-_score(p), p.id))
    matched = np.zeros(len(truth), dtype=bool)
    pairs: List[Tuple[str, int]] = []

    if cfg.point_in_box:
        truth_centers = np.array([t.center for t in truth], dtype=float).reshape(-1, 2)
        for p in kept:
            lon, lat = p.box.center
            inside = np.array([t.contains_point(lon, lat) for t in truth], dtype=bool) & ~matched
            if not inside.any():
                continue
            dist = np.hypot(truth_centers[:, 0] - lon, truth_centers[:, 1] - lat)
            dist[~inside] = np.inf
            best = int(np.argmin(dist))
            matched[best] = True
            pairs.append((p.id, best))
    else:
        scores = iou_matrix([p.box for p in kept], list(truth))
        for row, p in enumerate(kept):
            if not len(truth):
                break
            candidates = np.where(matched, -1.0, scores[row])
            best = int(np.argmax(candidates))
            if candidates[best] >= cfg.iou_min:
                matched[best] = True
                pairs.append((p.id, best))

    tp = len(pairs)
    return MatchResult(tp=tp, fp=len(kept) - tp, fn=len(truth) - tp, pairs=tuple(pairs))


@dataclass(frozen=True)
class RegionMetrics:
    region: str
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_counts(cls, region: str, tp: int, fp: int, fn: int) -> "RegionMetrics":
        if tp == fp == fn == 0:
            return cls(region, 0, 0, 0, 1.0, 1.0, 1.0)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        return cls(region, tp, fp, fn, precision, recall, f1)


@dataclass(frozen=True)
class MetricsReport:
    per_region: Mapping[str, RegionMetrics]
    macro_f1: float
    micro: RegionMetrics

    @property
    def micro_f1(self) -> float:
        return self.micro.f1

    def to_dict(self) -> dict:
        return {
            "per_region": {name: asdict(m) for name, m in sorted(self.per_region.items())},
            "macro_f1": self.macro_f1,
            "micro": asdict(self.micro),
        }


def aggregate(per_region: Sequence[Tuple[str, int, int, int]]) -> MetricsReport:
    """Per-region metrics, macro F1 (mean of region F1) and pooled micro metrics."""

    if not per_region:
        raise InputError("aggregate needs at least one region")
    metrics = {name: RegionMetrics.from_counts(name, tp, fp, fn) for name, tp, fp, fn in per_region}
    macro = math.fsum(m.f1 for m in metrics.values()) / len(metrics)
    pooled = RegionMetrics.from_counts(
        ALL,
        sum(m.tp for m in metrics.values()),
        sum(m.fp for m in metrics.values()),
        sum(m.fn for m in metrics.values()),
    )
    return MetricsReport(metrics, macro, pooled)


def _bucket(items, center_of, regions: ZoneLayer) -> Tuple[Dict[str, list], int]:
    buckets: Dict[str, list] = {}
    dropped = 0
    for item in items:
        zone = regions.zone_at(*center_of(item))
        if zone is None:
            dropped += 1
            continue
        buckets.setdefault(zone.name, []).append(item)
    return buckets, dropped


def evaluate(
    preds: Sequence[Scored],
    truth: Sequence[GeoBox],
    cfg: MatchConfig = MatchConfig(),
    regions: Optional[ZoneLayer] = None,
) -> MetricsReport:
    """Match per region (by box centre) and aggregate.

    Without a region layer everything lands in one ``ALL`` bucket. Regions
    holding neither predictions nor truth are left out of the macro mean.
    """

    if regions is None:
        result = match(preds, truth, cfg)
        return aggregate([(ALL, result.tp, result.fp, result.fn)])

    pred_buckets, dropped_preds = _bucket(preds, lambda p: p.box.center, regions)
    truth_buckets, dropped_truth = _bucket(truth, lambda t: t.center, regions)
    if dropped_preds or dropped_truth:
        logger.warning(
            "%d predictions and %d truth boxes lie outside every region and are ignored",
            dropped_preds,
            dropped_truth,
        )
    names = [z.name for z in regions.zones if z.name in pred_buckets or z.name in truth_buckets]
    if not names:
        raise InputError("No prediction or truth box falls inside the region layer")
    rows = []
    for name in names:
        result = match(pred_buckets.get(name, []), truth_buckets.get(name, []), cfg)
        rows.append((name, result.tp, result.fp, result.fn))
    return aggregate(rows)


def compare_datasets(
    datasets: Mapping[str, Sequence[Scored]],
    truth: Sequence[GeoBox],
    cfg: MatchConfig = MatchConfig(),
    regions: Optional[ZoneLayer] = None,
) -> Dict[str, MetricsReport]:
    return {name: evaluate(preds, truth, cfg, regions) for name, preds in sorted(datasets.items())}


def _feature_box(feature: dict) -> GeoBox:
    geometry = feature.get("geometry") or {}
    if geometry.get("type") == "Point":
        lon, lat = (float(v) for v in geometry["coordinates"][:2])
        h = POINT_HALF_WIDTH_DEG
        return GeoBox(lon - h, lat - h, lon + h, lat + h)
    return box_from_geometry(geometry)


def read_predictions(path: PathLike) -> List[Prediction]:
    """Boxes (or points) with optional ``id`` and ``confidence`` properties."""

    preds = []
    for position, feature in enumerate(read_features(path)):
        props = feature.get("properties") or {}
        confidence = props.get("confidence")
        try:
            preds.append(
                Prediction(
                    id=str(props.get("id", f"pred-{position:06d}")),
                    box=_feature_box(feature),
                    confidence=None if confidence is None else float(confidence),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"{path}: invalid prediction feature {position}: {exc}") from exc
    unscored = sum(1 for p in preds if p.confidence is None)
    if unscored:
        logger.info("%s: %d predictions carry no confidence and bypass the gate", path, unscored)
    return preds


def read_truth(path: PathLike) -> List[GeoBox]:
    boxes = []
    for position, feature in enumerate(read_features(path)):
        try:
            boxes.append(_feature_box(feature))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"{path}: invalid truth feature {position}: {exc}") from exc
    return boxes


def write_report(reports: Mapping[str, MetricsReport], path: PathLike, cfg: MatchConfig) -> Path:
    payload = {
        "config": asdict(cfg),
        "datasets": {name: report.to_dict() for name, report in sorted(reports.items())},
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


__all__ = [
    "ALL",
    "MatchConfig",
    "MatchResult",
    "MetricsReport",
    "Prediction",
    "RegionMetrics",
    "aggregate",
    "compare_datasets",
    "evaluate",
    "keep_predictions",
    "match",
    "read_predictions",
    "read_truth",
    "write_report",
]
