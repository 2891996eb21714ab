"""Cross-quarter linking of detections into physical platforms.

Every detection of every quarter is a node; boxes with ``IoU >= 0.1`` are
joined and each connected component becomes one platform. Presence between
the first and last detected quarter is gap-filled.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .constants import IOU_LINK, SHORT_MAX_QUARTERS
from .consolidate import QuarterInventory, overlap_pairs
from .detections import Detection
from .errors import InputError, LinkInputError
from .geojson_io import box_from_geometry, box_geometry, make_feature, point_geometry, read_features, write_collection
from .geometry import GeoBox
from .logging_utils import get_logger
from .quarters import FIRST_QUARTER, LAST_QUARTER, Quarter
from .unionfind import UnionFind

logger = get_logger(__name__)

PathLike = Union[str, Path]


class LifespanCategory(str, Enum):
    SHORT = "SHORT"
    MEDIUM = "MEDIUM"
    FULL_SPAN = "FULL_SPAN"


class PresenceMode(str, Enum):
    FILLED = "filled"
    OBSERVED = "observed"


class InstallStatus(str, Enum):
    ACTIVE = "ACTIVE"
    REMOVED = "REMOVED"


@dataclass(frozen=True, slots=True)
class TrackMember:
    quarter: Quarter
    detection_id: str
    box: GeoBox
    confidence: float


@dataclass(frozen=True)
class PlatformTrack:
    """One physical platform at one site."""

    platform_id: str
    members: Tuple[TrackMember, ...]
    rep_box: GeoBox
    center: Tuple[float, float]
    first: Quarter
    last: Quarter
    observed: Tuple[Quarter, ...]

    @classmethod
    def from_members(cls, members: Sequence[TrackMember]) -> "PlatformTrack":
        if not members:
            raise InputError("A track needs at least one member")
        ordered = tuple(sorted(members, key=lambda m: (m.quarter, m.detection_id)))
        digest = hashlib.sha1("\n".join(sorted(m.detection_id for m in ordered)).encode("utf-8")).hexdigest()
        best = min(ordered, key=lambda m: (-m.confidence, m.quarter, m.detection_id))
        centers = [m.box.center for m in ordered]
        center = (
            sum(c[0] for c in centers) / len(centers),
            sum(c[1] for c in centers) / len(centers),
        )
        observed = tuple(sorted({m.quarter for m in ordered}))
        return cls(
            platform_id=f"P{digest[:12]}",
            members=ordered,
            rep_box=best.box,
            center=center,
            first=observed[0],
            last=observed[-1],
            observed=observed,
        )


def link_quarters(invs: Sequence[QuarterInventory], iou_min: float = IOU_LINK) -> List[PlatformTrack]:
    """Cluster all detections of all quarters into platform tracks."""

    seen: Dict[Quarter, int] = {}
    for inv in invs:
        seen[inv.quarter] = seen.get(inv.quarter, 0) + 1
    duplicates = sorted(str(q) for q, n in seen.items() if n > 1)
    if duplicates:
        raise LinkInputError(f"Quarter inventories given more than once: {', '.join(duplicates)}")

    detections: List[Detection] = sorted((d for inv in invs for d in inv.detections), key=lambda d: d.id)
    forest = UnionFind(range(len(detections)))
    for i, j in overlap_pairs([d.box for d in detections], iou_min):
        forest.union(i, j)

    tracks = [
        PlatformTrack.from_members(
            [TrackMember(detections[i].quarter, detections[i].id, detections[i].box, detections[i].confidence) for i in component]
        )
        for component in forest.components()
    ]
    tracks.sort(key=lambda t: t.platform_id)
    logger.info("Linked %d detections from %d quarters into %d platforms", len(detections), len(invs), len(tracks))
    return tracks


def duration_quarters(t: PlatformTrack) -> int:
    return t.last.index - t.first.index + 1


def lifespan(
    t: PlatformTrack,
    *,
    study_start: Quarter = FIRST_QUARTER,
    study_end: Quarter = LAST_QUARTER,
) -> Tuple[int, LifespanCategory]:
    """Gap-filled duration in quarters and its lifespan category."""

    duration = duration_quarters(t)
    if t.first <= study_start and t.last >= study_end:
        return duration, LifespanCategory.FULL_SPAN
    if duration <= SHORT_MAX_QUARTERS:
        return duration, LifespanCategory.SHORT
    return duration, LifespanCategory.MEDIUM


def presence(t: PlatformTrack, q: Quarter, mode: PresenceMode = PresenceMode.FILLED) -> bool:
    if PresenceMode(mode) is PresenceMode.OBSERVED:
        return q in t.observed
    return t.first <= q <= t.last


def turnover(
    tracks: Sequence[PlatformTrack],
    *,
    study_start: Quarter = FIRST_QUARTER,
    study_end: Quarter = LAST_QUARTER,
) -> Tuple[int, int]:
    """(installed or relocated in, decommissioned or relocated out)."""

    installed = sum(1 for t in tracks if t.first > study_start)
    removed = sum(1 for t in tracks if t.last < study_end)
    return installed, removed


def install_status(t: PlatformTrack, at: Quarter = LAST_QUARTER) -> Tuple[InstallStatus, Optional[Quarter]]:
    """Status at ``at``: active platforms report their installation quarter."""

    if t.first <= at <= t.last:
        return InstallStatus.ACTIVE, t.first
    return InstallStatus.REMOVED, None


def track_properties(t: PlatformTrack) -> dict:
    duration, category = lifespan(t)
    return {
        "platform_id": t.platform_id,
        "first_quarter": str(t.first),
        "last_quarter": str(t.last),
        "duration_quarters": duration,
        "category": category.value,
        "observed": [str(q) for q in t.observed],
        "rep_box": box_geometry(t.rep_box),
        "members": [
            {
                "quarter": str(m.quarter),
                "detection_id": m.detection_id,
                "confidence": m.confidence,
                "box": list(m.box.as_tuple()),
            }
            for m in t.members
        ],
    }


def track_from_properties(props: dict) -> PlatformTrack:
    try:
        members = [
            TrackMember(
                quarter=Quarter.parse(m["quarter"]),
                detection_id=str(m["detection_id"]),
                box=GeoBox(*m["box"]),
                confidence=float(m["confidence"]),
            )
            for m in props["members"]
        ]
        track = PlatformTrack.from_members(members)
        rep_box = box_from_geometry(props["rep_box"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"Invalid track record {props.get('platform_id', '?')}: {exc}") from exc
    if track.platform_id != props.get("platform_id") or rep_box != track.rep_box:
        raise InputError(f"Track {props.get('platform_id')} does not match its members")
    return track


def write_tracks(tracks: Sequence[PlatformTrack], path: PathLike) -> Path:
    """Point features at track centres, sorted by platform id."""

    features = [
        make_feature(point_geometry(*t.center), track_properties(t))
        for t in sorted(tracks, key=lambda t: t.platform_id)
    ]
    return write_collection(features, path)


def read_tracks(path: PathLike) -> List[PlatformTrack]:
    return [track_from_properties(f.get("properties") or {}) for f in read_features(path)]


__all__ = [
    "InstallStatus",
    "LifespanCategory",
    "PlatformTrack",
    "PresenceMode",
    "TrackMember",
    "duration_quarters",
    "install_status",
    "lifespan",
    "link_quarters",
    "presence",
    "read_tracks",
    "track_from_properties",
    "track_properties",
    "turnover",
    "write_tracks",
]
