"""Fleet statistics: count series, distributions, lifespans and turnover.

Every table comes out as a plot-ready :class:`pandas.DataFrame`;
:func:`write_tables` writes them as CSV next to a ``schema.json`` that
documents their columns.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .constants import NONE, REGION_CODES
from .enrich import EnrichedPlatform
from .errors import EmptySummaryError
from .logging_utils import get_logger
from .quarters import LAST_QUARTER, Quarter, study_quarters
from .schema import write_schema
from .tracklink import LifespanCategory, PresenceMode, duration_quarters, lifespan, presence, turnover

logger = get_logger(__name__)

PathLike = Union[str, Path]

ALL = "ALL"


class GroupBy(str, Enum):
    REGION = "region"
    EEZ = "eez"


class Attribute(str, Enum):
    COAST_KM = "coast_km"
    DEPTH_M = "depth_m"
    AREA_HA = "area_ha"


@dataclass(frozen=True)
class ShareRule:
    """Share of values in ``[lower, upper)``; ``None`` leaves a side open."""

    name: str
    lower: Optional[float] = None
    upper: Optional[float] = None

    def share(self, values: np.ndarray) -> float:
        mask = np.ones(values.shape, dtype=bool)
        if self.lower is not None:
            mask &= values >= self.lower
        if self.upper is not None:
            mask &= values < self.upper
        return float(mask.mean()) if values.size else 0.0


DEFAULT_SHARES: Dict[Attribute, Tuple[ShareRule, ...]] = {
    Attribute.DEPTH_M: (ShareRule("within_100m", lower=-100.0),),
    Attribute.AREA_HA: (
        ShareRule("lt_5ha", upper=5.0),
        ShareRule("5_to_10ha", lower=5.0, upper=10.0),
        ShareRule("ge_10ha", lower=10.0),
    ),
    Attribute.COAST_KM: (ShareRule("ge_200km", lower=200.0),),
}


def _key_func(group_by: GroupBy) -> Callable[[EnrichedPlatform], str]:
    if GroupBy(group_by) is GroupBy.REGION:
        return lambda p: p.region
    return lambda p: p.eez


@dataclass(frozen=True)
class CountSeries:
    key: str
    values: Tuple[int, ...]
    quarters: Tuple[Quarter, ...] = field(default_factory=lambda: tuple(study_quarters()))

    def at(self, q: Quarter) -> int:
        return self.values[self.quarters.index(q)]


def quarterly_counts(
    fleet: Sequence[EnrichedPlatform],
    group_by: GroupBy = GroupBy.REGION,
    *,
    mode: PresenceMode = PresenceMode.FILLED,
    quarters: Optional[Sequence[Quarter]] = None,
) -> List[CountSeries]:
    """Platforms present per quarter and key.

    Region series always include NS, PG and GOM (plus NONE when some
    platform lies outside every region). EEZ series cover the EEZs that
    occur; platforms outside every EEZ are left out.
    """

    group_by = GroupBy(group_by)
    quarters = tuple(quarters or study_quarters())
    key_of = _key_func(group_by)
    keys = {key_of(p) for p in fleet}
    if group_by is GroupBy.REGION:
        keys |= set(REGION_CODES)
    else:
        keys.discard(NONE)

    counts = {key: np.zeros(len(quarters), dtype=np.int64) for key in keys}
    for p in fleet:
        key = key_of(p)
        if key not in counts:
            continue
        counts[key] += np.array([presence(p.track, q, mode) for q in quarters], dtype=np.int64)
    return [CountSeries(key, tuple(int(v) for v in counts[key]), quarters) for key in sorted(counts)]


def counts_frame(series: Sequence[CountSeries]) -> pd.DataFrame:
    rows = [
        {"quarter": str(q), "key": s.key, "count": v}
        for s in series
        for q, v in zip(s.quarters, s.values)
    ]
    return pd.DataFrame(rows, columns=["quarter", "key", "count"])


@dataclass(frozen=True)
class RegionStats:
    n: int
    mean: float
    median: float
    p10: float
    p25: float
    p75: float
    p90: float
    shares: Mapping[str, float]


@dataclass(frozen=True)
class DistributionSummary:
    attribute: Attribute
    per_region: Mapping[str, RegionStats]

    def to_frame(self) -> pd.DataFrame:
        share_names = sorted({name for stats in self.per_region.values() for name in stats.shares})
        rows = []
        for region in sorted(self.per_region, key=lambda r: (r == ALL, r)):
            stats = self.per_region[region]
            row = {
                "region": region,
                "n": stats.n,
                "mean": stats.mean,
                "median": stats.median,
                "p10": stats.p10,
                "p25": stats.p25,
                "p75": stats.p75,
                "p90": stats.p90,
            }
            row.update({f"share_{name}": stats.shares.get(name, 0.0) for name in share_names})
            rows.append(row)
        return pd.DataFrame(rows)


def _stats(values: np.ndarray, rules: Sequence[ShareRule]) -> RegionStats:
    p10, p25, median, p75, p90 = (float(v) for v in np.percentile(values, [10, 25, 50, 75, 90]))
    return RegionStats(
        n=int(values.size),
        mean=float(values.mean()),
        median=median,
        p10=p10,
        p25=p25,
        p75=p75,
        p90=p90,
        shares={rule.name: rule.share(values) for rule in rules},
    )


def distribution_summary(
    fleet: Sequence[EnrichedPlatform],
    attribute: Attribute,
    *,
    shares: Optional[Sequence[ShareRule]] = None,
) -> DistributionSummary:
    """Percentiles (linear interpolation) and threshold shares per region and overall."""

    attribute = Attribute(attribute)
    rules = tuple(DEFAULT_SHARES[attribute] if shares is None else shares)
    by_region: Dict[str, List[float]] = defaultdict(list)
    for p in fleet:
        value = getattr(p, attribute.value)
        if value is not None:
            by_region[p.region].append(float(value))
    if not by_region:
        raise EmptySummaryError(f"No platform carries {attribute.value}")

    per_region = {region: _stats(np.asarray(values), rules) for region, values in by_region.items()}
    per_region[ALL] = _stats(np.asarray([v for values in by_region.values() for v in values]), rules)
    return DistributionSummary(attribute, per_region)


def lifespan_breakdown(
    fleet: Sequence[EnrichedPlatform],
    region: Optional[str] = None,
) -> Dict[LifespanCategory, float]:
    """Share of each lifespan category, optionally restricted to one region.

    Shares sum to 1; a region without platforms gives an empty mapping.
    """

    members = [p for p in fleet if region is None or region == ALL or p.region == region]
    if not members:
        return {}
    counts = Counter(lifespan(p.track)[1] for p in members)
    return {c: counts[c] / len(members) for c in LifespanCategory}


def lifespan_frame(fleet: Sequence[EnrichedPlatform]) -> pd.DataFrame:
    regions = sorted({p.region for p in fleet} | set(REGION_CODES)) + [ALL]
    rows = []
    for region in regions:
        members = [p for p in fleet if region == ALL or p.region == region]
        counts = Counter(lifespan(p.track)[1] for p in members)
        for category, share in lifespan_breakdown(members).items():
            rows.append({"region": region, "category": category.value, "count": counts[category], "share": share})
    return pd.DataFrame(rows, columns=["region", "category", "count", "share"])


def snapshot_counts(
    fleet: Sequence[EnrichedPlatform],
    at: Quarter = LAST_QUARTER,
    group_by: GroupBy = GroupBy.REGION,
    groups: Optional[Mapping[str, Sequence[str]]] = None,
    *,
    mode: PresenceMode = PresenceMode.FILLED,
) -> Dict[str, int]:
    """Platforms present at ``at`` per key; ``groups`` folds member keys into one."""

    key_of = _key_func(group_by)
    folded: Dict[str, str] = {}
    for group, members in (groups or {}).items():
        for member in members:
            folded[member] = group
    counts: Counter = Counter()
    for p in fleet:
        if presence(p.track, at, mode):
            key = key_of(p)
            counts[folded.get(key, key)] += 1
    return dict(sorted(counts.items()))


def turnover_by_region(fleet: Sequence[EnrichedPlatform]) -> Dict[str, Tuple[int, int]]:
    """(installed, removed) per region and over the whole fleet."""

    regions = sorted({p.region for p in fleet} | set(REGION_CODES))
    result = {region: turnover([p.track for p in fleet if p.region == region]) for region in regions}
    result[ALL] = turnover([p.track for p in fleet])
    return result


@dataclass(frozen=True)
class Cohort:
    year: int
    count: int
    mean_duration: float
    median_duration: float


def cohort_durations(fleet: Sequence[EnrichedPlatform]) -> List[Cohort]:
    """Gap-filled duration statistics grouped by the year of first detection."""

    by_year: Dict[int, List[int]] = defaultdict(list)
    for p in fleet:
        by_year[p.track.first.year].append(duration_quarters(p.track))
    return [
        Cohort(year, len(durations), float(np.mean(durations)), float(np.median(durations)))
        for year, durations in sorted(by_year.items())
    ]


def presence_matrix(
    fleet: Sequence[EnrichedPlatform],
    *,
    mode: PresenceMode = PresenceMode.FILLED,
    quarters: Optional[Sequence[Quarter]] = None,
) -> pd.DataFrame:
    """0/1 presence per platform (rows) and quarter (columns)."""

    quarters = list(quarters or study_quarters())
    ordered = sorted(fleet, key=lambda p: p.platform_id)
    data = [[int(presence(p.track, q, mode)) for q in quarters] for p in ordered]
    frame = pd.DataFrame(data, columns=[str(q) for q in quarters], dtype=np.int64)
    frame.insert(0, "platform_id", [p.platform_id for p in ordered])
    return frame


def write_tables(
    fleet: Sequence[EnrichedPlatform],
    out_dir: PathLike,
    *,
    mode: PresenceMode = PresenceMode.FILLED,
    groups: Optional[Mapping[str, Sequence[str]]] = None,
    snapshot: Quarter = LAST_QUARTER,
) -> List[Path]:
    """Write every statistics table as CSV plus ``schema.json``."""

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: List[Path] = []

    def _csv(frame: pd.DataFrame, name: str) -> None:
        path = out_dir / name
        frame.to_csv(path, index=False, lineterminator="\n")
        written.append(path)

    for group_by in GroupBy:
        _csv(counts_frame(quarterly_counts(fleet, group_by, mode=mode)), f"counts_{group_by.value}.csv")

    for attribute in Attribute:
        try:
            _csv(distribution_summary(fleet, attribute).to_frame(), f"dist_{attribute.value}.csv")
        except EmptySummaryError:
            logger.warning("Skipping dist_%s.csv: no platform carries %s", attribute.value, attribute.value)

    _csv(lifespan_frame(fleet), "lifespan.csv")
    _csv(
        pd.DataFrame(
            [{"region": r, "installed": i, "removed": d} for r, (i, d) in turnover_by_region(fleet).items()],
            columns=["region", "installed", "removed"],
        ),
        "turnover.csv",
    )
    _csv(
        pd.DataFrame(
            [asdict(c) for c in cohort_durations(fleet)],
            columns=["year", "count", "mean_duration", "median_duration"],
        ),
        "cohorts.csv",
    )
    snapshot_rows = snapshot_counts(fleet, snapshot, GroupBy.EEZ, groups, mode=mode)
    _csv(pd.DataFrame(list(snapshot_rows.items()), columns=["key", "count"]), "snapshot_eez.csv")
    _csv(presence_matrix(fleet, mode=mode), "presence.csv")

    written.append(write_schema(out_dir / "schema.json", [p.name for p in written]))
    logger.info("Wrote %d statistics tables to %s", len(written) - 1, out_dir)
    return written


__all__ = [
    "ALL",
    "Attribute",
    "Cohort",
    "CountSeries",
    "DEFAULT_SHARES",
    "DistributionSummary",
    "GroupBy",
    "RegionStats",
    "ShareRule",
    "cohort_durations",
    "counts_frame",
    "distribution_summary",
    "lifespan_breakdown",
    "lifespan_frame",
    "presence_matrix",
    "quarterly_counts",
    "snapshot_counts",
    "turnover_by_region",
    "write_tables",
]
