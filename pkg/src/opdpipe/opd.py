"""Reading and writing the three Offshore Platform Dataset product files.

Products are CSV files with the header
``platform_id,first_quarter,last_quarter,coast_km,depth_m,area_ha,eez,region,lon,lat``
(``opd_quarterly.csv`` adds ``quarter`` after ``platform_id``), each with a
GeoJSON point sidecar. The reader also accepts GeoJSON and, with the
``parquet`` extra installed, (Geo)Parquet; column spellings are mapped onto
the canonical names through ``data/opd_columns.yaml``.
"""

from __future__ import annotations

import math
import os
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import pandas as pd
import yaml
from shapely import wkb
from shapely.geometry import shape

from .constants import NONE
from .enrich import EnrichedPlatform, normalize_region
from .errors import InputError, InvalidValueError, LayerLoadError, OpdSchemaError
from .geojson_io import make_feature, point_geometry, read_features, write_collection
from .geometry import box_from_area
from .logging_utils import get_logger
from .quarters import FIRST_QUARTER, LAST_QUARTER, Quarter, study_quarters
from .schema import table_spec
from .tracklink import PlatformTrack, PresenceMode, presence

logger = get_logger(__name__)

PathLike = Union[str, Path]

ALIASES_FILENAME = "opd_columns.yaml"
IGNORED_COLUMN = "_ignore"


class OpdProduct(str, Enum):
    ALL = "ALL"
    QUARTERLY = "QUARTERLY"
    SNAPSHOT = "SNAPSHOT"

    @property
    def stem(self) -> str:
        return f"opd_{self.value.lower()}"

    @property
    def columns(self) -> List[str]:
        return table_spec(f"{self.stem}.csv").column_names


@dataclass(frozen=True, slots=True)
class OpdRecord:
    platform_id: str
    first_quarter: Quarter
    last_quarter: Quarter
    coast_km: Optional[float]
    depth_m: Optional[float]
    area_ha: float
    eez: str
    region: str
    lon: float
    lat: float
    quarter: Optional[Quarter] = None


@dataclass
class OpdReadReport:
    source: str
    rows_read: int = 0
    rejected: List[Tuple[int, str]] = field(default_factory=list)

    @property
    def accepted(self) -> int:
        return self.rows_read - len(self.rejected)

    def reject(self, row: int, reason: str) -> None:
        self.rejected.append((row, reason))


def _aliases_path() -> Path:
    env_path = os.environ.get("OPDPIPE_OPD_ALIASES")
    if env_path:
        return Path(env_path)
    return Path(__file__).resolve().parent / "data" / ALIASES_FILENAME


def load_column_aliases(path: Optional[PathLike] = None) -> Dict[str, str]:
    """Return ``{accepted spelling (lower case): canonical column}``.

    Spellings listed under ``_ignore`` map to :data:`IGNORED_COLUMN` and are
    dropped on read.
    """

    path = Path(path) if path else _aliases_path()
    if not path.exists():
        raise InputError(f"Column alias file not found: {path}")
    data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    if not isinstance(data, dict):
        raise InputError(f"{path}: column aliases must be a mapping")
    lookup: Dict[str, str] = {}
    for canonical, spellings in data.items():
        canonical = str(canonical)
        names = list(spellings or []) if canonical == IGNORED_COLUMN else [canonical, *(spellings or [])]
        for spelling in names:
            key = str(spelling).strip().lower()
            previous = lookup.setdefault(key, canonical)
            if previous != canonical:
                raise InputError(f"{path}: alias {spelling!r} maps to both {previous} and {canonical}")
    return lookup


def _frame_from_features(path: Path) -> pd.DataFrame:
    rows = []
    for feature in read_features(path):
        row = dict(feature.get("properties") or {})
        geometry = feature.get("geometry")
        if geometry:
            point = shape(geometry).centroid
            row.setdefault("lon", point.x)
            row.setdefault("lat", point.y)
        rows.append(row)
    return pd.DataFrame(rows)


def _frame_from_parquet(path: Path) -> pd.DataFrame:
    try:
        import pyarrow  # noqa: F401
    except ImportError as exc:
        raise InputError(f"{path}: reading Parquet needs the 'parquet' extra (pip install opdpipe[parquet])") from exc
    frame = pd.read_parquet(path)
    if "geometry" in frame.columns:
        points = [wkb.loads(bytes(value)).centroid if value is not None else None for value in frame["geometry"]]
        if "lon" not in frame.columns:
            frame["lon"] = [p.x if p is not None else None for p in points]
        if "lat" not in frame.columns:
            frame["lat"] = [p.y if p is not None else None for p in points]
        frame = frame.drop(columns=["geometry"])
    return frame


def _load_frame(path: Path) -> pd.DataFrame:
    suffix = path.suffix.lower()
    if suffix == ".csv":
        try:
            return pd.read_csv(path, dtype=str, keep_default_na=False)
        except pd.errors.EmptyDataError:
            return pd.DataFrame()
    if suffix in (".geojson", ".json"):
        return _frame_from_features(path)
    if suffix in (".parquet", ".geoparquet"):
        return _frame_from_parquet(path)
    raise InputError(f"{path}: unsupported product container {suffix!r} (csv, geojson or parquet)")


def _canonical_columns(frame: pd.DataFrame, aliases: Mapping[str, str], *, source: str) -> pd.DataFrame:
    renames: Dict[str, str] = {}
    unknown: List[str] = []
    for column in frame.columns:
        canonical = aliases.get(str(column).strip().lower())
        if canonical is None:
            unknown.append(str(column))
        elif canonical == IGNORED_COLUMN:
            logger.debug("%s: ignoring product column %r", source, column)
        elif canonical in renames.values():
            logger.warning("%s: column %r repeats %r and is ignored", source, column, canonical)
        else:
            renames[column] = canonical
    if unknown:
        raise OpdSchemaError(f"{source}: unknown columns {', '.join(unknown)}", columns_found=[str(c) for c in frame.columns])
    return frame[list(renames)].rename(columns=renames)


def _blank(value: Any) -> bool:
    if isinstance(value, str):
        return value.strip() == ""
    return value is None or bool(pd.isna(value))


def _optional_float(value: Any, name: str) -> Optional[float]:
    if _blank(value):
        return None
    number = float(value)
    if not math.isfinite(number):
        raise InvalidValueError(f"{name} is not finite")
    return number


def _required_float(value: Any, name: str) -> float:
    number = _optional_float(value, name)
    if number is None:
        raise InvalidValueError(f"{name} is empty")
    return number


def _quarter(value: Any, name: str) -> Quarter:
    if _blank(value):
        raise InvalidValueError(f"{name} is empty")
    q = Quarter.parse(re.sub(r"[\s_\-]", "", str(value)))
    if not FIRST_QUARTER <= q <= LAST_QUARTER:
        raise InvalidValueError(f"{name} {q} lies outside {FIRST_QUARTER}..{LAST_QUARTER}")
    return q


def _record(row: Mapping[str, Any], product: OpdProduct) -> OpdRecord:
    first = _quarter(row["first_quarter"], "first_quarter")
    last = _quarter(row["last_quarter"], "last_quarter")
    if first > last:
        raise InvalidValueError(f"first_quarter {first} is after last_quarter {last}")
    quarter = None
    if product is OpdProduct.QUARTERLY:
        quarter = _quarter(row["quarter"], "quarter")
        if not first <= quarter <= last:
            raise InvalidValueError(f"quarter {quarter} outside {first}..{last}")

    lon = _required_float(row["lon"], "lon")
    lat = _required_float(row["lat"], "lat")
    if not (-180.0 <= lon <= 180.0 and -90.0 <= lat <= 90.0):
        raise InvalidValueError(f"position ({lon}, {lat}) is not a valid lon/lat")
    area = _required_float(row["area_ha"], "area_ha")
    if area <= 0:
        raise InvalidValueError(f"area_ha must be positive, got {area}")
    coast = _optional_float(row["coast_km"], "coast_km")
    if coast is not None and coast < 0:
        raise InvalidValueError(f"coast_km must be non-negative, got {coast}")

    region_text = "" if _blank(row["region"]) else str(row["region"]).strip()
    region = NONE if region_text in ("", NONE) else normalize_region(region_text)
    eez = NONE if _blank(row["eez"]) else str(row["eez"]).strip()
    platform_id = "" if _blank(row["platform_id"]) else str(row["platform_id"]).strip()
    if not platform_id:
        raise InvalidValueError("platform_id is empty")
    return OpdRecord(
        platform_id=platform_id,
        first_quarter=first,
        last_quarter=last,
        coast_km=coast,
        depth_m=_optional_float(row["depth_m"], "depth_m"),
        area_ha=area,
        eez=eez,
        region=region,
        lon=lon,
        lat=lat,
        quarter=quarter,
    )


def read_opd(
    path: PathLike,
    product: Union[OpdProduct, str],
    *,
    aliases: Optional[Mapping[str, str]] = None,
    report: Optional[OpdReadReport] = None,
) -> List[OpdRecord]:
    """Read one product file; invalid rows are skipped and listed in ``report``."""

    path = Path(path)
    product = product if isinstance(product, OpdProduct) else OpdProduct(str(product).upper())
    if not path.exists():
        raise InputError(f"Product file not found: {path}")
    report = report if report is not None else OpdReadReport(str(path))

    frame = _canonical_columns(_load_frame(path), aliases if aliases is not None else load_column_aliases(), source=str(path))
    spec = table_spec(f"{product.stem}.csv")
    spec.check_columns(list(frame.columns), source=str(path))

    records: List[OpdRecord] = []
    for position, row in enumerate(frame.to_dict(orient="records"), start=1):
        report.rows_read += 1
        try:
            records.append(_record(row, product))
        except (InvalidValueError, LayerLoadError, TypeError, ValueError) as exc:
            report.reject(position, str(exc))

    if report.rejected:
        logger.warning("%s: rejected %d of %d rows (first: row %d, %s)", path, len(report.rejected), report.rows_read, *report.rejected[0])
    logger.info("Read %d %s records from %s", len(records), product.value, path)
    return records


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _product_row(p: EnrichedPlatform, quarter: Optional[Quarter] = None) -> Dict[str, Any]:
    lon, lat = p.center
    row: Dict[str, Any] = {"platform_id": p.platform_id}
    if quarter is not None:
        row["quarter"] = str(quarter)
    row.update(
        {
            "first_quarter": str(p.track.first),
            "last_quarter": str(p.track.last),
            "coast_km": p.coast_km,
            "depth_m": p.depth_m,
            "area_ha": float(p.area_ha),
            "eez": p.eez,
            "region": p.region,
            "lon": float(lon),
            "lat": float(lat),
        }
    )
    return row


def _write_product(rows: Sequence[Dict[str, Any]], product: OpdProduct, out_dir: Path) -> Tuple[Path, Path]:
    columns = product.columns
    frame = pd.DataFrame([[_cell(row[c]) for c in columns] for row in rows], columns=columns)
    csv_path = out_dir / f"{product.stem}.csv"
    frame.to_csv(csv_path, index=False, lineterminator="\n")
    features = [
        make_feature(point_geometry(row["lon"], row["lat"]), {k: v for k, v in row.items() if k not in ("lon", "lat")})
        for row in rows
    ]
    geojson_path = write_collection(features, out_dir / f"{product.stem}.geojson")
    return csv_path, geojson_path


def write_products(
    fleet: Sequence[EnrichedPlatform],
    out_dir: PathLike,
    *,
    snapshot: Quarter = LAST_QUARTER,
) -> Dict[OpdProduct, Path]:
    """Write the ALL, QUARTERLY (gap-filled) and SNAPSHOT products with their sidecars."""

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ordered = sorted(fleet, key=lambda p: p.platform_id)

    all_rows = [_product_row(p) for p in ordered]
    quarterly_rows = [
        _product_row(p, q) for p in ordered for q in study_quarters(p.track.first, p.track.last)
    ]
    snapshot_rows = [_product_row(p) for p in ordered if presence(p.track, snapshot, PresenceMode.FILLED)]

    written = {}
    for product, rows in (
        (OpdProduct.ALL, all_rows),
        (OpdProduct.QUARTERLY, quarterly_rows),
        (OpdProduct.SNAPSHOT, snapshot_rows),
    ):
        written[product], _ = _write_product(rows, product, out_dir)
    logger.info(
        "Wrote products to %s: %d platforms, %d platform-quarters, %d in %s",
        out_dir,
        len(all_rows),
        len(quarterly_rows),
        len(snapshot_rows),
        snapshot,
    )
    return written


def records_to_fleet(records: Sequence[OpdRecord]) -> List[EnrichedPlatform]:
    """Rebuild enriched platforms from product records.

    QUARTERLY records of one platform contribute their quarters as the
    observed set; otherwise every quarter from first to last counts as
    observed.
    """

    by_id: Dict[str, List[OpdRecord]] = {}
    for record in records:
        by_id.setdefault(record.platform_id, []).append(record)

    fleet = []
    for platform_id in sorted(by_id):
        group = by_id[platform_id]
        head = group[0]
        listed = sorted({r.quarter for r in group if r.quarter is not None})
        observed = tuple(listed) if listed else tuple(study_quarters(head.first_quarter, head.last_quarter))
        track = PlatformTrack(
            platform_id=platform_id,
            members=(),
            rep_box=box_from_area(head.lon, head.lat, head.area_ha),
            center=(head.lon, head.lat),
            first=head.first_quarter,
            last=head.last_quarter,
            observed=observed,
        )
        fleet.append(EnrichedPlatform(track, head.region, head.eez, head.coast_km, head.depth_m, head.area_ha))
    return fleet


def opd_data_dir() -> Optional[Path]:
    """Directory of the published product files (``OPD_DATA_DIR``), if configured."""

    value = os.environ.get("OPD_DATA_DIR")
    return Path(value) if value else None


def find_product(directory: PathLike, product: Union[OpdProduct, str]) -> Optional[Path]:
    """Locate a product file in ``directory`` by its stem, any supported container."""

    product = product if isinstance(product, OpdProduct) else OpdProduct(str(product).upper())
    directory = Path(directory)
    for suffix in (".parquet", ".geoparquet", ".csv", ".geojson"):
        candidate = directory / f"{product.stem}{suffix}"
        if candidate.exists():
            return candidate
    return None


__all__ = [
    "OpdProduct",
    "OpdReadReport",
    "OpdRecord",
    "find_product",
    "load_column_aliases",
    "opd_data_dir",
    "read_opd",
    "records_to_fleet",
    "write_products",
]
