"""ESRI ASCII grid reader/writer.

Header keys are matched case-insensitively. Both the corner
(``xllcorner``/``yllcorner``) and the centre (``xllcenter``/``yllcenter``)
registrations are accepted, as is the non-square ``dx``/``dy`` variant.
Values are row-major, north row first.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .errors import InputError
from .logging_utils import get_logger
from .quarters import Quarter
from .raster import GeoTransform, Raster, RasterKind

logger = get_logger(__name__)

PathLike = Union[str, Path]

_HEADER_KEYS = {
    "ncols",
    "nrows",
    "xllcorner",
    "yllcorner",
    "xllcenter",
    "yllcenter",
    "cellsize",
    "dx",
    "dy",
    "nodata_value",
}


def _parse_header(lines: list[str], source: str) -> tuple[Dict[str, float], int]:
    header: Dict[str, float] = {}
    consumed = 0
    for line in lines:
        parts = line.split()
        if not parts:
            consumed += 1
            continue
        key = parts[0].lower()
        if key not in _HEADER_KEYS:
            break
        if len(parts) != 2:
            raise InputError(f"{source}: malformed header line {line!r}")
        try:
            header[key] = float(parts[1])
        except ValueError as exc:
            raise InputError(f"{source}: header {parts[0]} is not numeric: {parts[1]!r}") from exc
        consumed += 1
    return header, consumed


def parse_ascii_grid(text: str, *, kind: RasterKind = RasterKind.DB_FLOAT, source: str = "<grid>") -> Raster:
    """Parse ESRI ASCII grid ``text`` into a :class:`Raster`."""

    lines = text.splitlines()
    header, consumed = _parse_header(lines, source)
    missing = {"ncols", "nrows"} - header.keys()
    if missing:
        raise InputError(f"{source}: missing header keys {sorted(missing)}")
    ncols, nrows = int(header["ncols"]), int(header["nrows"])

    if "cellsize" in header:
        pixel_w = pixel_h = header["cellsize"]
    elif "dx" in header and "dy" in header:
        pixel_w, pixel_h = header["dx"], header["dy"]
    else:
        raise InputError(f"{source}: header needs cellsize or dx/dy")

    if "xllcorner" in header and "yllcorner" in header:
        xll, yll = header["xllcorner"], header["yllcorner"]
    elif "xllcenter" in header and "yllcenter" in header:
        xll, yll = header["xllcenter"] - pixel_w / 2.0, header["yllcenter"] - pixel_h / 2.0
    else:
        raise InputError(f"{source}: header needs xllcorner/yllcorner or xllcenter/yllcenter")

    # rows may wrap across lines, so read a flat token stream
    tokens = " ".join(lines[consumed:]).split()
    try:
        values = np.array(tokens, dtype=np.float64)
    except ValueError as exc:
        raise InputError(f"{source}: non-numeric cell value") from exc
    if values.size != ncols * nrows:
        raise InputError(f"{source}: expected {ncols * nrows} values, found {values.size}")
    values = values.reshape(nrows, ncols)

    transform = GeoTransform(xll, yll + nrows * pixel_h, pixel_w, pixel_h)
    nodata = header.get("nodata_value")
    if kind is RasterKind.U8:
        return Raster(values.astype(np.int64), transform, RasterKind.U8, nodata=None)
    return Raster(values, transform, kind, nodata=nodata)


def read_ascii_grid(path: PathLike, *, kind: RasterKind = RasterKind.DB_FLOAT) -> Raster:
    path = Path(path)
    if not path.exists():
        raise InputError(f"Raster not found: {path}")
    logger.debug("Reading ESRI ASCII grid %s as %s", path, kind.value)
    return parse_ascii_grid(path.read_text(encoding="utf-8"), kind=kind, source=str(path))


def format_ascii_grid(raster: Raster) -> str:
    """Serialise ``raster``; floats use 6 significant digits."""

    t = raster.transform
    yll = t.origin_lat - raster.height * t.pixel_height
    lines = [f"ncols {raster.width}", f"nrows {raster.height}", f"xllcorner {t.origin_lon!r}", f"yllcorner {yll!r}"]
    if t.pixel_width == t.pixel_height:
        lines.append(f"cellsize {t.pixel_width!r}")
    else:
        lines += [f"dx {t.pixel_width!r}", f"dy {t.pixel_height!r}"]

    if raster.kind is RasterKind.U8:
        fmt = "%d"
    else:
        fmt = "%.6g"
        if raster.nodata is not None:
            lines.append(f"NODATA_value {raster.nodata:.6g}")

    out = io.StringIO()
    out.write("\n".join(lines) + "\n")
    np.savetxt(out, raster.values, fmt=fmt, delimiter=" ")
    return out.getvalue()


def write_ascii_grid(raster: Raster, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_ascii_grid(raster), encoding="utf-8")
    return path


@dataclass(frozen=True, slots=True)
class SceneEntry:
    tile_id: str
    quarter: Quarter
    path: Path


SCENE_MANIFEST_COLUMNS = ["tile_id", "quarter", "scene_path"]


def read_scene_manifest(path: PathLike) -> Dict[Tuple[str, Quarter], List[Path]]:
    """Group the ``tile_id,quarter,scene_path`` manifest into per-unit scene lists."""

    path = Path(path)
    if not path.exists():
        raise InputError(f"Scene manifest not found: {path}")
    frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    missing = [c for c in SCENE_MANIFEST_COLUMNS if c not in frame.columns]
    if missing:
        raise InputError(f"{path}: scene manifest lacks columns {missing}")
    units: Dict[Tuple[str, Quarter], List[Path]] = {}
    for row in frame.itertuples(index=False):
        key = (row.tile_id, Quarter.parse(row.quarter))
        units.setdefault(key, []).append((path.parent / row.scene_path).resolve())
    return {key: sorted(paths) for key, paths in sorted(units.items(), key=lambda kv: (kv[0][1], kv[0][0]))}


def write_scene_manifest(entries: Sequence[SceneEntry], path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    base = path.parent.resolve()
    rows = []
    for e in sorted(entries, key=lambda e: (e.quarter, e.tile_id, str(e.path))):
        target = Path(e.path).resolve()
        try:
            rel = target.relative_to(base).as_posix()
        except ValueError:
            rel = target.as_posix()
        rows.append({"tile_id": e.tile_id, "quarter": str(e.quarter), "scene_path": rel})
    pd.DataFrame(rows, columns=SCENE_MANIFEST_COLUMNS).to_csv(path, index=False, lineterminator="\n")
    return path


__all__ = [
    "SceneEntry",
    "format_ascii_grid",
    "parse_ascii_grid",
    "read_ascii_grid",
    "read_scene_manifest",
    "write_ascii_grid",
    "write_scene_manifest",
]
