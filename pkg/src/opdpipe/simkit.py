"""Synthetic scenes, perfect-detector chip files and their ground truth.

A :class:`SimSpec` places stationary platforms (with birth/death quarters
and optional dark quarters in which they go undetected) and transient ships
on a sea-clutter background. :func:`generate` renders every quarter and
emulates a perfect detector on the median composite; :func:`verify_roundtrip`
pushes the result through compositing, ingest, consolidation, linking and
count statistics and diffs the outcome against :class:`SimTruth`.

Randomness is drawn from ``numpy.random.default_rng([seed, quarter index])``
so each quarter can be regenerated on its own.
"""

from __future__ import annotations

import json
import math
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import yaml

from .analytics import quarterly_counts
from .asciigrid import SceneEntry, write_ascii_grid, write_scene_manifest
from .constants import (
    CHIP_SIZE,
    CHIP_STRIDE,
    DB_MAX,
    DEFAULT_PIXEL_SIZE_DEG,
    LEVEL_MIN,
    NONE,
    PLATFORM_MIN_DB,
    SEA_CLAMP_DB,
    SEA_MEAN_DB,
    SEA_MEAN_MAX_DB,
    SEA_STD_DB,
    SHORT_MAX_QUARTERS,
)
from .consolidate import QuarterInventory, consolidate_quarter
from .detections import IngestUnit, chip_file_name, ingest_texts, tile_windows, write_ingest_manifest
from .enrich import EnrichLayers, enrich_track
from .errors import InvalidValueError, OpdError, SimSpecError, StageError
from .geometry import GeoBox
from .logging_utils import get_logger
from .quarters import FIRST_QUARTER, LAST_QUARTER, Quarter, study_quarters
from .raster import GeoTransform, Raster, RasterKind, median_composite, pixel_to_geo, quantize
from .tracklink import LifespanCategory, PlatformTrack, link_quarters
from .unionfind import UnionFind

logger = get_logger(__name__)

PathLike = Union[str, Path]

DETECTOR_CONFIDENCE = 0.99
# largest platform side that always fits inside one chip of the overlapping grid
MAX_PLATFORM_PX = CHIP_SIZE - CHIP_STRIDE


@dataclass(frozen=True)
class SimPlatform:
    center: Tuple[int, int]
    size: Tuple[int, int]
    birth: Quarter
    death: Quarter
    brightness: float
    dark_quarters: Tuple[Quarter, ...] = ()
    name: str = ""

    def pixel_bounds(self) -> Tuple[int, int, int, int]:
        """(col0, row0, col1, row1), end-exclusive."""

        w, h = self.size
        col0 = self.center[0] - w // 2
        row0 = self.center[1] - h // 2
        return col0, row0, col0 + w, row0 + h

    def alive(self, q: Quarter) -> bool:
        return self.birth <= q <= self.death

    def visible(self, q: Quarter) -> bool:
        return self.alive(q) and q not in self.dark_quarters


@dataclass(frozen=True)
class SimShip:
    center: Tuple[int, int]
    size: Tuple[int, int]
    quarter: Quarter
    brightness: float
    scenes: int = 1

    def pixel_bounds(self, width: int, height: int) -> Tuple[int, int, int, int]:
        w, h = self.size
        col0 = max(0, self.center[0] - w // 2)
        row0 = max(0, self.center[1] - h // 2)
        return col0, row0, min(width, col0 + w), min(height, row0 + h)


@dataclass(frozen=True)
class SimSpec:
    seed: int
    tile_id: str = "T000000"
    tile_width: int = 704
    tile_height: int = 256
    origin_lon: float = 50.0
    origin_lat: float = 27.0
    pixel_size: float = DEFAULT_PIXEL_SIZE_DEG
    scenes_min: int = 3
    scenes_max: int = 5
    sea_mean: float = SEA_MEAN_DB
    sea_std: float = SEA_STD_DB
    start: Quarter = FIRST_QUARTER
    end: Quarter = LAST_QUARTER
    platforms: Tuple[SimPlatform, ...] = ()
    ships: Tuple[SimShip, ...] = ()

    def __post_init__(self) -> None:
        _validate_spec(self)

    @property
    def transform(self) -> GeoTransform:
        return GeoTransform(self.origin_lon, self.origin_lat, self.pixel_size, self.pixel_size)

    @property
    def quarters(self) -> List[Quarter]:
        return study_quarters(self.start, self.end)


def _validate_spec(spec: SimSpec) -> None:
    problems: List[str] = []
    if spec.tile_width < 1 or spec.tile_height < 1:
        problems.append("tile dimensions must be positive")
    if not 1 <= spec.scenes_min <= spec.scenes_max:
        problems.append(f"need 1 <= scenes_min <= scenes_max, got {spec.scenes_min}..{spec.scenes_max}")
    if spec.sea_mean > SEA_MEAN_MAX_DB:
        problems.append(f"sea_mean {spec.sea_mean} dB exceeds {SEA_MEAN_MAX_DB} dB")
    if spec.sea_std < 0:
        problems.append("sea_std must be non-negative")
    if spec.start > spec.end:
        problems.append(f"start {spec.start} is after end {spec.end}")

    for p in spec.platforms:
        label = p.name or str(p.center)
        col0, row0, col1, row1 = p.pixel_bounds()
        if not (PLATFORM_MIN_DB <= p.brightness <= DB_MAX):
            problems.append(f"platform {label}: brightness {p.brightness} dB outside [{PLATFORM_MIN_DB}, {DB_MAX}]")
        if not (1 <= p.size[0] <= MAX_PLATFORM_PX and 1 <= p.size[1] <= MAX_PLATFORM_PX):
            problems.append(f"platform {label}: size {p.size} outside 1..{MAX_PLATFORM_PX} px")
        if col0 < 0 or row0 < 0 or col1 > spec.tile_width or row1 > spec.tile_height:
            problems.append(f"platform {label}: footprint leaves the tile")
        if not (spec.start <= p.birth <= p.death <= spec.end):
            problems.append(f"platform {label}: life {p.birth}..{p.death} outside {spec.start}..{spec.end}")
        if any(not (p.birth < q < p.death) for q in p.dark_quarters):
            problems.append(f"platform {label}: dark quarters must lie strictly inside its life")

    # 4-connected blobs must stay apart, whatever their lifetimes
    bounds = [p.pixel_bounds() for p in spec.platforms]
    for i in range(len(bounds)):
        for j in range(i + 1, len(bounds)):
            a, b = bounds[i], bounds[j]
            if a[0] <= b[2] and b[0] <= a[2] and a[1] <= b[3] and b[1] <= a[3]:
                problems.append(
                    f"platforms {spec.platforms[i].name or i} and {spec.platforms[j].name or j} touch or overlap"
                )

    max_ship_scenes = math.ceil(spec.scenes_min / 2) - 1
    for s in spec.ships:
        if not 1 <= s.scenes <= max_ship_scenes:
            problems.append(f"ship at {s.center}: scenes {s.scenes} outside 1..{max_ship_scenes}")
        if not (spec.start <= s.quarter <= spec.end):
            problems.append(f"ship at {s.center}: quarter {s.quarter} outside the simulated window")

    if problems:
        raise SimSpecError("Invalid simulation spec: " + "; ".join(problems))


def _pair(value: Any, what: str) -> Tuple[int, int]:
    try:
        a, b = value
        return int(a), int(b)
    except (TypeError, ValueError) as exc:
        raise SimSpecError(f"{what} must be a pair of integers, got {value!r}") from exc


def spec_from_mapping(data: Mapping[str, Any]) -> SimSpec:
    """Build a spec from the flat key-value document plus ``platforms``/``ships`` lists."""

    data = dict(data)
    try:
        platforms = tuple(
            SimPlatform(
                center=_pair(p["center"], "center"),
                size=_pair(p["size"], "size"),
                birth=Quarter.parse(str(p["birth"])),
                death=Quarter.parse(str(p["death"])),
                brightness=float(p["brightness"]),
                dark_quarters=tuple(Quarter.parse(str(q)) for q in p.get("dark_quarters", []) or []),
                name=str(p.get("name", f"p{index:03d}")),
            )
            for index, p in enumerate(data.pop("platforms", []) or [])
        )
        ships = tuple(
            SimShip(
                center=_pair(s["center"], "center"),
                size=_pair(s["size"], "size"),
                quarter=Quarter.parse(str(s["quarter"])),
                brightness=float(s["brightness"]),
                scenes=int(s.get("scenes", 1)),
            )
            for s in data.pop("ships", []) or []
        )
        for key in ("start", "end"):
            if key in data:
                data[key] = Quarter.parse(str(data[key]))
    except (KeyError, TypeError, ValueError, InvalidValueError) as exc:
        raise SimSpecError(f"Malformed simulation spec entry: {exc}") from exc

    known = set(SimSpec.__dataclass_fields__) - {"platforms", "ships"}
    unknown = sorted(set(data) - known)
    if unknown:
        raise SimSpecError(f"Unknown simulation spec keys: {unknown}")
    if "seed" not in data:
        raise SimSpecError("Simulation spec needs a seed")
    return SimSpec(platforms=platforms, ships=ships, **data)


def spec_to_mapping(spec: SimSpec) -> Dict[str, Any]:
    data: Dict[str, Any] = {
        name: getattr(spec, name)
        for name in SimSpec.__dataclass_fields__
        if name not in ("platforms", "ships", "start", "end")
    }
    data["start"] = str(spec.start)
    data["end"] = str(spec.end)
    data["platforms"] = [
        {
            "name": p.name,
            "center": list(p.center),
            "size": list(p.size),
            "birth": str(p.birth),
            "death": str(p.death),
            "brightness": p.brightness,
            "dark_quarters": [str(q) for q in p.dark_quarters],
        }
        for p in spec.platforms
    ]
    data["ships"] = [
        {
            "center": list(s.center),
            "size": list(s.size),
            "quarter": str(s.quarter),
            "brightness": s.brightness,
            "scenes": s.scenes,
        }
        for s in spec.ships
    ]
    return data


def load_sim_spec(path: PathLike) -> SimSpec:
    path = Path(path)
    if not path.exists():
        raise SimSpecError(f"Simulation spec not found: {path}")
    data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    if not isinstance(data, dict):
        raise SimSpecError(f"{path}: simulation spec must be a mapping")
    return spec_from_mapping(data)


def dump_sim_spec(spec: SimSpec, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(yaml.safe_dump(spec_to_mapping(spec), sort_keys=False), encoding="utf-8")
    return path


def random_spec(seed: int, max_platforms: int = 50) -> SimSpec:
    """Seeded spec mixing full-span, partial, single-quarter and relocated platforms."""

    rng = np.random.default_rng(seed)
    base = SimSpec(seed=seed)
    cell = 24
    n_cols, n_rows = base.tile_width // cell, base.tile_height // cell
    cells = [(int(c % n_cols), int(c // n_cols)) for c in rng.permutation(n_cols * n_rows)]
    last = len(base.quarters) - 1
    target = int(rng.integers(1, max_platforms + 1))

    lives: List[Tuple[int, int]] = []
    while len(lives) < target:
        u = rng.random()
        if u < 0.35:
            lives.append((0, last))
        elif u < 0.6:
            a = int(rng.integers(0, last + 1))
            lives.append((a, int(rng.integers(a, last + 1))))
        elif u < 0.75:
            a = int(rng.integers(0, last + 1))
            lives.append((a, a))
        elif len(lives) + 2 <= target:
            # relocation: the unit leaves one site and reappears at another next quarter
            k = int(rng.integers(0, last))
            lives.append((int(rng.integers(0, k + 1)), k))
            lives.append((k + 1, int(rng.integers(k + 1, last + 1))))

    platforms = []
    for index, (a, b) in enumerate(lives):
        cx, cy = cells[index]
        w, h = (int(v) for v in rng.integers(3, 11, size=2))
        dark: Tuple[Quarter, ...] = ()
        if b - a >= 2 and rng.random() < 0.3:
            n_dark = int(rng.integers(1, min(2, b - a - 1) + 1))
            picks = sorted(int(i) for i in rng.choice(np.arange(a + 1, b), size=n_dark, replace=False))
            dark = tuple(Quarter.from_index(base.start.index + i) for i in picks)
        platforms.append(
            SimPlatform(
                center=(cx * cell + cell // 2, cy * cell + cell // 2),
                size=(w, h),
                birth=base.start.shift(a),
                death=base.start.shift(b),
                brightness=round(float(rng.uniform(PLATFORM_MIN_DB, -4.0)), 2),
                dark_quarters=dark,
                name=f"p{index:03d}",
            )
        )

    ships = tuple(
        SimShip(
            center=(int(rng.integers(5, base.tile_width - 5)), int(rng.integers(5, base.tile_height - 5))),
            size=(int(rng.integers(2, 7)), int(rng.integers(2, 7))),
            quarter=base.start.shift(int(rng.integers(0, last + 1))),
            brightness=round(float(rng.uniform(-8.0, -2.0)), 2),
            scenes=1,
        )
        for _ in range(int(rng.integers(0, 6)))
    )
    return SimSpec(seed=seed, platforms=tuple(platforms), ships=ships)


def _quarter_rng(spec: SimSpec, q: Quarter) -> np.random.Generator:
    return np.random.default_rng([spec.seed, q.index])


def scene_stack(spec: SimSpec, q: Quarter) -> List[Raster]:
    """Scenes of one quarter: clipped sea clutter, visible platforms and ships."""

    rng = _quarter_rng(spec, q)
    n = int(rng.integers(spec.scenes_min, spec.scenes_max + 1))
    cube = rng.normal(spec.sea_mean, spec.sea_std, size=(n, spec.tile_height, spec.tile_width))
    np.clip(cube, SEA_CLAMP_DB[0], SEA_CLAMP_DB[1], out=cube)
    for p in spec.platforms:
        if p.visible(q):
            col0, row0, col1, row1 = p.pixel_bounds()
            cube[:, row0:row1, col0:col1] = p.brightness
    for ship in spec.ships:
        if ship.quarter == q:
            chosen = np.sort(rng.choice(n, size=ship.scenes, replace=False))
            col0, row0, col1, row1 = ship.pixel_bounds(spec.tile_width, spec.tile_height)
            cube[chosen, row0:row1, col0:col1] = ship.brightness
    transform = spec.transform
    return [Raster(cube[i], transform, RasterKind.DB_FLOAT) for i in range(n)]


def _blobs(composite: Raster, level_min: int) -> List[Tuple[int, int, int, int]]:
    """Bounding boxes (col0, row0, col1, row1 exclusive) of 4-connected bright blobs."""

    rows, cols = np.nonzero(composite.values >= level_min)
    bright = list(zip(rows.tolist(), cols.tolist()))
    forest = UnionFind(bright)
    lookup = set(bright)
    for r, c in bright:
        for nb in ((r + 1, c), (r, c + 1)):
            if nb in lookup:
                forest.union((r, c), nb)
    boxes = []
    for component in forest.components():
        rs = [r for r, _ in component]
        cs = [c for _, c in component]
        boxes.append((min(cs), min(rs), max(cs) + 1, max(rs) + 1))
    return sorted(boxes, key=lambda b: (b[1], b[0]))


def perfect_detector(
    composite: Raster,
    tile_id: str,
    *,
    level_min: int = LEVEL_MIN,
    confidence: float = DETECTOR_CONFIDENCE,
) -> Dict[str, str]:
    """Chip file texts boxing every bright blob in each chip that fully contains it."""

    blobs = _blobs(composite, level_min)
    texts: Dict[str, str] = {}
    for window in tile_windows(tile_id, composite):
        lines = []
        for col0, row0, col1, row1 in blobs:
            if not (window.col0 <= col0 and col1 <= window.col0 + window.size):
                continue
            if not (window.row0 <= row0 and row1 <= window.row0 + window.size):
                continue
            cx = ((col0 + col1) / 2.0 - window.col0) / window.size
            cy = ((row0 + row1) / 2.0 - window.row0) / window.size
            w = (col1 - col0) / window.size
            h = (row1 - row0) / window.size
            lines.append(f"0 {cx!r} {cy!r} {w!r} {h!r} {confidence!r}")
        if lines:
            texts[chip_file_name(window)] = "\n".join(lines) + "\n"
    return texts


def _category(first: Quarter, last: Quarter) -> LifespanCategory:
    if first == FIRST_QUARTER and last == LAST_QUARTER:
        return LifespanCategory.FULL_SPAN
    if last.index - first.index + 1 <= SHORT_MAX_QUARTERS:
        return LifespanCategory.SHORT
    return LifespanCategory.MEDIUM


@dataclass(frozen=True)
class TruthTrack:
    name: str
    box: GeoBox
    first: Quarter
    last: Quarter
    observed: Tuple[Quarter, ...]
    category: LifespanCategory


@dataclass(frozen=True)
class SimTruth:
    tracks: Tuple[TruthTrack, ...]
    quarters: Tuple[Quarter, ...]
    counts: Tuple[int, ...]

    def to_dict(self) -> dict:
        return {
            "quarters": [str(q) for q in self.quarters],
            "counts": list(self.counts),
            "tracks": [
                {
                    "name": t.name,
                    "box": list(t.box.as_tuple()),
                    "first_quarter": str(t.first),
                    "last_quarter": str(t.last),
                    "observed": [str(q) for q in t.observed],
                    "category": t.category.value,
                }
                for t in self.tracks
            ],
        }


def expected_truth(spec: SimSpec) -> SimTruth:
    transform = spec.transform
    tracks = []
    for p in spec.platforms:
        col0, row0, col1, row1 = p.pixel_bounds()
        min_lon, max_lat = pixel_to_geo(transform, col0, row0)
        max_lon, min_lat = pixel_to_geo(transform, col1, row1)
        observed = tuple(q for q in study_quarters(p.birth, p.death) if q not in p.dark_quarters)
        tracks.append(
            TruthTrack(p.name, GeoBox(min_lon, min_lat, max_lon, max_lat), p.birth, p.death, observed, _category(p.birth, p.death))
        )
    quarters = tuple(spec.quarters)
    counts = tuple(sum(1 for p in spec.platforms if p.alive(q)) for q in quarters)
    return SimTruth(tuple(tracks), quarters, counts)


@dataclass
class SimOutput:
    spec: SimSpec
    composites: Dict[Quarter, Raster]
    chips: Dict[Quarter, Dict[str, str]]
    truth: SimTruth

    def scenes(self, q: Quarter) -> List[Raster]:
        return scene_stack(self.spec, q)


def generate(spec: SimSpec) -> SimOutput:
    """Render composites and perfect-detector chip texts for every quarter.

    Scene stacks are regenerated on demand through :meth:`SimOutput.scenes`.
    """

    composites: Dict[Quarter, Raster] = {}
    chips: Dict[Quarter, Dict[str, str]] = {}
    for q in spec.quarters:
        composite = quantize(median_composite(scene_stack(spec, q)))
        composites[q] = composite
        chips[q] = perfect_detector(composite, spec.tile_id)
    return SimOutput(spec, composites, chips, expected_truth(spec))


@contextmanager
def _stage(name: str, unit: Optional[str] = None) -> Iterator[None]:
    try:
        yield
    except StageError:
        raise
    except (OpdError, ValueError, KeyError) as exc:
        raise StageError(name, str(exc), unit=unit) from exc


@dataclass
class RoundtripReport:
    expected_tracks: int
    recovered_tracks: int
    diffs: List[str] = field(default_factory=list)
    tracks: List[PlatformTrack] = field(default_factory=list, repr=False)

    @property
    def ok(self) -> bool:
        return not self.diffs


def compare_tracks(truth: SimTruth, tracks: Sequence[PlatformTrack]) -> List[str]:
    """Differences between recovered tracks and the truth, matched by centre containment."""

    diffs: List[str] = []
    claimed = set()
    for expected in truth.tracks:
        lon, lat = expected.box.center
        hits = [t for t in tracks if t.rep_box.contains_point(lon, lat)]
        if len(hits) != 1:
            diffs.append(f"{expected.name}: {len(hits)} recovered tracks at its centre, expected 1")
            continue
        track = hits[0]
        claimed.add(track.platform_id)
        if (track.first, track.last) != (expected.first, expected.last):
            diffs.append(f"{expected.name}: span {track.first}..{track.last}, expected {expected.first}..{expected.last}")
        if track.observed != expected.observed:
            diffs.append(f"{expected.name}: observed quarters differ")
        category = _category(track.first, track.last)
        if category is not expected.category:
            diffs.append(f"{expected.name}: category {category.value}, expected {expected.category.value}")
    for t in tracks:
        if t.platform_id not in claimed:
            diffs.append(f"unexpected track {t.platform_id} at {t.center}")
    return diffs


def verify_roundtrip(spec: SimSpec) -> RoundtripReport:
    """Run the in-memory pipeline on ``spec`` and diff it against the truth."""

    truth = expected_truth(spec)
    inventories: List[QuarterInventory] = []
    for q in spec.quarters:
        unit = f"{spec.tile_id}/{q}"
        with _stage("composite", unit):
            composite = quantize(median_composite(scene_stack(spec, q)))
        with _stage("chip", unit):
            texts = perfect_detector(composite, spec.tile_id)
        with _stage("ingest", unit):
            detections = ingest_texts(spec.tile_id, q, composite, texts)
        with _stage("consolidate", unit):
            inventories.append(consolidate_quarter(detections, quarter=q))
    with _stage("link"):
        tracks = link_quarters(inventories)
    with _stage("stats"):
        no_layers = EnrichLayers()
        fleet = [enrich_track(t, no_layers) for t in tracks]
        series = {s.key: s for s in quarterly_counts(fleet, quarters=truth.quarters)}

    diffs = compare_tracks(truth, tracks)
    if len(tracks) != len(truth.tracks):
        diffs.insert(0, f"recovered {len(tracks)} tracks, expected {len(truth.tracks)}")
    counts = series[NONE].values if NONE in series else (0,) * len(truth.quarters)
    for q, got, want in zip(truth.quarters, counts, truth.counts):
        if got != want:
            diffs.append(f"{q}: {got} platforms present, expected {want}")

    report = RoundtripReport(len(truth.tracks), len(tracks), diffs, list(tracks))
    if report.ok:
        logger.info("Round trip of seed %d recovered all %d tracks", spec.seed, len(tracks))
    else:
        logger.warning("Round trip of seed %d: %d differences", spec.seed, len(diffs))
    return report


@dataclass(frozen=True)
class SimulationFiles:
    root: Path
    scene_manifest: Path
    ingest_manifest: Path
    truth: Path
    spec: Path


def write_simulation(spec: SimSpec, out_dir: PathLike) -> SimulationFiles:
    """Write scenes, manifests, composites, chip files and ``truth.json`` under ``out_dir``."""

    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    scenes: List[SceneEntry] = []
    units: List[IngestUnit] = []
    for q in spec.quarters:
        stack = scene_stack(spec, q)
        for index, scene in enumerate(stack):
            path = write_ascii_grid(scene, root / "scenes" / spec.tile_id / str(q) / f"scene_{index:02d}.asc")
            scenes.append(SceneEntry(spec.tile_id, q, path))
        composite = quantize(median_composite(stack))
        composite_path = write_ascii_grid(composite, root / "composites" / f"{spec.tile_id}_{q}.asc")
        det_dir = root / "detections" / spec.tile_id / str(q)
        det_dir.mkdir(parents=True, exist_ok=True)
        for name, text in sorted(perfect_detector(composite, spec.tile_id).items()):
            (det_dir / name).write_text(text, encoding="utf-8")
        units.append(IngestUnit(spec.tile_id, q, composite_path.resolve(), det_dir.resolve()))

    truth_path = root / "truth.json"
    truth_path.write_text(json.dumps(expected_truth(spec).to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    files = SimulationFiles(
        root=root,
        scene_manifest=write_scene_manifest(scenes, root / "scenes.csv"),
        ingest_manifest=write_ingest_manifest(units, root / "ingest.csv"),
        truth=truth_path,
        spec=dump_sim_spec(spec, root / "spec.yaml"),
    )
    logger.info("Wrote simulation of seed %d (%d quarters, %d scenes) to %s", spec.seed, len(units), len(scenes), root)
    return files


__all__ = [
    "RoundtripReport",
    "SimOutput",
    "SimPlatform",
    "SimShip",
    "SimSpec",
    "SimTruth",
    "SimulationFiles",
    "TruthTrack",
    "compare_tracks",
    "dump_sim_spec",
    "expected_truth",
    "generate",
    "load_sim_spec",
    "perfect_detector",
    "random_spec",
    "scene_stack",
    "spec_from_mapping",
    "spec_to_mapping",
    "verify_roundtrip",
    "write_simulation",
]
