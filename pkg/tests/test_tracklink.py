"""Tests for cross-quarter linking, lifespans and turnover."""

from __future__ import annotations

import json
import random
from pathlib import Path
from typing import Sequence

import numpy as np
import pytest

from opdpipe.consolidate import QuarterInventory
from opdpipe.detections import Detection, DetectionClass
from opdpipe.errors import InputError, LinkInputError
from opdpipe.geometry import GeoBox, iou_matrix
from opdpipe.quarters import FIRST_QUARTER, LAST_QUARTER, Quarter, study_quarters
from opdpipe.tracklink import (
    InstallStatus,
    LifespanCategory,
    PlatformTrack,
    PresenceMode,
    TrackMember,
    install_status,
    lifespan,
    link_quarters,
    presence,
    read_tracks,
    turnover,
    write_tracks,
)

BOX = GeoBox(52.0, 26.0, 52.001, 26.001)


def _track(quarters: Sequence[Quarter], box: GeoBox = BOX, tag: str = "p") -> PlatformTrack:
    return PlatformTrack.from_members(
        [TrackMember(q, f"{tag}_{q}", box, 0.5 + 0.01 * i) for i, q in enumerate(quarters)]
    )


def _span(first: Quarter, duration: int) -> list[Quarter]:
    return [first.shift(i) for i in range(duration)]


def _inventories(detections: Sequence[Detection]) -> list[QuarterInventory]:
    by_quarter: dict[Quarter, list[Detection]] = {}
    for d in detections:
        by_quarter.setdefault(d.quarter, []).append(d)
    return [QuarterInventory(q, tuple(ds)) for q, ds in sorted(by_quarter.items())]


def _det(id_: str, q: Quarter, box: GeoBox, conf: float = 0.8) -> Detection:
    return Detection(id_, q, "T000000", DetectionClass.SINGLE_PLATFORM, conf, box, 200)


@pytest.mark.parametrize(
    ("first", "duration", "category"),
    [
        (Quarter(2018, 1), 19, LifespanCategory.SHORT),
        (Quarter(2018, 1), 20, LifespanCategory.MEDIUM),
        (FIRST_QUARTER, 32, LifespanCategory.MEDIUM),
        (FIRST_QUARTER, 33, LifespanCategory.FULL_SPAN),
    ],
)
def test_lifespan_boundaries(first: Quarter, duration: int, category: LifespanCategory) -> None:
    assert lifespan(_track(_span(first, duration))) == (duration, category)


def test_gaps_are_filled() -> None:
    t = _track([Quarter(2019, 3), Quarter(2020, 1), Quarter(2020, 2)])
    assert lifespan(t) == (4, LifespanCategory.SHORT)
    assert presence(t, Quarter(2019, 4))
    assert not presence(t, Quarter(2019, 4), PresenceMode.OBSERVED)
    assert not presence(t, Quarter(2019, 2))
    active = [q for q in study_quarters() if presence(t, q)]
    assert [q.index for q in active] == list(range(active[0].index, active[-1].index + 1))


def test_track_invariants() -> None:
    members = [
        TrackMember(Quarter(2020, 1), "a", GeoBox(0.0, 0.0, 1.0, 1.0), 0.6),
        TrackMember(Quarter(2019, 1), "b", GeoBox(0.2, 0.0, 1.2, 1.0), 0.9),
    ]
    t = PlatformTrack.from_members(members)
    assert t.rep_box == members[1].box
    assert t.center == pytest.approx((0.6, 0.5))
    assert (t.first, t.last) == (Quarter(2019, 1), Quarter(2020, 1))
    assert PlatformTrack.from_members(list(reversed(members))) == t
    with pytest.raises(InputError):
        PlatformTrack.from_members([])


def test_single_detection_is_kept() -> None:
    (t,) = link_quarters(_inventories([_det("d1", Quarter(2020, 3), BOX)]))
    assert t.first == t.last == Quarter(2020, 3)


def test_same_box_every_quarter_is_full_span() -> None:
    ds = [_det(f"d{q.index:02d}", q, BOX) for q in study_quarters()]
    (t,) = link_quarters(_inventories(ds))
    assert lifespan(t)[1] is LifespanCategory.FULL_SPAN
    assert turnover([t]) == (0, 0)


def test_relocation_yields_two_tracks() -> None:
    a = GeoBox(52.0, 26.0, 52.001, 26.001)
    b = a.translate(0.01, 0.0)
    moved = a.translate(0.0, 0.005)
    quarters = _span(Quarter(2020, 1), 10)
    ds = [_det(f"a{i}", q, a) for i, q in enumerate(quarters)]
    ds += [_det(f"b{i}", q, b) for i, q in enumerate(quarters)]
    ds += [_det(f"m{i}", q, moved) for i, q in enumerate(_span(Quarter(2022, 3), 4))]
    tracks = link_quarters(_inventories(ds))
    assert len(tracks) == 3
    assert sorted(len(t.members) for t in tracks) == [4, 10, 10]
    assert turnover(tracks) == (3, 3)


def test_turnover_and_status() -> None:
    t = _track([Quarter(2018, 1), Quarter(2019, 1)])
    assert turnover([t]) == (1, 1)
    assert install_status(t) == (InstallStatus.REMOVED, None)
    assert install_status(t, Quarter(2018, 3)) == (InstallStatus.ACTIVE, Quarter(2018, 1))


def test_duplicate_quarters_are_rejected() -> None:
    inv = QuarterInventory(Quarter(2020, 1), ())
    with pytest.raises(LinkInputError):
        link_quarters([inv, inv])


def _brute_link(detections: Sequence[Detection], iou_min: float) -> set[frozenset[str]]:
    adjacency = iou_matrix([d.box for d in detections]) >= iou_min
    label = np.arange(len(detections))
    while True:
        # min-label propagation until a fixed point
        spread = np.where(adjacency, label[None, :], len(detections)).min(axis=1)
        new = np.minimum(label, spread)
        if np.array_equal(new, label):
            break
        label = new
    groups: dict[int, set[str]] = {}
    for d, root in zip(detections, label.tolist()):
        groups.setdefault(root, set()).add(d.id)
    return {frozenset(g) for g in groups.values()}


def test_linking_matches_brute_force_and_ignores_input_order() -> None:
    rng = random.Random(77)
    quarters = study_quarters()
    for _ in range(1000):
        n = rng.randint(1, 200)
        ds = []
        for i in range(n):
            x, y = rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)
            size = rng.uniform(0.01, 0.08)
            ds.append(_det(f"d{i:03d}", rng.choice(quarters), GeoBox(x, y, x + size, y + size)))
        invs = _inventories(ds)
        tracks = link_quarters(invs, 0.1)
        got = {frozenset(m.detection_id for m in t.members) for t in tracks}
        assert got == _brute_link(ds, 0.1)
        if n % 10 == 0:
            rng.shuffle(invs)
            assert link_quarters(invs, 0.1) == tracks
        for t in tracks:
            assert lifespan(t)[0] >= len(t.observed)


def test_tracks_file_round_trip(tmp_path: Path) -> None:
    tracks = [_track(_span(Quarter(2018, 2), 5)), _track([Quarter(2021, 1)], BOX.translate(1.0, 0.0), tag="q")]
    path = write_tracks(tracks, tmp_path / "tracks.geojson")
    back = read_tracks(path)
    assert back == sorted(tracks, key=lambda t: t.platform_id)
    assert write_tracks(back, tmp_path / "again.geojson").read_bytes() == path.read_bytes()


def test_tampered_track_file_is_rejected(tmp_path: Path) -> None:
    path = write_tracks([_track(_span(Quarter(2018, 2), 3))], tmp_path / "tracks.geojson")
    payload = json.loads(path.read_text())
    payload["features"][0]["properties"]["platform_id"] = "Pdeadbeef"
    path.write_text(json.dumps(payload))
    with pytest.raises(InputError):
        read_tracks(path)
