from __future__ import annotations

import json
import random
from pathlib import Path

import numpy as np
import pytest

from opdpipe.consolidate import (
    ExclusionLayer,
    QuarterInventory,
    apply_exclusion,
    consolidate_quarter,
    gate_detections,
    group_overlaps,
    inventory_path,
    load_exclusion_layer,
    read_inventory,
    select_representative,
    write_inventory,
)
from opdpipe.detections import Detection, DetectionClass
from opdpipe.errors import InputError, LayerLoadError
from opdpipe.geometry import GeoBox, iou, iou_matrix
from opdpipe.quarters import Quarter

Q = Quarter(2021, 3)
SINGLE = DetectionClass.SINGLE_PLATFORM
CLUSTER = DetectionClass.PLATFORM_CLUSTER


def det(id_: str, box=(0.0, 0.0, 1.0, 1.0), *, conf: float = 0.9, level: int = 200, label=SINGLE, quarter=Q) -> Detection:
    return Detection(id_, quarter, "T000000", label, conf, GeoBox(*box), level)


def test_iou_example() -> None:
    assert iou(GeoBox(0, 0, 2, 2), GeoBox(1, 1, 3, 3)) == pytest.approx(1.0 / 7.0)


def test_gate_boundaries_are_inclusive() -> None:
    ds = [det("a", conf=0.39, level=200), det("b", conf=0.40, level=150), det("c", conf=0.9, level=149)]
    assert [d.id for d in gate_detections(ds)] == ["b"]
    assert gate_detections(gate_detections(ds)) == gate_detections(ds)
    assert gate_detections([Detection("n", Q, "T", SINGLE, 0.9, GeoBox(0, 0, 1, 1))]) == []


def test_grouping_is_transitive() -> None:
    a = det("a", (0.0, 0.0, 1.0, 1.0))
    b = det("b", (0.5, 0.0, 1.5, 1.0))
    c = det("c", (1.0, 0.0, 2.0, 1.0))
    assert iou(a.box, b.box) >= 0.2 and iou(b.box, c.box) >= 0.2 and iou(a.box, c.box) == 0.0
    assert [[d.id for d in g] for g in group_overlaps([c, a, b])] == [["a", "b", "c"]]
    far = [det(f"s{i}", (i * 2.0, 0.0, i * 2.0 + 1.0, 1.0)) for i in range(4)]
    assert [len(g) for g in group_overlaps(far)] == [1, 1, 1, 1]


def _brute_clusters(boxes: list[GeoBox], iou_min: float) -> set[frozenset[int]]:
    adjacency = iou_matrix(boxes) >= iou_min
    seen: set[int] = set()
    clusters = set()
    for start in range(len(boxes)):
        if start in seen:
            continue
        stack, members = [start], set()
        while stack:
            node = stack.pop()
            if node in members:
                continue
            members.add(node)
            stack.extend(int(j) for j in np.flatnonzero(adjacency[node]) if j not in members)
        seen |= members
        clusters.add(frozenset(members))
    return clusters


def test_union_find_grouping_matches_brute_force_on_random_instances() -> None:
    rng = random.Random(20240301)
    for _ in range(1000):
        n = rng.randint(1, 200)
        spread = rng.uniform(0.2, 2.0)
        ds = []
        for i in range(n):
            x, y = rng.uniform(0, spread), rng.uniform(0, spread)
            w, h = rng.uniform(0.01, 0.15), rng.uniform(0.01, 0.15)
            ds.append(det(f"d{i:03d}", (x, y, x + w, y + h)))
        groups = group_overlaps(ds, 0.2)
        got = {frozenset(int(d.id[1:]) for d in g) for g in groups}
        assert got == _brute_clusters([d.box for d in ds], 0.2)
        assert sum(len(g) for g in groups) == n


def test_representative_rules() -> None:
    only = det("x")
    assert select_representative([only]) is only
    cluster = [det("a", conf=0.6), det("b", conf=0.5), det("c", conf=0.9, label=CLUSTER)]
    assert select_representative(cluster).id == "a"
    tie = [det("a", conf=0.5), det("b", conf=0.8, label=CLUSTER)]
    assert select_representative(tie).id == "b"
    same = [det("z", conf=0.7), det("y", conf=0.7)]
    assert select_representative(same).id == "y"
    with pytest.raises(InputError):
        select_representative([])


def _layer() -> ExclusionLayer:
    return ExclusionLayer([("farm", [[(0.0, 0.0), (2.0, 0.0), (2.0, 2.0), (0.0, 2.0), (0.0, 0.0)]])])


def test_exclusion_layer() -> None:
    inside = det("in", (0.5, 0.5, 1.5, 1.5))
    edge = det("edge", (1.5, 0.5, 2.5, 1.5))
    outside = det("out", (5.0, 5.0, 6.0, 6.0))
    turbine = det("wt", (7.0, 7.0, 8.0, 8.0), label=DetectionClass.WIND_TURBINE)
    assert [d.id for d in apply_exclusion([inside, edge, outside, turbine], _layer())] == ["out"]
    assert [d.id for d in apply_exclusion([outside, turbine], None)] == ["out"]
    assert [d.id for d in apply_exclusion([outside], ExclusionLayer())] == ["out"]


def test_exclusion_layer_file(tmp_path: Path) -> None:
    ring = [[0, 0], [2, 0], [2, 2], [0, 2], [0, 0]]
    good = {"type": "FeatureCollection", "features": [{"type": "Feature", "properties": {"name": "Hornsea"}, "geometry": {"type": "MultiPolygon", "coordinates": [[ring]]}}]}
    path = tmp_path / "farms.geojson"
    path.write_text(json.dumps(good))
    layer = load_exclusion_layer(path)
    assert layer.polygons[0][0] == "Hornsea"
    assert layer.covers(1.0, 1.0)

    bad = {"type": "FeatureCollection", "features": [{"type": "Feature", "properties": {}, "geometry": {"type": "Polygon", "coordinates": [ring[:-1]]}}]}
    path.write_text(json.dumps(bad))
    with pytest.raises(LayerLoadError):
        load_exclusion_layer(path)
    with pytest.raises(LayerLoadError):
        load_exclusion_layer(tmp_path / "missing.geojson")


def _jittered_scene(seed: int) -> tuple[list[Detection], int]:
    rng = random.Random(seed)
    ds = []
    n = 30
    for i in range(n):
        x, y = i * 0.01, rng.uniform(0.0, 0.5)
        box = (x, y, x + 0.004, y + 0.004)
        ds.append(det(f"p{i:02d}", box, conf=rng.uniform(0.5, 1.0)))
        dx = rng.uniform(-0.0001, 0.0001)
        ds.append(det(f"q{i:02d}", (box[0] + dx, box[1], box[2] + dx, box[3]), conf=rng.uniform(0.5, 1.0)))
    return ds, n


def test_chip_overlap_duplicates_collapse() -> None:
    ds, n = _jittered_scene(5)
    inventory = consolidate_quarter(ds)
    assert len(inventory.detections) == n
    assert len(consolidate_quarter(ds[::2]).detections) == n


def test_consolidation_is_idempotent() -> None:
    ds, _ = _jittered_scene(9)
    strip = ExclusionLayer([("strip", [[(0.1, -1.0), (0.2, -1.0), (0.2, 1.0), (0.1, 1.0), (0.1, -1.0)]])])
    once = consolidate_quarter(ds, strip)
    assert len(once.detections) == 20
    twice = consolidate_quarter(list(once.detections), strip, quarter=Q)
    assert twice == once


def test_quarter_consistency() -> None:
    with pytest.raises(InputError):
        consolidate_quarter([det("a"), det("b", quarter=Quarter(2021, 4))])
    with pytest.raises(InputError):
        consolidate_quarter([])
    assert consolidate_quarter([], quarter=Q) == QuarterInventory(Q, ())


def test_inventory_files(tmp_path: Path) -> None:
    inventory = consolidate_quarter([det("b", (3, 3, 4, 4)), det("a")])
    path = write_inventory(inventory, tmp_path)
    assert path == inventory_path(tmp_path, Q)
    assert path.name == "inventory_2021Q3.geojson"
    assert read_inventory(path) == inventory

    stray = tmp_path / "inventory_2021Q4.geojson"
    stray.write_bytes(path.read_bytes())
    with pytest.raises(InputError):
        read_inventory(stray)
