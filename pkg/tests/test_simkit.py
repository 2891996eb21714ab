import json

import pytest

from opdpipe.asciigrid import read_ascii_grid, read_scene_manifest
from opdpipe.consolidate import consolidate_quarter
from opdpipe.detections import ingest_texts, read_ingest_manifest
from opdpipe.errors import SimSpecError
from opdpipe.quarters import Quarter
from opdpipe.raster import RasterKind
from opdpipe.simkit import (
    SimPlatform,
    SimShip,
    SimSpec,
    compare_tracks,
    dump_sim_spec,
    expected_truth,
    generate,
    load_sim_spec,
    random_spec,
    scene_stack,
    spec_from_mapping,
    verify_roundtrip,
    write_simulation,
)
from opdpipe.tracklink import LifespanCategory

Q = Quarter.parse


def _platform(name="p000", center=(100, 100), size=(6, 6), birth="2017Q1", death="2017Q4", **kw):
    return SimPlatform(center=center, size=size, birth=Q(birth), death=Q(death), brightness=-10.0, name=name, **kw)


def _short_spec(**kw):
    kw.setdefault("platforms", (_platform(),))
    return SimSpec(seed=7, start=Q("2017Q1"), end=Q("2017Q4"), **kw)


def test_spec_validation_collects_every_problem():
    with pytest.raises(SimSpecError) as excinfo:
        SimSpec(
            seed=1,
            scenes_min=4,
            scenes_max=2,
            sea_mean=-10.0,
            platforms=(SimPlatform((1, 1), (6, 6), Q("2017Q1"), Q("2017Q2"), -30.0, name="edge"),),
        )
    message = str(excinfo.value)
    assert "scenes_min" in message
    assert "sea_mean" in message
    assert "edge: brightness" in message
    assert "footprint leaves the tile" in message


def test_touching_platforms_rejected():
    with pytest.raises(SimSpecError, match="touch or overlap"):
        _short_spec(platforms=(_platform("a", (100, 100)), _platform("b", (106, 100))))


def test_dark_quarter_must_be_inside_life():
    with pytest.raises(SimSpecError, match="dark quarters"):
        _short_spec(platforms=(_platform(dark_quarters=(Q("2017Q1"),)),))


def test_ship_scene_count_bounded_by_median_majority():
    ship = SimShip(center=(300, 100), size=(4, 4), quarter=Q("2017Q2"), brightness=-4.0, scenes=2)
    with pytest.raises(SimSpecError, match="scenes 2 outside 1..1"):
        _short_spec(ships=(ship,))
    spec = _short_spec(ships=(ship,), scenes_min=9, scenes_max=9)
    assert spec.ships == (ship,)


def test_ship_in_two_of_nine_scenes_leaves_no_detection():
    ship = SimShip(center=(300, 100), size=(4, 4), quarter=Q("2017Q2"), brightness=-4.0, scenes=2)
    spec = _short_spec(ships=(ship,), scenes_min=9, scenes_max=9)

    stack = scene_stack(spec, Q("2017Q2"))
    assert len(stack) == 9
    assert sum(1 for scene in stack if scene.values[100, 300] == -4.0) == 2

    report = verify_roundtrip(spec)
    assert report.ok, report.diffs
    assert report.recovered_tracks == 1


def test_scene_stack_is_reproducible_per_quarter():
    spec = _short_spec()
    a = scene_stack(spec, Q("2017Q3"))
    b = scene_stack(spec, Q("2017Q3"))
    assert all((x.values == y.values).all() for x, y in zip(a, b))
    assert not (scene_stack(spec, Q("2017Q2"))[0].values == a[0].values).all()


def test_expected_truth_counts_and_categories():
    spec = _short_spec(
        platforms=(
            _platform("a", (100, 100), dark_quarters=(Q("2017Q2"),)),
            _platform("b", (300, 100), birth="2017Q3", death="2017Q3"),
        )
    )
    truth = expected_truth(spec)
    assert truth.counts == (1, 1, 2, 1)
    a, b = truth.tracks
    assert a.observed == (Q("2017Q1"), Q("2017Q3"), Q("2017Q4"))
    assert a.category is LifespanCategory.SHORT
    assert b.first == b.last == Q("2017Q3")


def test_full_study_window_platform_is_full_span():
    spec = SimSpec(seed=3, platforms=(_platform(birth="2017Q1", death="2025Q1"),))
    (track,) = expected_truth(spec).tracks
    assert track.category is LifespanCategory.FULL_SPAN


def test_dark_quarter_bridged_in_round_trip():
    spec = _short_spec(platforms=(_platform(dark_quarters=(Q("2017Q2"), Q("2017Q3"))),))
    report = verify_roundtrip(spec)
    assert report.ok, report.diffs
    (track,) = report.tracks
    assert track.observed == (Q("2017Q1"), Q("2017Q4"))


def test_relocation_yields_two_tracks():
    spec = _short_spec(
        platforms=(
            _platform("old", (100, 100), death="2017Q2"),
            _platform("new", (400, 150), birth="2017Q3"),
        )
    )
    report = verify_roundtrip(spec)
    assert report.ok, report.diffs
    assert report.recovered_tracks == 2


def test_round_trip_reports_differences():
    spec = _short_spec()
    wrong = SimSpec(seed=7, start=spec.start, end=spec.end, platforms=(_platform(death="2017Q3"),))
    report = verify_roundtrip(spec)
    assert report.ok

    diffs = compare_tracks(expected_truth(wrong), report.tracks)
    assert any("span" in d for d in diffs)


@pytest.mark.parametrize("seed", range(100))
def test_random_specs_round_trip_without_differences(seed):
    spec = random_spec(seed, max_platforms=50)
    report = verify_roundtrip(spec)
    assert report.diffs == []
    assert report.recovered_tracks == len(spec.platforms)


def test_random_spec_is_seeded():
    assert random_spec(11) == random_spec(11)
    assert random_spec(11) != random_spec(12)


def test_consolidation_is_idempotent_on_simulated_detections():
    output = generate(random_spec(5, max_platforms=20))
    q = output.spec.quarters[10]
    detections = ingest_texts(output.spec.tile_id, q, output.composites[q], output.chips[q])
    once = consolidate_quarter(detections, quarter=q)
    twice = consolidate_quarter(list(once.detections), quarter=q)
    assert [d.id for d in twice.detections] == [d.id for d in once.detections]
    assert len(once.detections) == sum(1 for p in output.spec.platforms if p.visible(q))


def test_spec_yaml_round_trip(tmp_path):
    spec = random_spec(4, max_platforms=10)
    path = dump_sim_spec(spec, tmp_path / "spec.yaml")
    assert load_sim_spec(path) == spec


def test_spec_from_mapping_rejects_unknown_keys_and_missing_seed():
    with pytest.raises(SimSpecError, match="Unknown simulation spec keys"):
        spec_from_mapping({"seed": 1, "colour": "blue"})
    with pytest.raises(SimSpecError, match="needs a seed"):
        spec_from_mapping({"tile_width": 100})
    with pytest.raises(SimSpecError, match="Malformed"):
        spec_from_mapping({"seed": 1, "platforms": [{"center": [1, 2]}]})


def test_load_sim_spec_missing_file(tmp_path):
    with pytest.raises(SimSpecError, match="not found"):
        load_sim_spec(tmp_path / "nope.yaml")


def test_write_simulation_layout(tmp_path):
    spec = _short_spec(scenes_min=3, scenes_max=3)
    files = write_simulation(spec, tmp_path / "sim")

    scenes = read_scene_manifest(files.scene_manifest)
    assert len(scenes) == 4
    assert all(len(paths) == 3 for paths in scenes.values())

    units = read_ingest_manifest(files.ingest_manifest)
    assert [u.quarter for u in units] == spec.quarters
    composite = read_ascii_grid(units[0].composite_path, kind=RasterKind.U8)
    assert composite.width == spec.tile_width
    assert list(units[0].detections_path.glob("*.txt"))

    truth = json.loads(files.truth.read_text(encoding="utf-8"))
    assert truth["counts"] == [1, 1, 1, 1]
    assert truth["tracks"][0]["category"] == "SHORT"
    assert load_sim_spec(files.spec) == spec
