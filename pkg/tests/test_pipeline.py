import json

import pytest

from opdpipe.config import RunConfig
from opdpipe.errors import EXIT_CONFIG, EXIT_INPUT, InputError, StageError, exit_code_for
from opdpipe.opd import OpdProduct, read_opd
from opdpipe.pipeline import input_files, run_pipeline, sha256_file
from opdpipe.quarters import Quarter
from opdpipe.simkit import SimPlatform, SimSpec, write_simulation
from opdpipe.tracklink import read_tracks

Q = Quarter.parse


@pytest.fixture(scope="module")
def simulation(tmp_path_factory):
    spec = SimSpec(
        seed=21,
        start=Q("2017Q1"),
        end=Q("2018Q2"),
        platforms=(
            SimPlatform((120, 80), (6, 5), Q("2017Q1"), Q("2018Q2"), -9.0, name="steady"),
            SimPlatform((500, 200), (8, 8), Q("2017Q3"), Q("2018Q1"), -12.0, (Q("2017Q4"),), name="late"),
        ),
    )
    return write_simulation(spec, tmp_path_factory.mktemp("sim"))


def _config(simulation, out, **kw):
    return RunConfig(
        scene_manifest=str(simulation.scene_manifest),
        detections_dir=str(simulation.root / "detections"),
        output_dir=str(out),
        **kw,
    )


def test_full_run_recovers_the_simulated_platforms(simulation, tmp_path):
    report = run_pipeline(_config(simulation, tmp_path / "run"))
    assert list(report.results) == ["composite", "chip", "ingest", "consolidate", "link", "enrich", "stats", "export"]
    assert all(r.success for r in report.results.values())

    tracks = read_tracks(report.layout.tracks)
    assert len(tracks) == 2
    spans = sorted((str(t.first), str(t.last)) for t in tracks)
    assert spans == [("2017Q1", "2018Q2"), ("2017Q3", "2018Q1")]

    quarterly = read_opd(report.layout.products / "opd_quarterly.csv", OpdProduct.QUARTERLY)
    assert len(quarterly) == 6 + 3
    assert (report.layout.tables / "schema.json").exists()
    assert (report.layout.root / "run.log").read_text(encoding="utf-8")


def test_manifest_lists_inputs_and_outputs(simulation, tmp_path):
    report = run_pipeline(_config(simulation, tmp_path / "run"))
    manifest = json.loads(report.manifest_path.read_text(encoding="utf-8"))
    assert set(manifest) == {"config", "versions", "stages", "inputs", "outputs"}
    assert manifest["config"]["iou_link"] == 0.1
    assert str(simulation.scene_manifest.resolve().as_posix()) in manifest["inputs"]
    assert "tracks.geojson" in manifest["outputs"]
    assert manifest["outputs"]["tracks.geojson"] == sha256_file(report.layout.tracks)


def test_runs_are_reproducible_across_worker_counts(simulation, tmp_path):
    one = run_pipeline(_config(simulation, tmp_path / "one", workers=1))
    two = run_pipeline(_config(simulation, tmp_path / "two", workers=3))
    outputs_one = json.loads(one.manifest_path.read_text(encoding="utf-8"))["outputs"]
    outputs_two = json.loads(two.manifest_path.read_text(encoding="utf-8"))["outputs"]
    assert outputs_one == outputs_two


def test_manifest_is_byte_identical_on_rerun(simulation, tmp_path):
    first = run_pipeline(_config(simulation, tmp_path / "run")).manifest_path.read_bytes()
    second = run_pipeline(_config(simulation, tmp_path / "run")).manifest_path.read_bytes()
    assert first == second


def test_rerun_into_same_directory_drops_stale_unit_files(simulation, tmp_path):
    config = _config(simulation, tmp_path / "run")
    first = run_pipeline(config)
    stale_detections = first.layout.detections / "T9_2016Q4.geojson"
    stale_detections.write_text('{"type": "FeatureCollection", "features": []}\n', encoding="utf-8")
    stale_inventory = first.layout.inventories / "inventory_2016Q4.geojson"
    stale_inventory.write_bytes((first.layout.inventories / "inventory_2017Q1.geojson").read_bytes())

    second = run_pipeline(config)
    assert not stale_detections.exists()
    assert not stale_inventory.exists()
    assert len(list(second.layout.inventories.glob("inventory_*.geojson"))) == 6
    assert len(read_tracks(second.layout.tracks)) == 2


def test_missing_layers_are_warned_about(simulation, tmp_path, caplog):
    with caplog.at_level("WARNING"):
        report = run_pipeline(_config(simulation, tmp_path / "run"))
    assert "No bathymetry layer supplied" in caplog.text
    assert "No exclusion layer configured" in caplog.text
    assert "Skipping dist_depth_m.csv" in caplog.text
    assert "bathymetry" in report.results["enrich"].output


def test_input_files_cover_scenes_and_chip_files(simulation, tmp_path):
    config = _config(simulation, tmp_path)
    files = input_files(config)
    assert sum(1 for p in files if p.suffix == ".asc") >= 6 * 3
    assert any(p.suffix == ".txt" for p in files)
    assert files == sorted(files, key=lambda p: p.as_posix())


def test_missing_scene_manifest_is_an_input_error(tmp_path):
    config = RunConfig(scene_manifest=str(tmp_path / "absent.csv"), output_dir=str(tmp_path / "run"))
    with pytest.raises(InputError) as excinfo:
        input_files(config)
    assert exit_code_for(excinfo.value) == EXIT_INPUT


def test_failing_stage_aborts_the_run(simulation, tmp_path):
    config = RunConfig(scene_manifest=str(simulation.scene_manifest), output_dir=str(tmp_path / "run"))
    with pytest.raises(StageError) as excinfo:
        run_pipeline(config)
    assert excinfo.value.stage == "ingest"
    assert "detections directory" in str(excinfo.value)
    assert exit_code_for(excinfo.value) == EXIT_CONFIG
