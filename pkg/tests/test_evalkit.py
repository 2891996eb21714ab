from __future__ import annotations

import json
import random
from pathlib import Path

import pytest

from opdpipe.enrich import Zone, ZoneKind, ZoneLayer
from opdpipe.errors import ConfigError, InputError
from opdpipe.evalkit import (
    ALL,
    MatchConfig,
    Prediction,
    RegionMetrics,
    aggregate,
    compare_datasets,
    evaluate,
    match,
    read_predictions,
    read_truth,
    write_report,
)
from opdpipe.geometry import GeoBox, iou


def box(x: float, y: float, size: float = 1.0) -> GeoBox:
    return GeoBox(x, y, x + size, y + size)


def test_perfect_predictions_score_one() -> None:
    truth = [box(0, 0), box(5, 5), box(10, 0)]
    preds = [Prediction(f"p{i}", b, 0.9) for i, b in enumerate(truth)]
    result = match(preds, truth)
    assert (result.tp, result.fp, result.fn) == (3, 0, 0)
    report = evaluate(preds, truth)
    assert report.micro.precision == report.micro.recall == report.micro.f1 == 1.0


def test_simple_match_examples() -> None:
    assert (match([], [box(0, 0)]).fn, match([], [box(0, 0)]).tp) == (1, 0)
    two_on_one = [Prediction("a", box(0, 0), 0.9), Prediction("b", box(0.1, 0), 0.8)]
    result = match(two_on_one, [box(0, 0)])
    assert (result.tp, result.fp, result.fn) == (1, 1, 0)
    assert result.pairs == (("a", 0),)


def test_confidence_gate_and_ties() -> None:
    preds = [Prediction("b", box(0, 0), 0.7), Prediction("a", box(0, 0), 0.7), Prediction("low", box(5, 5), 0.3)]
    result = match(preds, [box(0, 0), box(5, 5)])
    assert result.pairs == (("a", 0),)
    assert (result.tp, result.fp, result.fn) == (1, 1, 1)
    unscored = match(preds, [box(0, 0), box(5, 5)], MatchConfig(conf_min=None))
    assert unscored.tp == 2


def _optimal_tp(preds: list[GeoBox], truth: list[GeoBox], iou_min: float) -> int:
    edges = [[j for j, t in enumerate(truth) if iou(p, t) >= iou_min] for p in preds]

    def best(i: int, used: frozenset) -> int:
        if i == len(preds):
            return 0
        result = best(i + 1, used)
        for j in edges[i]:
            if j not in used:
                result = max(result, 1 + best(i + 1, used | {j}))
        return result

    return best(0, frozenset())


def test_greedy_against_exhaustive_assignment() -> None:
    rng = random.Random(42)
    checked_unique = 0
    for _ in range(3000):
        n_pred, n_truth = rng.randint(0, 6), rng.randint(0, 6)
        preds = [Prediction(f"p{i}", box(rng.uniform(0, 2), rng.uniform(0, 2)), rng.uniform(0.5, 1.0)) for i in range(n_pred)]
        truth = [box(rng.uniform(0, 2), rng.uniform(0, 2)) for _ in range(n_truth)]
        greedy = match(preds, truth).tp
        optimal = _optimal_tp([p.box for p in preds], truth, 0.3)
        assert greedy <= optimal
        if all(sum(iou(p.box, t) >= 0.3 for t in truth) <= 1 for p in preds):
            assert greedy == optimal
            checked_unique += 1
        result = match(preds, truth)
        assert result.tp + result.fn == n_truth
        assert result.tp + result.fp == n_pred
    assert checked_unique > 100


def test_metrics_are_translation_invariant() -> None:
    rng = random.Random(1)
    truth = [box(rng.uniform(0, 3), rng.uniform(0, 3)) for _ in range(6)]
    preds = [Prediction(f"p{i}", box(rng.uniform(0, 3), rng.uniform(0, 3)), 0.9) for i in range(6)]
    moved_truth = [t.translate(40.0, 20.0) for t in truth]
    moved_preds = [Prediction(p.id, p.box.translate(40.0, 20.0), p.confidence) for p in preds]
    assert match(preds, truth).tp == match(moved_preds, moved_truth).tp


def test_macro_aggregation_anchor() -> None:
    report = aggregate([("PG", 37, 3, 3), ("GOM", 217, 33, 33), ("NS", 43, 7, 7)])
    assert report.per_region["PG"].f1 == pytest.approx(0.925)
    assert report.per_region["GOM"].f1 == pytest.approx(0.868)
    assert report.per_region["NS"].f1 == pytest.approx(0.860)
    assert report.macro_f1 == pytest.approx(0.884, abs=5e-4)


def test_micro_metrics_from_pooled_counts() -> None:
    micro = aggregate([("A", 50, 4, 6), ("B", 40, 6, 5)]).micro
    assert (micro.tp, micro.fp, micro.fn) == (90, 10, 11)
    assert micro.precision == pytest.approx(0.9)
    assert micro.recall == pytest.approx(0.891, abs=5e-4)
    assert micro.f1 == pytest.approx(0.896, abs=5e-4)
    single = aggregate([("A", 5, 1, 2)])
    assert single.macro_f1 == single.micro_f1 == single.per_region["A"].f1


def test_degenerate_denominators() -> None:
    assert RegionMetrics.from_counts("x", 0, 0, 3).f1 == 0.0
    empty = RegionMetrics.from_counts("x", 0, 0, 0)
    assert (empty.precision, empty.recall, empty.f1) == (1.0, 1.0, 1.0)
    with pytest.raises(InputError):
        aggregate([])


def test_match_config_bounds() -> None:
    with pytest.raises(ConfigError):
        MatchConfig(iou_min=0.0)
    with pytest.raises(ConfigError):
        MatchConfig(conf_min=1.5)


def test_point_in_box_prefers_nearest_truth_centre() -> None:
    truth = [box(0, 0, 6), box(1, 1, 2)]
    preds = [Prediction("p", box(1.9, 1.9, 0.2), 0.9)]
    cfg = MatchConfig(point_in_box=True)
    assert match(preds, truth, cfg).pairs == (("p", 1),)
    assert match([Prediction("q", box(9, 9, 0.2), 0.9)], truth, cfg).fn == 2


def _regions() -> ZoneLayer:
    def square(x0: float) -> tuple:
        ring = ((x0, 0.0), (x0 + 10.0, 0.0), (x0 + 10.0, 10.0), (x0, 10.0), (x0, 0.0))
        return ((ring,),)

    return ZoneLayer([Zone("NS", None, square(0.0)), Zone("PG", None, square(20.0)), Zone("GOM", None, square(40.0))], ZoneKind.REGION)


def test_per_region_evaluation_skips_empty_regions(caplog) -> None:
    truth = [box(1, 1), box(21, 1), box(80, 80)]
    preds = [Prediction("a", box(1, 1), 0.9), Prediction("b", box(25, 5), 0.9)]
    report = evaluate(preds, truth, MatchConfig(), _regions())
    assert sorted(report.per_region) == ["NS", "PG"]
    assert report.per_region["NS"].f1 == 1.0
    assert report.per_region["PG"].f1 == 0.0
    assert report.macro_f1 == 0.5
    assert "outside every region" in caplog.text
    with pytest.raises(InputError):
        evaluate([], [box(80, 80)], MatchConfig(), _regions())


def test_region_with_only_predictions_counts_in_macro_f1() -> None:
    report = evaluate([Prediction("a", box(1, 1), 0.9), Prediction("b", box(21, 1), 0.9)], [box(1, 1)], MatchConfig(), _regions())
    assert sorted(report.per_region) == ["NS", "PG"]
    assert (report.per_region["PG"].tp, report.per_region["PG"].fp, report.per_region["PG"].fn) == (0, 1, 0)
    assert report.per_region["PG"].f1 == 0.0
    assert report.macro_f1 == 0.5


def test_files_and_report(tmp_path: Path) -> None:
    preds_path = tmp_path / "preds.geojson"
    preds_path.write_text(
        json.dumps(
            {
                "type": "FeatureCollection",
                "features": [
                    {"type": "Feature", "properties": {"id": "x", "confidence": 0.8}, "geometry": {"type": "Polygon", "coordinates": [[[0, 0], [1, 0], [1, 1], [0, 1], [0, 0]]]}},
                    {"type": "Feature", "properties": {}, "geometry": {"type": "Point", "coordinates": [5.5, 5.5]}},
                ],
            }
        )
    )
    truth_path = tmp_path / "truth.geojson"
    truth_path.write_text(
        json.dumps(
            {
                "type": "FeatureCollection",
                "features": [
                    {"type": "Feature", "properties": {}, "geometry": {"type": "Polygon", "coordinates": [[[0, 0], [1, 0], [1, 1], [0, 1], [0, 0]]]}},
                    {"type": "Feature", "properties": {}, "geometry": {"type": "Polygon", "coordinates": [[[5, 5], [6, 5], [6, 6], [5, 6], [5, 5]]]}},
                ],
            }
        )
    )
    preds = read_predictions(preds_path)
    assert preds[1].id == "pred-000001" and preds[1].confidence is None
    assert preds[1].box.max_lon - preds[1].box.min_lon == pytest.approx(2e-7)
    truth = read_truth(truth_path)
    cfg = MatchConfig(point_in_box=True)
    reports = compare_datasets({"ours": preds}, truth, cfg)
    assert reports["ours"].micro.tp == 2
    path = write_report(reports, tmp_path / "eval" / "report.json", cfg)
    payload = json.loads(path.read_text())
    assert payload["config"]["point_in_box"] is True
    assert payload["datasets"]["ours"]["per_region"][ALL]["tp"] == 2
