"""Tests for quantisation, compositing and chipping."""

from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from opdpipe.errors import InvalidValueError, PaddingRequiredError, ShapeError
from opdpipe.raster import (
    GeoTransform,
    Raster,
    RasterKind,
    chip_grid,
    db_to_u8,
    db_to_u8_array,
    extract_chip,
    geo_to_pixel,
    median_composite,
    pad_to_chip,
    pixel_to_geo,
    quantize,
    tile_grid,
    u8_to_db,
)

T = GeoTransform(10.0, 55.0, 0.0001, 0.0001)


def _raster(values, **kwargs) -> Raster:
    return Raster(np.asarray(values, dtype=float), T, **kwargs)


@pytest.mark.parametrize(
    ("db", "level"),
    [(-40.0, 0), (0.0, 255), (-16.5, 150), (-20.0, 128), (-55.0, 0), (3.0, 255)],
)
def test_db_to_u8_anchors(db: float, level: int) -> None:
    assert db_to_u8(db) == level


@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
def test_db_to_u8_rejects_non_finite(bad: float) -> None:
    with pytest.raises(InvalidValueError):
        db_to_u8(bad)


def test_inverse_table_is_monotone_and_round_trips() -> None:
    table = [u8_to_db(level) for level in range(256)]
    assert table[0] == -40.0
    assert table[255] == 0.0
    assert u8_to_db(150) == pytest.approx(-16.47, abs=0.01)
    assert all(a < b for a, b in zip(table, table[1:]))
    assert [db_to_u8(db) for db in table] == list(range(256))


def test_quantisation_error_is_at_most_half_a_step() -> None:
    rng = np.random.default_rng(7)
    samples = rng.uniform(-45.0, 5.0, 2000)
    levels = db_to_u8_array(samples)
    assert [int(v) for v in levels] == [db_to_u8(float(s)) for s in samples]
    clamped = np.clip(samples, -40.0, 0.0)
    back = np.array([u8_to_db(int(v)) for v in levels])
    assert np.all(np.abs(back - clamped) <= 20.0 / 255.0 + 1e-12)
    order = np.argsort(samples)
    assert np.all(np.diff(levels[order].astype(int)) >= 0)


def test_quantize_maps_nodata_to_level_zero() -> None:
    raster = _raster([[-16.5, -9999.0]])
    out = quantize(raster)
    assert out.kind is RasterKind.U8
    assert out.values.tolist() == [[150, 0]]


def test_median_composite_examples() -> None:
    single = _raster([[-12.0, -30.0]])
    assert np.array_equal(median_composite([single]).values, single.values)

    odd = median_composite([_raster([[-30.0]]), _raster([[-30.0]]), _raster([[-10.0]])])
    assert odd.values[0, 0] == -30.0
    even = median_composite([_raster([[-30.0]]), _raster([[-10.0]])])
    assert even.values[0, 0] == -20.0


def test_median_composite_skips_nodata_and_keeps_all_nodata() -> None:
    stack = [_raster([[-9999.0, -9999.0]]), _raster([[-20.0, -9999.0]]), _raster([[-24.0, -9999.0]])]
    out = median_composite(stack)
    assert out.values[0, 0] == -22.0
    assert out.values[0, 1] == -9999.0


def test_median_composite_is_permutation_invariant() -> None:
    rng = np.random.default_rng(3)
    stack = [_raster(rng.normal(-25, 3, (4, 5))) for _ in range(5)]
    reference = median_composite(stack).values
    for perm in itertools.permutations(range(5), 5):
        assert np.array_equal(median_composite([stack[i] for i in perm]).values, reference)


def test_mover_suppression_sweep() -> None:
    for n in range(1, 10):
        for k in range(0, math.ceil(n / 2)):
            stack = [_raster([[-10.0]]) for _ in range(k)] + [_raster([[-30.0]]) for _ in range(n - k)]
            assert median_composite(stack).values[0, 0] == -30.0, (n, k)


def test_median_composite_rejects_bad_stacks() -> None:
    with pytest.raises(ShapeError):
        median_composite([])
    other = Raster(np.zeros((1, 1)) - 20.0, GeoTransform(11.0, 55.0, 0.0001, 0.0001))
    with pytest.raises(ShapeError):
        median_composite([_raster([[-20.0]]), other])


@pytest.mark.parametrize(
    ("width", "expected_cols"),
    [(640, [0]), (1152, [0, 512]), (1300, [0, 512, 660])],
)
def test_chip_grid_offsets(width: int, expected_cols: list) -> None:
    windows = chip_grid(width, 640, tile_id="T")
    assert sorted({w.col0 for w in windows}) == expected_cols
    assert {w.row0 for w in windows} == {0}


def test_chip_grid_covers_every_pixel() -> None:
    width, height = 1900, 1300
    covered = np.zeros((height, width), dtype=bool)
    windows = chip_grid(width, height)
    for w in windows:
        assert w.col0 + w.size <= width and w.row0 + w.size <= height
        covered[w.row0 : w.row0 + w.size, w.col0 : w.col0 + w.size] = True
    assert covered.all()


def test_small_tiles_need_padding() -> None:
    with pytest.raises(PaddingRequiredError):
        chip_grid(600, 700)
    u8 = Raster(np.full((100, 700), 200), T, RasterKind.U8, nodata=None)
    padded = pad_to_chip(u8)
    assert padded.values.shape == (640, 700)
    assert padded.values[100:, :].max() == 0
    assert len(chip_grid(padded.width, padded.height)) == 2


def test_extract_chip_offsets_the_transform() -> None:
    u8 = Raster(np.arange(700 * 640).reshape(640, 700) % 256, T, RasterKind.U8, nodata=None)
    window = chip_grid(700, 640, tile_id="T000000", transform=T)[-1]
    chip = extract_chip(u8, window)
    assert chip.values.shape == (640, 640)
    assert chip.transform.origin_lon == pytest.approx(10.0 + 60 * 0.0001)
    assert chip.values[0, 0] == u8.values[0, 60]


def test_pixel_geo_round_trip() -> None:
    assert pixel_to_geo(T, 0, 0) == (10.0, 55.0)
    lon, lat = pixel_to_geo(T, 100, 50)
    assert lon == pytest.approx(10.01)
    assert lat == pytest.approx(54.995)
    for col, row in [(0, 0), (1, 1), (639, 17), (18000, 18000)]:
        assert geo_to_pixel(T, *pixel_to_geo(T, col, row)) == (col, row)


def test_transform_and_raster_validation() -> None:
    with pytest.raises(InvalidValueError):
        GeoTransform(0.0, 0.0, 0.0, 0.0001)
    with pytest.raises(ShapeError):
        Raster(np.zeros(4), T)
    with pytest.raises(InvalidValueError):
        Raster(np.array([[0, 300]]), T, RasterKind.U8, nodata=None)
    with pytest.raises(InvalidValueError):
        _raster([[math.nan]])


def test_tile_grid_uses_1_8_degree_steps() -> None:
    tiles = tile_grid(0.0, 0.0, 3.6, 1.8, pixel_size=0.01)
    assert [t.tile_id for t in tiles] == ["T000000", "T001000"]
    assert tiles[1].transform.origin_lon == pytest.approx(1.8)
    assert tiles[0].width == 180
