import math
import os
import warnings

import numpy as np
import numpy.testing as npt
import pytest

import minicity
from minicity.tests.tools import make_box_grid, make_grid, make_random_grid


def _oracle(grid, origin, angle, max_range, step=1e-4):
    """First occupied cell along a finely sampled ray."""
    t = np.arange(0.0, max_range, step)
    x = origin[0] + t * math.cos(angle)
    y = origin[1] + t * math.sin(angle)
    i, j = grid.world_to_cell(x, y)
    inside = grid.contains_cell(i, j)
    if not inside.all():
        last = int(np.argmin(inside))
        t, i, j = t[:last], i[:last], j[:last]
    hit = grid.occupied()[j, i]
    return float(t[np.argmax(hit)]) if hit.any() else np.inf


def test_world_cell_round_trip():
    grid = make_grid(shape=(5, 8), resolution=0.25, origin=(1.0, -2.0, 0.0))
    i, j = np.meshgrid(np.arange(8), np.arange(5))
    x, y = grid.cell_center(i, j)
    ii, jj = grid.world_to_cell(x, y)
    npt.assert_array_equal(ii, i)
    npt.assert_array_equal(jj, j)


def test_cells_are_read_only():
    grid = make_grid()
    with pytest.raises(ValueError):
        grid.cells()[0, 0] = minicity.OCCUPIED


def test_grid_rejects_bad_values():
    with pytest.raises(minicity.ParameterError):
        minicity.OccupancyGrid(np.full((3, 3), 5), 1.0)
    with pytest.raises(minicity.ParameterError):
        minicity.OccupancyGrid(np.zeros((3, 3)), 0.0)


def test_raycast_hits_wall_entry():
    grid = make_grid(occupied=[(5, j) for j in range(10)])
    result = minicity.raycast(grid, (0.5, 0.5), 0.0, 20.0)
    npt.assert_almost_equal(result.distance, 4.5)
    assert not result.blocked


def test_raycast_leaving_grid_or_range_is_no_hit():
    grid = make_grid(occupied=[(5, j) for j in range(10)])
    assert minicity.raycast(grid, (0.5, 0.5), math.pi, 20.0).distance == minicity.NO_HIT
    assert minicity.raycast(grid, (0.5, 0.5), 0.0, 3.0).distance == minicity.NO_HIT


def test_raycast_corner_crossing_steps_x_first():
    grid = make_grid(occupied=[(1, 1)])
    result = minicity.raycast(grid, (0.5, 0.5), math.pi / 4, 10.0)
    npt.assert_almost_equal(result.distance, 0.5 * math.sqrt(2.0))


def test_raycast_from_occupied_origin_is_blocked():
    grid = make_grid(occupied=[(0, 0)])
    result = minicity.raycast_many(grid, (0.5, 0.5), [0.0, 1.0], 5.0)
    npt.assert_array_equal(result.distance, [0.0, 0.0])
    assert result.blocked.all()


def test_raycast_origin_outside_raises():
    with pytest.raises(minicity.ParameterError):
        minicity.raycast(make_grid(), (-1.0, 0.5), 0.0, 5.0)


def test_raycast_matches_sampled_oracle():
    rng = np.random.default_rng(11)
    for _ in range(10):
        grid = make_random_grid(rng, p_occupied=0.1)
        free = np.argwhere(~grid.occupied())
        j, i = free[rng.integers(len(free))]
        origin = (i + rng.uniform(0.1, 0.9), j + rng.uniform(0.1, 0.9))
        angles = rng.uniform(-math.pi, math.pi, 8)
        result = minicity.raycast_many(grid, origin, angles, 12.0)
        for angle, distance in zip(angles, result.distance):
            expected = _oracle(grid, origin, angle, 12.0)
            if np.isinf(expected):
                assert np.isinf(distance)
            else:
                npt.assert_allclose(distance, expected, atol=2e-4)


def test_raycast_more_obstacles_never_lengthen_rays():
    rng = np.random.default_rng(5)
    for _ in range(20):
        grid = make_random_grid(rng, p_occupied=0.05)
        free = np.argwhere(~grid.occupied())
        j, i = free[rng.integers(len(free))]
        origin = (i + 0.5, j + 0.5)
        cells = np.array(grid.cells())
        extra = rng.random(cells.shape) < 0.1
        extra[j, i] = False
        cells[extra] = minicity.OCCUPIED
        denser = minicity.OccupancyGrid(cells, grid.resolution())
        angles = rng.uniform(-math.pi, math.pi, 32)
        before = minicity.raycast_many(grid, origin, angles, 12.0).distance
        after = minicity.raycast_many(denser, origin, angles, 12.0).distance
        assert (after <= before).all()


def test_raycast_along_cell_boundaries_is_quiet():
    grid = make_grid(occupied=[(7, 3), (3, 8)])
    with warnings.catch_warnings():
        warnings.simplefilter('error')
        result = minicity.raycast_many(grid, (3.0, 3.0), [0.0, math.pi / 2, math.pi], 20.0)
    npt.assert_allclose(result.distance[:2], [4.0, 5.0])
    assert result.distance[2] == minicity.NO_HIT


def test_distance_to_occupied():
    grid = make_grid(occupied=[(5, 5)])
    npt.assert_allclose(grid.distance_to_occupied([2.0, 5.5], [5.5, 5.5]), [3.0, 0.0])
    assert np.isinf(make_grid().distance_to_occupied(1.0, 1.0)).all()


def test_log_odds_threshold():
    grid = minicity.LogOddsGrid(3, 1, 1.0, log_odds=[[3.0, 0.0, -3.0]])
    npt.assert_array_equal(grid.threshold(2.0, -2.0).cells(), [[minicity.OCCUPIED, minicity.UNKNOWN, minicity.FREE]])
    with pytest.raises(minicity.ParameterError):
        grid.threshold(-1.0, 1.0)


def test_grid_file_round_trip(tmp_path):
    grid = make_grid(shape=(4, 6), resolution=0.05, origin=(0.5, 0.25, 0.0), occupied=[(1, 2)], unknown=[(5, 3)])
    path = str(tmp_path / 'map.pgm')
    minicity.write_grid(grid, path)
    assert os.path.exists(minicity.meta_path(path))
    assert minicity.read_grid(path) == grid


def test_grid_file_pixel_orientation(tmp_path):
    grid = make_grid(shape=(2, 2), occupied=[(0, 1)])
    path = str(tmp_path / 'map.pgm')
    minicity.write_grid(grid, path)
    with open(path, 'rb') as fh:
        pixels = fh.read()[-4:]
    # first image row is the top of the map
    assert list(pixels) == [0, 255, 255, 255]


def test_grid_file_errors(tmp_path):
    path = str(tmp_path / 'map.pgm')
    minicity.write_grid(make_box_grid(4, 4, 1.0), path)
    os.remove(minicity.meta_path(path))
    with pytest.raises(minicity.GridFormatError):
        minicity.read_grid(path)
    with open(path, 'wb') as fh:
        fh.write(b'P5\n2 1\n255\n\x07')
    with open(minicity.meta_path(path), 'w') as fh:
        fh.write('resolution: 1.0\n')
    with pytest.raises(minicity.GridFormatError):
        minicity.read_grid(path)
    with open(path, 'wb') as fh:
        fh.write(b'P5\n2 1\n255\n\x07\x00')
    with open(minicity.meta_path(path), 'w') as fh:
        fh.write('origin_x: 0.0\n')
    with pytest.raises(minicity.GridFormatError):
        minicity.read_grid(path)
    with open(minicity.meta_path(path), 'w') as fh:
        fh.write('resolution: 1.0\nencoding: rgb\n')
    with pytest.raises(minicity.GridFormatError):
        minicity.read_grid(path)


def _write_foreign_map(path, pixels, resolution):
    height, width = pixels.shape
    with open(path, 'wb') as fh:
        fh.write('P5\n{} {}\n255\n'.format(width, height).encode('ascii'))
        fh.write(pixels.astype(np.uint8).tobytes())
    with open(minicity.meta_path(path), 'w') as fh:
        fh.write('resolution: {!r}\n'.format(resolution))


def test_foreign_map_grey_is_free(tmp_path):
    path = str(tmp_path / 'exported.pgm')
    _write_foreign_map(path, np.array([[0, 205, 128], [254, 255, 0]]), 0.05)
    grid = minicity.read_grid(path)
    free, occupied = minicity.FREE, minicity.OCCUPIED
    npt.assert_array_equal(grid.cells(), [[free, free, occupied], [occupied, free, free]])
    assert not (grid.cells() == minicity.UNKNOWN).any()


def test_ternary_map_keeps_unknown_cells(tmp_path):
    path = str(tmp_path / 'written.pgm')
    minicity.write_grid(make_grid(shape=(1, 3), unknown=[(1, 0)]), path)
    with open(path, 'r+b') as fh:
        fh.seek(-1, os.SEEK_END)
        fh.write(b'\xcd')
    cells = minicity.read_grid(path).cells()
    npt.assert_array_equal(cells, [[minicity.FREE, minicity.UNKNOWN, minicity.FREE]])


def test_full_size_map_bounds(tmp_path):
    path = str(tmp_path / 'city.pgm')
    pixels = np.full((1224, 1584), 205)
    pixels[0, :] = 0
    _write_foreign_map(path, pixels, 0.00515)
    grid = minicity.read_grid(path)
    assert grid.shape() == (1224, 1584)
    npt.assert_allclose(grid.width() * grid.resolution(), 8.1576)
    npt.assert_allclose(grid.height() * grid.resolution(), 6.3036)
    # top image row is the largest y
    assert grid.occupied()[-1].all() and grid.occupied().sum() == 1584


def test_build_city_ignores_building_order():
    layout = minicity.load_layout('default_city')
    grid = minicity.build_city(layout, 0.1)
    reordered = minicity.build_city(layout._replace(buildings=layout.buildings[::-1]), 0.1)
    npt.assert_array_equal(reordered.cells(), grid.cells())
    cells = grid.cells()
    assert (cells[0] == minicity.OCCUPIED).all() and (cells[:, -1] == minicity.OCCUPIED).all()
    assert not (cells == minicity.UNKNOWN).any()
    with pytest.raises(minicity.ParameterError):
        minicity.build_city(layout, 0.0)
