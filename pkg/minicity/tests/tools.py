import math

import numpy as np

import minicity
from minicity.lidar import LidarScan


def make_grid(shape=(10, 10), resolution=1.0, origin=(0.0, 0.0, 0.0), occupied=(), unknown=()):
    """A free grid of ``shape`` (height, width) with the listed (i, j) cells set."""
    cells = np.full(shape, minicity.FREE, dtype=np.int8)
    for i, j in occupied:
        cells[j, i] = minicity.OCCUPIED
    for i, j in unknown:
        cells[j, i] = minicity.UNKNOWN
    return minicity.OccupancyGrid(cells, resolution, origin)


def make_box_grid(width=20, height=20, resolution=0.1):
    """A free room whose outer ring of cells is occupied."""
    cells = np.full((height, width), minicity.FREE, dtype=np.int8)
    cells[0, :] = cells[-1, :] = minicity.OCCUPIED
    cells[:, 0] = cells[:, -1] = minicity.OCCUPIED
    return minicity.OccupancyGrid(cells, resolution)


def make_random_grid(rng, shape=(16, 16), p_occupied=0.2, p_unknown=0.0):
    u = rng.random(shape)
    cells = np.full(shape, minicity.FREE, dtype=np.int8)
    cells[u < p_occupied] = minicity.OCCUPIED
    cells[(u >= p_occupied) & (u < p_occupied + p_unknown)] = minicity.UNKNOWN
    return minicity.OccupancyGrid(cells, 1.0)


def make_rect(x=0.0, y=0.0, theta=0.0, length=1.0, width=0.5):
    return minicity.OrientedRect(minicity.Pose2D(x, y, theta), length, width)


def make_scan(ranges, fov=2.0 * math.pi, timestamp=0.0):
    """A scan with evenly spread beams, full circle by default."""
    ranges = np.asarray(ranges, dtype=float)
    n = ranges.size
    if fov >= 2.0 * math.pi:
        angles = -math.pi + np.arange(n) * (2.0 * math.pi / n)
    else:
        angles = np.linspace(-fov / 2.0, fov / 2.0, n)
    return LidarScan(timestamp, angles, ranges)


def make_state(x=0.0, y=0.0, theta=0.0, speed=0.0, steer=0.0):
    return minicity.VehicleState(minicity.Pose2D(x, y, theta), speed, steer)


def make_scenario(name='fig1_crossing', **overrides):
    """A bundled scenario with fields replaced."""
    return minicity.Parser(name).parse()._replace(**overrides)


def straight_vehicle(vehicle_id=1, role=minicity.NON_COMM, start=(1.0, 3.2), end=(4.0, 3.2), speed=1.0,
                     approach=None, params=None, spawn_jitter=0.0):
    return minicity.VehicleSpec(vehicle_id, role, params or minicity.make_vehicle_params(),
                                np.array([start, end], dtype=float), speed, approach, spawn_jitter, 0.5)


def quiet_scenario(vehicles, **overrides):
    """The crossing scenario without the roadside unit and with the given vehicles."""
    cfg = make_scenario()
    return cfg._replace(vehicles=tuple(vehicles), infra=cfg.infra._replace(enabled=False), **overrides)
