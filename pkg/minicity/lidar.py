"""Simulated 2D LiDAR scans and noisy odometry."""
import collections
import math

import numpy as np

from .errors import ParameterError
from .geometry import ray_rect_distance
from .grid import NO_HIT, raycast_many

__all__ = ['LidarScan', 'beam_angles', 'simulate_scan', 'static_ranges', 'noisy_odometry', 'scan_points']

LidarScan = collections.namedtuple('LidarScan', ['timestamp', 'angles', 'ranges'])
LidarScan.__doc__ = """One sweep. angles are in the sensor frame and strictly increasing,
ranges hold NO_HIT where nothing was seen."""


def beam_angles(params):
    """Sensor-frame beam angles, centered on the heading."""
    full = params.fov >= 2.0 * math.pi - 1e-12
    if full:
        return -math.pi + np.arange(params.beams) * (2.0 * math.pi / params.beams)
    if params.beams == 1:
        return np.zeros(1)
    return np.linspace(-params.fov / 2.0, params.fov / 2.0, params.beams)


def static_ranges(grid, pose, params):
    """
    Noise-free ranges to the static world. For a fixed sensor these can be
    computed once and passed to simulate_scan.
    """
    angles = pose.theta + beam_angles(params)
    return raycast_many(grid, (pose.x, pose.y), angles, params.max_range).distance


def simulate_scan(grid, obstacles, pose, params, rng=None, timestamp=0.0, static=None):
    """
    Simulates one scan of the static grid and dynamic rectangles.

    :param grid: OccupancyGrid of the static world
    :param obstacles: iterable of OrientedRect, e.g. vehicle footprints
    :param pose: Pose2D of the sensor
    :param params: LidarParams
    :param rng: numpy Generator for range noise, or None for none
    :param timestamp: float
    :param static: precomputed static_ranges for this pose, optional
    :return: LidarScan
    """
    angles = beam_angles(params)
    world = pose.theta + angles
    ranges = np.array(static, dtype=float) if static is not None else \
        raycast_many(grid, (pose.x, pose.y), world, params.max_range).distance.copy()
    for rect in obstacles:
        ranges = np.minimum(ranges, ray_rect_distance((pose.x, pose.y), world, rect))
    ranges[ranges > params.max_range] = NO_HIT
    if rng is not None and params.range_noise_sigma > 0:
        noise = rng.normal(0.0, params.range_noise_sigma, ranges.size)
        hits = np.isfinite(ranges)
        ranges[hits] += noise[hits]
        ranges[ranges > params.max_range] = NO_HIT
    ranges[ranges < params.min_range] = NO_HIT
    return LidarScan(float(timestamp), angles, ranges)


def noisy_odometry(true_delta, sigmas, rng):
    """
    Odometry reading of a motion: the true (dx, dy, dtheta) plus zero-mean
    Gaussian noise with the given standard deviations.
    """
    sigmas = np.asarray(sigmas, dtype=float)
    if sigmas.shape != (3,) or (sigmas < 0).any():
        raise ParameterError('odometry sigmas must be three non-negative values')
    return tuple(float(v) for v in np.asarray(true_delta, dtype=float) + rng.normal(0.0, 1.0, 3) * sigmas)


def scan_points(scan, pose=None, ranges=None):
    """
    Cartesian return points of the finite beams, in the sensor frame or in
    the world frame when a pose is given.

    :return: (points of shape (n, 2), beam indices of shape (n,))
    """
    r = scan.ranges if ranges is None else ranges
    idx = np.nonzero(np.isfinite(r))[0]
    a = scan.angles[idx] + (0.0 if pose is None else pose.theta)
    x = r[idx] * np.cos(a)
    y = r[idx] * np.sin(a)
    if pose is not None:
        x = x + pose.x
        y = y + pose.y
    return np.column_stack([x, y]), idx
