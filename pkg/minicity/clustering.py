"""
Segmentation of range scans into objects by the angle between adjacent
returns, and removal of segments that belong to the static map.
"""
import collections
import math

import numpy as np

from .errors import ParameterError
from .lidar import scan_points

__all__ = ['Cluster', 'beta_angle', 'depth_cluster', 'filter_static']

Cluster = collections.namedtuple('Cluster', ['start', 'stop', 'indices', 'centroid', 'count'])
Cluster.__doc__ = """A run of adjacent beams.

start and stop are the first and last beam index; start > stop when the
run wraps past the end of a full-circle scan. centroid is in the world
frame when the scan was clustered with a pose, else in the sensor frame."""


def beta_angle(r_a, r_b, alpha):
    """
    Angle at the farther return between the line joining both returns and
    the farther beam. Large values mean the two returns lie on one surface.

    :param r_a, r_b: ranges of two neighbouring beams
    :param alpha: angular spacing between the beams
    """
    r1 = np.maximum(r_a, r_b)
    r2 = np.minimum(r_a, r_b)
    return np.arctan2(r2 * np.sin(alpha), r1 - r2 * np.cos(alpha))


def depth_cluster(scan, angle_threshold=math.radians(10.0), min_cluster_size=3, pose=None):
    """
    Splits a scan into clusters of adjacent beams whose returns satisfy
    the beta criterion. A NO_HIT beam always breaks a cluster. Full-circle
    scans are treated as cyclic.

    :param scan: LidarScan
    :param angle_threshold: float in (0, pi/2)
    :param min_cluster_size: smallest number of beams kept as a cluster
    :param pose: Pose2D of the sensor, or None for sensor-frame centroids
    :return: list of Cluster ordered by first beam
    """
    if not 0 < angle_threshold < math.pi / 2:
        raise ParameterError('angle_threshold must lie in (0, pi/2)')
    if min_cluster_size < 1:
        raise ParameterError('min_cluster_size must be at least 1')
    r = np.asarray(scan.ranges, dtype=float)
    n = r.size
    if n == 0:
        return []
    valid = np.isfinite(r)
    angles = np.asarray(scan.angles, dtype=float)

    # link[k] joins beam k with beam k + 1 (and the last beam with the first)
    nxt = np.roll(np.arange(n), -1)
    alpha = np.abs(np.diff(np.append(angles, angles[0] + 2.0 * math.pi)))
    span = angles[-1] - angles[0] + (alpha[-1] if n > 1 else 0.0)
    cyclic = n > 1 and abs(span - 2.0 * math.pi) < 1e-6 and alpha[-1] <= alpha[:-1].max() + 1e-9
    with np.errstate(invalid='ignore'):
        beta = beta_angle(r, r[nxt], alpha)
    link = valid & valid[nxt] & (beta > angle_threshold)
    if not cyclic:
        link[-1] = False

    points, idx = scan_points(scan, pose)
    point_of = np.full(n, -1)
    point_of[idx] = np.arange(idx.size)

    if link.all():
        runs = [np.arange(n)]
    else:
        # rotate so that a break sits at the end, then cut at every break
        first = int(np.argmin(link)) + 1 if cyclic else 0
        order = np.roll(np.arange(n), -first)
        breaks = np.nonzero(~link[order])[0]
        runs = np.split(order, breaks + 1)
    clusters = []
    for run in runs:
        run = run[valid[run]]
        if run.size < min_cluster_size:
            continue
        centroid = points[point_of[run]].mean(axis=0)
        clusters.append(Cluster(int(run[0]), int(run[-1]), run, centroid, int(run.size)))
    clusters.sort(key=lambda c: c.start)
    return clusters


def filter_static(clusters, background, margin):
    """
    Drops clusters whose centroid lies within ``margin`` of an occupied
    cell of the static background map.

    :param clusters: list of Cluster with world-frame centroids
    :param background: OccupancyGrid
    :param margin: float >= 0
    :return: list of Cluster
    """
    if margin < 0:
        raise ParameterError('margin must be non-negative')
    if not clusters:
        return []
    centroids = np.array([c.centroid for c in clusters])
    distance = background.distance_to_occupied(centroids[:, 0], centroids[:, 1])
    inside = background.contains_point(centroids[:, 0], centroids[:, 1])
    keep = inside & (distance > margin)
    return [c for c, k in zip(clusters, keep) if k]
