"""Planar geometry shared by the simulator: poses, oriented rectangles and
simple polygons.

All coordinates are metres in the world frame, angles are radians.
"""
import collections
import math

import numpy as np

from .errors import GeometryError, ParameterError

__all__ = ['Pose2D', 'OrientedRect', 'Polygon', 'normalize_angle', 'compose', 'relative',
           'rect_corners', 'rect_overlap', 'rect_contains', 'make_polygon', 'square_polygon',
           'polygon_area', 'polygon_centroid', 'translate_polygon', 'scale_polygon',
           'point_in_polygon', 'distance_to_polygon', 'polygon_intersects_rect',
           'segments_intersect', 'point_segment_distance', 'ray_rect_distance']

_EPS = 1e-12
TWO_PI = 2.0 * math.pi


def normalize_angle(angle):
    """Wraps an angle into (-pi, pi]."""
    wrapped = math.fmod(angle + math.pi, TWO_PI)
    if wrapped <= 0.0:
        wrapped += TWO_PI
    return wrapped - math.pi


class Pose2D(collections.namedtuple('Pose2D', ['x', 'y', 'theta'])):
    """A planar pose. The heading is normalized on construction."""
    __slots__ = ()

    def __new__(cls, x, y, theta=0.0):
        x, y, theta = float(x), float(y), float(theta)
        if not (math.isfinite(x) and math.isfinite(y) and math.isfinite(theta)):
            raise ParameterError('pose must be finite, got ({}, {}, {})'.format(x, y, theta))
        return super().__new__(cls, x, y, normalize_angle(theta))

    def xy(self):
        return np.array([self.x, self.y])


def compose(pose, delta):
    """
    Applies a motion expressed in the frame of ``pose``.

    :param pose: Pose2D in the world frame
    :param delta: (dx, dy, dtheta) in the frame of pose
    :return: Pose2D
    """
    c, s = math.cos(pose.theta), math.sin(pose.theta)
    dx, dy, dtheta = delta
    return Pose2D(pose.x + c * dx - s * dy, pose.y + s * dx + c * dy, pose.theta + dtheta)


def relative(start, end):
    """Returns the motion (dx, dy, dtheta) taking ``start`` to ``end``, in the frame of start."""
    c, s = math.cos(start.theta), math.sin(start.theta)
    wx, wy = end.x - start.x, end.y - start.y
    return (c * wx + s * wy, -s * wx + c * wy, normalize_angle(end.theta - start.theta))


OrientedRect = collections.namedtuple('OrientedRect', ['center', 'length', 'width'])
OrientedRect.__doc__ = """A rectangle of the given length along center.theta and width across it.

center is a Pose2D."""


def rect_corners(rect):
    """
    Corners of an oriented rectangle in counter-clockwise order.

    :param rect: OrientedRect
    :return: ndarray of shape (4, 2)
    """
    if rect.length <= 0 or rect.width <= 0:
        raise GeometryError('rectangle sides must be positive')
    c, s = math.cos(rect.center.theta), math.sin(rect.center.theta)
    hl, hw = rect.length / 2.0, rect.width / 2.0
    local = np.array([[hl, -hw], [hl, hw], [-hl, hw], [-hl, -hw]])
    rot = np.array([[c, -s], [s, c]])
    return local @ rot.T + np.array([rect.center.x, rect.center.y])


def _project(corners, axis):
    p = corners @ axis
    return p.min(), p.max()


def rect_overlap(a, b):
    """
    Separating axis test for two oriented rectangles. Touching counts as overlap.

    :return: bool
    """
    ca, cb = rect_corners(a), rect_corners(b)
    for theta in (a.center.theta, b.center.theta):
        for axis in (np.array([math.cos(theta), math.sin(theta)]),
                     np.array([-math.sin(theta), math.cos(theta)])):
            amin, amax = _project(ca, axis)
            bmin, bmax = _project(cb, axis)
            if amax < bmin - _EPS or bmax < amin - _EPS:
                return False
    return True


def rect_contains(rect, points):
    """
    Tests which points lie inside a rectangle, boundary included.

    :param points: array-like of shape (n, 2) or (2,)
    :return: bool ndarray of shape (n,)
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    c, s = math.cos(rect.center.theta), math.sin(rect.center.theta)
    dx = pts[:, 0] - rect.center.x
    dy = pts[:, 1] - rect.center.y
    u = c * dx + s * dy
    v = -s * dx + c * dy
    return (np.abs(u) <= rect.length / 2.0 + _EPS) & (np.abs(v) <= rect.width / 2.0 + _EPS)


Polygon = collections.namedtuple('Polygon', ['vertices'])
Polygon.__doc__ = """A simple polygon; vertices is a tuple of (x, y) in counter-clockwise order."""


def _signed_area(vertices):
    v = np.asarray(vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _orientation(p, q, r):
    val = (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])
    if abs(val) <= _EPS:
        return 0
    return 1 if val > 0 else -1


def _on_segment(p, q, r):
    return (min(p[0], r[0]) - _EPS <= q[0] <= max(p[0], r[0]) + _EPS and
            min(p[1], r[1]) - _EPS <= q[1] <= max(p[1], r[1]) + _EPS)


def segments_intersect(p1, p2, q1, q2):
    """True if the closed segments p1-p2 and q1-q2 share a point."""
    o1, o2 = _orientation(p1, p2, q1), _orientation(p1, p2, q2)
    o3, o4 = _orientation(q1, q2, p1), _orientation(q1, q2, p2)
    if o1 != o2 and o3 != o4:
        return True
    if o1 == 0 and _on_segment(p1, q1, p2):
        return True
    if o2 == 0 and _on_segment(p1, q2, p2):
        return True
    if o3 == 0 and _on_segment(q1, p1, q2):
        return True
    if o4 == 0 and _on_segment(q1, p2, q2):
        return True
    return False


def make_polygon(vertices):
    """
    Validates and orients a polygon.

    :param vertices: sequence of at least 3 (x, y) points
    :return: Polygon with counter-clockwise vertices
    """
    verts = [(float(x), float(y)) for x, y in vertices]
    if len(verts) < 3:
        raise GeometryError('a polygon needs at least 3 vertices')
    area = _signed_area(verts)
    if abs(area) <= _EPS:
        raise GeometryError('polygon has zero area')
    n = len(verts)
    for i in range(n):
        a1, a2 = verts[i], verts[(i + 1) % n]
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue
            b1, b2 = verts[j], verts[(j + 1) % n]
            if segments_intersect(a1, a2, b1, b2):
                raise GeometryError('polygon edges {} and {} intersect'.format(i, j))
    if area < 0:
        verts.reverse()
    return Polygon(tuple(verts))


def square_polygon(center, half_size):
    cx, cy = center
    return make_polygon([(cx - half_size, cy - half_size), (cx + half_size, cy - half_size),
                         (cx + half_size, cy + half_size), (cx - half_size, cy + half_size)])


def polygon_area(polygon):
    return _signed_area(polygon.vertices)


def polygon_centroid(polygon):
    """Area centroid of a simple polygon as an ndarray (x, y)."""
    v = np.asarray(polygon.vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * cross.sum()
    return np.array([((x + xn) * cross).sum(), ((y + yn) * cross).sum()]) / (6.0 * area)


def translate_polygon(polygon, offset):
    ox, oy = offset
    return Polygon(tuple((x + ox, y + oy) for x, y in polygon.vertices))


def scale_polygon(polygon, scale, about=None):
    """
    Scales a polygon about a point, by default its own centroid.

    :param scale: float > 0
    :param about: (x, y) or None
    :return: Polygon
    """
    if not scale > 0:
        raise ParameterError('scale must be positive, got {}'.format(scale))
    cx, cy = polygon_centroid(polygon) if about is None else about
    return Polygon(tuple((cx + scale * (x - cx), cy + scale * (y - cy)) for x, y in polygon.vertices))


def point_segment_distance(point, a, b):
    p, a, b = np.asarray(point, float), np.asarray(a, float), np.asarray(b, float)
    ab = b - a
    denom = float(ab @ ab)
    t = 0.0 if denom == 0 else min(max(float((p - a) @ ab) / denom, 0.0), 1.0)
    return float(np.hypot(*(p - (a + t * ab))))


def distance_to_polygon(point, polygon):
    """Distance from a point to the polygon boundary."""
    verts = polygon.vertices
    n = len(verts)
    return min(point_segment_distance(point, verts[i], verts[(i + 1) % n]) for i in range(n))


def point_in_polygon(point, polygon):
    """
    Even-odd containment test. Points on the boundary are inside.

    :return: bool
    """
    px, py = float(point[0]), float(point[1])
    verts = polygon.vertices
    n = len(verts)
    for i in range(n):
        a, b = verts[i], verts[(i + 1) % n]
        if _orientation(a, b, (px, py)) == 0 and _on_segment(a, (px, py), b):
            return True
    inside = False
    for i in range(n):
        (x1, y1), (x2, y2) = verts[i], verts[(i + 1) % n]
        if (y1 > py) != (y2 > py):
            x_cross = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
            if px < x_cross:
                inside = not inside
    return inside


def polygon_intersects_rect(polygon, rect):
    """True if a simple polygon and an oriented rectangle share any point."""
    corners = rect_corners(rect)
    if any(point_in_polygon(c, polygon) for c in corners):
        return True
    if rect_contains(rect, np.asarray(polygon.vertices)).any():
        return True
    verts = polygon.vertices
    n = len(verts)
    for i in range(n):
        for k in range(4):
            if segments_intersect(verts[i], verts[(i + 1) % n], corners[k], corners[(k + 1) % 4]):
                return True
    return False


def ray_rect_distance(origin, angles, rect):
    """
    Distance along each ray from ``origin`` to the first point of ``rect``.

    Slab test in the rectangle frame, vectorized over rays. A ray starting
    inside the rectangle has distance 0.

    :param origin: (x, y)
    :param angles: ndarray of world-frame ray angles
    :param rect: OrientedRect
    :return: ndarray of distances, inf where the ray misses
    """
    angles = np.asarray(angles, dtype=float)
    c, s = math.cos(rect.center.theta), math.sin(rect.center.theta)
    ox, oy = origin[0] - rect.center.x, origin[1] - rect.center.y
    u0, v0 = c * ox + s * oy, -s * ox + c * oy
    du = np.cos(angles - rect.center.theta)
    dv = np.sin(angles - rect.center.theta)
    hl, hw = rect.length / 2.0, rect.width / 2.0

    t_near = np.full(angles.shape, -np.inf)
    t_far = np.full(angles.shape, np.inf)
    miss = np.zeros(angles.shape, dtype=bool)
    for o, d, h in ((u0, du, hl), (v0, dv, hw)):
        parallel = np.abs(d) < _EPS
        miss |= parallel & (abs(o) > h)
        with np.errstate(divide='ignore', invalid='ignore'):
            t1 = (-h - o) / d
            t2 = (h - o) / d
        lo = np.where(parallel, -np.inf, np.minimum(t1, t2))
        hi = np.where(parallel, np.inf, np.maximum(t1, t2))
        t_near = np.maximum(t_near, lo)
        t_far = np.minimum(t_far, hi)
    hit = ~miss & (t_far >= np.maximum(t_near, 0.0))
    return np.where(hit, np.maximum(t_near, 0.0), np.inf)
