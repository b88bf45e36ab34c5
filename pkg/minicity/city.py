"""
City layouts: bounds, buildings, roads, intersections and their stop lines,
and rasterization of a layout into an occupancy grid.
"""
import collections
import json
import logging
import math
import os

import numpy as np

from .errors import LayoutError, ParameterError
from .geometry import OrientedRect, Pose2D, make_polygon, rect_contains, rect_corners, square_polygon
from .grid import FREE, OCCUPIED, OccupancyGrid

__all__ = ['APPROACHES', 'Building', 'Road', 'StopLine', 'IntersectionSpec', 'CityLayout',
           'DATA_DIR', 'load_layout', 'layout_from_dict', 'layout_to_dict', 'build_city',
           'intersection_polygon', 'approach_direction', 'approach_path', 'grid_shape']

logger = logging.getLogger(__name__)

DATA_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'data')

LAYOUT_VERSION = 1

# An approach is named after the side of the intersection the vehicle comes from.
APPROACHES = ('N', 'E', 'S', 'W')
_TRAVEL = {'N': (0.0, -1.0), 'E': (-1.0, 0.0), 'S': (0.0, 1.0), 'W': (1.0, 0.0)}

Building = collections.namedtuple('Building', ['name', 'rect'])
Road = collections.namedtuple('Road', ['name', 'centerline', 'width'])
StopLine = collections.namedtuple('StopLine', ['start', 'end'])
StopLine.__doc__ = """A stop line segment drawn from the road centerline to the curb.

Traffic crosses it along the left normal of start -> end."""
IntersectionSpec = collections.namedtuple('IntersectionSpec', ['name', 'center', 'half_size', 'legs', 'stop_lines'])
CityLayout = collections.namedtuple('CityLayout', ['name', 'bounds', 'buildings', 'roads', 'intersections'])


def approach_direction(approach):
    """Unit travel direction of a vehicle entering on ``approach``."""
    try:
        return np.array(_TRAVEL[approach])
    except KeyError:
        raise LayoutError('unknown approach {!r}, expected one of {}'.format(approach, APPROACHES))


def intersection_polygon(spec):
    return square_polygon(spec.center, spec.half_size)


def approach_path(spec, approach, before, after, lane_offset=None):
    """
    Straight path through an intersection on the right-hand lane.

    :param spec: IntersectionSpec
    :param approach: one of APPROACHES
    :param before: distance of the path start before the stop line
    :param after: distance of the path end past the exit point, which mirrors
                  the stop line across the intersection center
    :param lane_offset: lateral offset of the lane from the road centerline,
                        by default half of the stop line length
    :return: ndarray of shape (2, 2)
    """
    if approach not in spec.stop_lines:
        raise LayoutError('intersection {} has no stop line on approach {}'.format(spec.name, approach))
    line = spec.stop_lines[approach]
    direction = approach_direction(approach)
    right = np.array([direction[1], -direction[0]])
    if lane_offset is None:
        lane_offset = 0.5 * math.hypot(line.end[0] - line.start[0], line.end[1] - line.start[1])
    center = np.asarray(spec.center, dtype=float)
    lane = center + lane_offset * right
    line_dist = float((center - np.asarray(line.start)) @ direction)
    start = lane - (line_dist + before) * direction
    end = lane + (line_dist + after) * direction
    return np.array([start, end])


def _require(d, key, where):
    try:
        return d[key]
    except KeyError:
        raise LayoutError('missing key {!r} in {}'.format(key, where))


def layout_from_dict(data):
    """Builds a CityLayout from its JSON form."""
    version = data.get('version', LAYOUT_VERSION)
    if version != LAYOUT_VERSION:
        raise LayoutError('unsupported layout version {}'.format(version))
    name = data.get('name', 'city')
    bounds = tuple(float(b) for b in _require(data, 'bounds', 'layout'))
    if len(bounds) != 2 or min(bounds) <= 0:
        raise LayoutError('bounds must be two positive extents, got {}'.format(bounds))
    buildings = []
    for b in data.get('buildings', []):
        cx, cy = _require(b, 'center', 'building')
        rect = OrientedRect(Pose2D(cx, cy, b.get('theta', 0.0)), float(_require(b, 'length', 'building')),
                            float(_require(b, 'width', 'building')))
        if rect.length <= 0 or rect.width <= 0:
            raise LayoutError('building {} has non-positive size'.format(b.get('name')))
        buildings.append(Building(b.get('name', 'building{}'.format(len(buildings))), rect))
    roads = [Road(r['name'], tuple(tuple(map(float, p)) for p in r['centerline']), float(r['width']))
             for r in data.get('roads', [])]
    intersections = []
    for spec in data.get('intersections', []):
        lines = {}
        for approach, seg in spec.get('stop_lines', {}).items():
            if approach not in APPROACHES:
                raise LayoutError('unknown approach {!r} in intersection {}'.format(approach, spec.get('name')))
            lines[approach] = StopLine(tuple(map(float, seg[0])), tuple(map(float, seg[1])))
        intersections.append(IntersectionSpec(_require(spec, 'name', 'intersection'),
                                              tuple(map(float, _require(spec, 'center', 'intersection'))),
                                              float(spec.get('half_size', 0.4)),
                                              tuple(spec.get('legs', APPROACHES)), lines))
    layout = CityLayout(name, bounds, tuple(buildings), tuple(roads), tuple(intersections))
    _check_bounds(layout)
    return layout


def layout_to_dict(layout):
    return {
        'version': LAYOUT_VERSION,
        'name': layout.name,
        'bounds': list(layout.bounds),
        'buildings': [{'name': b.name, 'center': [b.rect.center.x, b.rect.center.y],
                       'theta': b.rect.center.theta, 'length': b.rect.length, 'width': b.rect.width}
                      for b in layout.buildings],
        'roads': [{'name': r.name, 'centerline': [list(p) for p in r.centerline], 'width': r.width}
                  for r in layout.roads],
        'intersections': [{'name': s.name, 'center': list(s.center), 'half_size': s.half_size,
                           'legs': list(s.legs),
                           'stop_lines': {a: [list(l.start), list(l.end)] for a, l in s.stop_lines.items()}}
                          for s in layout.intersections],
    }


def _check_bounds(layout):
    bx, by = layout.bounds
    for b in layout.buildings:
        corners = rect_corners(b.rect)
        if corners.min() < -1e-9 or corners[:, 0].max() > bx + 1e-9 or corners[:, 1].max() > by + 1e-9:
            raise LayoutError('building {} extends outside the city bounds'.format(b.name))
    for spec in layout.intersections:
        make_polygon(intersection_polygon(spec).vertices)
        for approach, line in spec.stop_lines.items():
            if line.start == line.end:
                raise LayoutError('stop line {} of {} has zero length'.format(approach, spec.name))


def load_layout(name_or_path):
    """
    Loads a layout by bundled name (e.g. ``default_city``) or from a JSON path.
    """
    path = name_or_path
    if not os.path.exists(path):
        path = os.path.join(DATA_DIR, name_or_path + '.json')
    try:
        with open(path) as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise LayoutError('no layout named {!r}'.format(name_or_path))
    except json.JSONDecodeError as err:
        raise LayoutError('layout {} is not valid JSON: {}'.format(path, err))
    return layout_from_dict(data)


def grid_shape(bounds, resolution):
    """Cells along (x, y) covering the given bounds."""
    return (int(math.ceil(bounds[0] / resolution - 1e-9)),
            int(math.ceil(bounds[1] / resolution - 1e-9)))


def build_city(layout, resolution=0.05):
    """
    Rasterizes a layout. The outer ring of cells is occupied, as is every
    cell whose center lies inside a building.

    :param layout: CityLayout
    :param resolution: float, metres per cell
    :return: OccupancyGrid with origin (0, 0, 0)
    """
    if not resolution > 0:
        raise ParameterError('resolution must be positive, got {}'.format(resolution))
    _check_bounds(layout)
    width, height = grid_shape(layout.bounds, resolution)
    cells = np.full((height, width), FREE, dtype=np.int8)
    cells[0, :] = cells[-1, :] = OCCUPIED
    cells[:, 0] = cells[:, -1] = OCCUPIED

    jj, ii = np.mgrid[0:height, 0:width]
    centers = np.column_stack([((ii + 0.5) * resolution).ravel(), ((jj + 0.5) * resolution).ravel()])
    for building in layout.buildings:
        inside = rect_contains(building.rect, centers).reshape(height, width)
        cells[inside] = OCCUPIED
    grid = OccupancyGrid(cells, resolution, Pose2D(0.0, 0.0, 0.0))
    logger.debug('built %s: %dx%d cells, %.3f occupied', layout.name, width, height, grid.occupied_fraction())
    return grid
