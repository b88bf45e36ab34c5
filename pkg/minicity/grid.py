"""Occupancy grids and grid raycasting.

Cell (i, j) covers x in [ox + i*res, ox + (i+1)*res) and y likewise with j,
in the frame of the grid origin. Cells are stored row-major as
``cells[j, i]`` so that row index grows with y.
"""
import collections
import logging
import math

import numpy as np
from scipy import ndimage

from .errors import ParameterError
from .geometry import Pose2D

__all__ = ['FREE', 'OCCUPIED', 'UNKNOWN', 'NO_HIT', 'OccupancyGrid', 'LogOddsGrid', 'RayResult',
           'raycast', 'raycast_many']

logger = logging.getLogger(__name__)

FREE = 0
OCCUPIED = 1
UNKNOWN = -1

# Ranges equal to NO_HIT mean the beam saw nothing within its limit.
NO_HIT = np.inf

RayResult = collections.namedtuple('RayResult', ['distance', 'blocked'])


class _GridFrame:
    """Shape, resolution and origin of a grid plus coordinate transforms."""

    def __init__(self, width, height, resolution, origin):
        if not resolution > 0:
            raise ParameterError('resolution must be positive, got {}'.format(resolution))
        if width < 1 or height < 1:
            raise ParameterError('grid must have at least one cell')
        self._width = int(width)
        self._height = int(height)
        self._resolution = float(resolution)
        self._origin = origin if isinstance(origin, Pose2D) else Pose2D(*origin)
        self._cos = math.cos(self._origin.theta)
        self._sin = math.sin(self._origin.theta)

    def width(self):
        """Number of cells along x."""
        return self._width

    def height(self):
        """Number of cells along y."""
        return self._height

    def shape(self):
        return self._height, self._width

    def resolution(self):
        return self._resolution

    def origin(self):
        return self._origin

    def same_frame(self, other):
        return (self._width == other.width() and self._height == other.height() and
                self._resolution == other.resolution() and self._origin == other.origin())

    def world_to_grid(self, x, y):
        """Continuous cell coordinates of world points (x, y); arrays allowed."""
        dx = np.asarray(x, dtype=float) - self._origin.x
        dy = np.asarray(y, dtype=float) - self._origin.y
        gx = (self._cos * dx + self._sin * dy) / self._resolution
        gy = (-self._sin * dx + self._cos * dy) / self._resolution
        return gx, gy

    def world_to_cell(self, x, y):
        gx, gy = self.world_to_grid(x, y)
        return np.floor(gx).astype(int), np.floor(gy).astype(int)

    def cell_center(self, i, j):
        """World coordinates of cell centers; arrays allowed."""
        gx = (np.asarray(i, dtype=float) + 0.5) * self._resolution
        gy = (np.asarray(j, dtype=float) + 0.5) * self._resolution
        return (self._origin.x + self._cos * gx - self._sin * gy,
                self._origin.y + self._sin * gx + self._cos * gy)

    def contains_cell(self, i, j):
        i, j = np.asarray(i), np.asarray(j)
        return (i >= 0) & (i < self._width) & (j >= 0) & (j < self._height)

    def contains_point(self, x, y):
        return self.contains_cell(*self.world_to_cell(x, y))

    def cell_centers(self):
        """World coordinates of every cell center, each of shape (height, width)."""
        jj, ii = np.mgrid[0:self._height, 0:self._width]
        return self.cell_center(ii, jj)


class OccupancyGrid(_GridFrame):
    """
    A ternary occupancy grid. The cell array is read only once built.
    """

    def __init__(self, cells, resolution, origin=(0.0, 0.0, 0.0)):
        """
        :param cells: int array of shape (height, width) holding FREE, OCCUPIED or UNKNOWN
        :param resolution: float, metres per cell
        :param origin: Pose2D or (x, y, theta) of the lower-left grid corner
        """
        cells = np.array(cells, dtype=np.int8)
        if cells.ndim != 2:
            raise ParameterError('cells must be a 2D array')
        bad = ~np.isin(cells, (FREE, OCCUPIED, UNKNOWN))
        if bad.any():
            raise ParameterError('cells hold values outside {FREE, OCCUPIED, UNKNOWN}')
        super().__init__(cells.shape[1], cells.shape[0], resolution, origin)
        cells.flags.writeable = False
        self._cells = cells
        self._nearest = None

    def cells(self):
        return self._cells

    def occupied(self):
        """Boolean mask of occupied cells."""
        return self._cells == OCCUPIED

    def known(self):
        return self._cells != UNKNOWN

    def occupied_fraction(self):
        return float(self.occupied().mean())

    def occupied_points(self):
        """World coordinates of occupied cell centers as an (n, 2) array."""
        jj, ii = np.nonzero(self.occupied())
        x, y = self.cell_center(ii, jj)
        return np.column_stack([x, y])

    def distance_to_occupied(self, x, y):
        """
        Distance from world points to the nearest occupied cell square.

        :return: ndarray of distances in metres, inf if nothing is occupied
        """
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y = np.atleast_1d(np.asarray(y, dtype=float))
        occ = self.occupied()
        if not occ.any():
            return np.full(x.shape, np.inf)
        if self._nearest is None:
            _, idx = ndimage.distance_transform_edt(~occ, return_indices=True)
            self._nearest = idx
        i, j = self.world_to_cell(x, y)
        i = np.clip(i, 0, self._width - 1)
        j = np.clip(j, 0, self._height - 1)
        nj, ni = self._nearest[0][j, i], self._nearest[1][j, i]
        # distance from the point to the square of the nearest occupied cell
        gx, gy = self.world_to_grid(x, y)
        ddx = np.maximum(np.maximum(ni - gx, gx - (ni + 1)), 0.0)
        ddy = np.maximum(np.maximum(nj - gy, gy - (nj + 1)), 0.0)
        return np.hypot(ddx, ddy) * self._resolution

    def __eq__(self, other):
        if not isinstance(other, OccupancyGrid):
            return NotImplemented
        return self.same_frame(other) and np.array_equal(self._cells, other.cells())

    def __ne__(self, other):
        result = self.__eq__(other)
        return result if result is NotImplemented else not result

    __hash__ = None

    def __repr__(self):
        return 'OccupancyGrid({}x{}, resolution={}, origin={})'.format(
            self._width, self._height, self._resolution, tuple(self._origin))


class LogOddsGrid(_GridFrame):
    """
    A mutable log-odds grid used while mapping. Zero means unknown.
    """

    def __init__(self, width, height, resolution, origin=(0.0, 0.0, 0.0), log_odds=None):
        super().__init__(width, height, resolution, origin)
        if log_odds is None:
            log_odds = np.zeros((self._height, self._width))
        else:
            log_odds = np.array(log_odds, dtype=float)
            if log_odds.shape != (self._height, self._width):
                raise ParameterError('log_odds shape {} does not match grid'.format(log_odds.shape))
        self._log_odds = log_odds

    @classmethod
    def like(cls, grid):
        """An empty log-odds grid in the same frame as ``grid``."""
        return cls(grid.width(), grid.height(), grid.resolution(), grid.origin())

    def log_odds(self):
        return self._log_odds

    def copy(self):
        return LogOddsGrid(self._width, self._height, self._resolution, self._origin, self._log_odds.copy())

    def threshold(self, tau_occ, tau_free):
        """
        Converts to a ternary grid.

        :param tau_occ: cells with log-odds >= tau_occ are occupied
        :param tau_free: cells with log-odds <= tau_free are free
        :return: OccupancyGrid
        """
        if tau_free >= tau_occ:
            raise ParameterError('tau_free must be below tau_occ')
        cells = np.full(self.shape(), UNKNOWN, dtype=np.int8)
        cells[self._log_odds >= tau_occ] = OCCUPIED
        cells[self._log_odds <= tau_free] = FREE
        return OccupancyGrid(cells, self._resolution, self._origin)


def _dda_setup(grid, origin, angles):
    res = grid.resolution()
    gx, gy = grid.world_to_grid(origin[0], origin[1])
    gx, gy = float(gx), float(gy)
    i0, j0 = int(math.floor(gx)), int(math.floor(gy))
    a = np.asarray(angles, dtype=float) - grid.origin().theta
    dx, dy = np.cos(a), np.sin(a)
    step_i = np.where(dx > 0, 1, -1)
    step_j = np.where(dy > 0, 1, -1)
    with np.errstate(divide='ignore', invalid='ignore'):
        t_delta_x = np.where(dx != 0, res / np.abs(dx), np.inf)
        t_delta_y = np.where(dy != 0, res / np.abs(dy), np.inf)
        t_max_x = np.where(dx > 0, (i0 + 1 - gx) * res / dx,
                           np.where(dx < 0, (gx - i0) * res / -dx, np.inf))
        t_max_y = np.where(dy > 0, (j0 + 1 - gy) * res / dy,
                           np.where(dy < 0, (gy - j0) * res / -dy, np.inf))
    return i0, j0, step_i, step_j, t_delta_x, t_delta_y, t_max_x, t_max_y


def raycast_many(grid, origin, angles, max_range):
    """
    Casts rays from a common origin through a grid, all rays advancing in
    lockstep one cell boundary per iteration.

    :param grid: OccupancyGrid
    :param origin: (x, y) inside the grid
    :param angles: world-frame ray angles
    :param max_range: float > 0
    :return: RayResult of arrays; distance is the path length to the first
             occupied cell, NO_HIT when none lies within max_range or the
             ray leaves the grid
    """
    if not max_range > 0:
        raise ParameterError('max_range must be positive, got {}'.format(max_range))
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    n = angles.size
    i0, j0, step_i, step_j, t_delta_x, t_delta_y, t_max_x, t_max_y = _dda_setup(grid, origin, angles)
    if not grid.contains_cell(i0, j0):
        raise ParameterError('ray origin ({}, {}) is outside the grid'.format(origin[0], origin[1]))
    occupied = grid.occupied()
    if occupied[j0, i0]:
        logger.warning('ray origin (%.3f, %.3f) lies in an occupied cell', origin[0], origin[1])
        return RayResult(np.zeros(n), np.ones(n, dtype=bool))

    i = np.full(n, i0)
    j = np.full(n, j0)
    distance = np.full(n, NO_HIT)
    active = np.ones(n, dtype=bool)
    width, height = grid.width(), grid.height()
    while active.any():
        along_x = t_max_x <= t_max_y
        t_entry = np.where(along_x, t_max_x, t_max_y)
        i = np.where(active & along_x, i + step_i, i)
        j = np.where(active & ~along_x, j + step_j, j)
        t_max_x = np.where(active & along_x, t_max_x + t_delta_x, t_max_x)
        t_max_y = np.where(active & ~along_x, t_max_y + t_delta_y, t_max_y)

        beyond = t_entry > max_range
        outside = (i < 0) | (i >= width) | (j < 0) | (j >= height)
        active &= ~(beyond | outside)
        hit = active.copy()
        hit[active] = occupied[j[active], i[active]]
        distance[hit] = t_entry[hit]
        active &= ~hit
    return RayResult(distance, np.zeros(n, dtype=bool))


def raycast(grid, origin, angle, max_range):
    """Single-ray form of raycast_many returning scalars."""
    result = raycast_many(grid, origin, [angle], max_range)
    return RayResult(float(result.distance[0]), bool(result.blocked[0]))
