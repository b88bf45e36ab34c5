"""
Reading and writing occupancy grids as 8-bit binary PGM images with a
``.meta`` sidecar holding resolution and origin.

Pixel values: 0 occupied, 255 free, 128 unknown. Images without an
``encoding`` line in the sidecar come from other mapping tools: black is
occupied and every other value, grey included, is free. Image row 0 is the
top of the map, i.e. the largest y.
"""
import logging
import os
import re

import numpy as np

from .errors import GridFormatError, ResultsIOError
from .geometry import Pose2D
from .grid import FREE, OCCUPIED, UNKNOWN, OccupancyGrid

__all__ = ['ENCODING', 'meta_path', 'read_grid', 'write_grid']

logger = logging.getLogger(__name__)

ENCODING = 'ternary-v1'
_PIXEL = {OCCUPIED: 0, FREE: 255, UNKNOWN: 128}


def meta_path(path):
    return os.path.splitext(path)[0] + '.meta'


def write_grid(grid, path):
    """
    Writes ``grid`` to ``path`` and its sidecar.

    :param grid: OccupancyGrid
    :param path: destination of the PGM image
    """
    pixels = np.empty(grid.shape(), dtype=np.uint8)
    cells = grid.cells()
    for cell, value in _PIXEL.items():
        pixels[cells == cell] = value
    header = 'P5\n{} {}\n255\n'.format(grid.width(), grid.height()).encode('ascii')
    origin = grid.origin()
    meta = ('resolution: {!r}\norigin_x: {!r}\norigin_y: {!r}\norigin_theta: {!r}\nencoding: {}\n'
            .format(grid.resolution(), origin.x, origin.y, origin.theta, ENCODING))
    try:
        with open(path, 'wb') as fh:
            fh.write(header)
            fh.write(np.flipud(pixels).tobytes())
        with open(meta_path(path), 'w') as fh:
            fh.write(meta)
    except OSError as err:
        raise ResultsIOError('cannot write grid to {}: {}'.format(path, err))
    logger.info('wrote %s (%dx%d)', path, grid.width(), grid.height())


def _read_meta(path):
    try:
        with open(meta_path(path)) as fh:
            lines = fh.read().splitlines()
    except FileNotFoundError:
        raise GridFormatError('missing sidecar {}'.format(meta_path(path)))
    meta = {}
    for line in lines:
        if not line.strip():
            continue
        key, sep, value = line.partition(':')
        if not sep:
            raise GridFormatError('malformed sidecar line {!r}'.format(line))
        meta[key.strip()] = value.strip()
    encoding = meta.get('encoding')
    if encoding not in (None, ENCODING):
        raise GridFormatError('unsupported encoding {}'.format(encoding))
    try:
        resolution = float(meta['resolution'])
        origin = Pose2D(float(meta.get('origin_x', 0.0)), float(meta.get('origin_y', 0.0)),
                        float(meta.get('origin_theta', 0.0)))
    except (KeyError, ValueError) as err:
        raise GridFormatError('bad sidecar {}: {}'.format(meta_path(path), err))
    if not resolution > 0:
        raise GridFormatError('resolution must be positive')
    return resolution, origin, encoding


_HEADER = re.compile(rb'^P5\s+(?:#[^\n]*\n\s*)*(\d+)\s+(?:#[^\n]*\n\s*)*(\d+)\s+(?:#[^\n]*\n\s*)*(\d+)\s')


def read_grid(path):
    """
    Reads a grid written by write_grid, or a black-and-white map exported
    by another tool with a sidecar that gives only resolution and origin.

    :return: OccupancyGrid
    """
    try:
        with open(path, 'rb') as fh:
            data = fh.read()
    except OSError as err:
        raise GridFormatError('cannot read {}: {}'.format(path, err))
    match = _HEADER.match(data)
    if match is None:
        raise GridFormatError('{} is not a binary PGM'.format(path))
    width, height, maxval = (int(g) for g in match.groups())
    if maxval != 255:
        raise GridFormatError('only 8-bit PGM is supported, maxval {}'.format(maxval))
    body = data[match.end():]
    if len(body) != width * height:
        raise GridFormatError('expected {} pixels, found {}'.format(width * height, len(body)))
    pixels = np.flipud(np.frombuffer(body, dtype=np.uint8).reshape(height, width))
    resolution, origin, encoding = _read_meta(path)
    cells = np.full(pixels.shape, FREE, dtype=np.int8)
    cells[pixels == _PIXEL[OCCUPIED]] = OCCUPIED
    if encoding == ENCODING:
        cells[pixels == _PIXEL[UNKNOWN]] = UNKNOWN
    logger.info('read %s (%dx%d)', path, width, height)
    return OccupancyGrid(cells, resolution, origin)
