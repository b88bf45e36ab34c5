"""
Map and depth quality metrics and their report tables.
"""
import collections
import csv
import logging
import math

import numpy as np
from scipy.spatial import cKDTree

from .errors import MetricError
from .grid import FREE, UNKNOWN, OccupancyGrid

__all__ = ['Transform2D', 'MapReport', 'DepthRow', 'knn_distance', 'extract_occupied_points', 'iou',
           'map_rmse', 'transform_grid', 'align_maps', 'evaluate_maps', 'mae', 'mre', 'mean_std',
           'map_report', 'depth_report', 'read_depth_csv', 'evaluate_depth']

logger = logging.getLogger(__name__)

Transform2D = collections.namedtuple('Transform2D', ['dx', 'dy', 'dtheta'])
Transform2D.__doc__ = """Rigid motion taking estimated-map coordinates to ground-truth coordinates.
The rotation is about the center of the ground-truth grid."""

MapReport = collections.namedtuple('MapReport', ['knn_gt_est', 'knn_est_gt', 'rmse', 'iou', 'transform'])
DepthRow = collections.namedtuple('DepthRow', ['name', 'inference_time', 'mae', 'mre'])

IDENTITY = Transform2D(0.0, 0.0, 0.0)


def knn_distance(a, b):
    """
    Mean distance from each point of ``a`` to its nearest neighbour in ``b``.

    :param a: (n, d) array
    :param b: (m, d) array
    :return: float
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise MetricError('point sets must be 2D arrays of equal dimension, got {} and {}'.format(a.shape, b.shape))
    if not len(a) or not len(b):
        raise MetricError('point sets must not be empty')
    distance, _ = cKDTree(b).query(a, k=1)
    return float(np.mean(distance))


def extract_occupied_points(grid):
    """Centers of the occupied cells in world coordinates."""
    return grid.occupied_points()


def _check_frames(a, b):
    if not a.same_frame(b):
        raise MetricError('grids differ in shape, resolution or origin: {!r} vs {!r}'.format(a, b))


def iou(a, b):
    """
    Intersection over union of the occupied cells, counted only where both
    grids are known. Two grids with no occupied cells there score 1.

    :return: float in [0, 1]
    """
    _check_frames(a, b)
    common = a.known() & b.known()
    occ_a = a.occupied() & common
    occ_b = b.occupied() & common
    union = np.count_nonzero(occ_a | occ_b)
    if union == 0:
        return 1.0
    return np.count_nonzero(occ_a & occ_b) / union


def map_rmse(a, b):
    """
    Root mean square difference of the binarized maps (occupied 0, free 1)
    over the cells known in both, scaled by the resolution.

    :return: float in metres
    """
    _check_frames(a, b)
    common = a.known() & b.known()
    if not common.any():
        raise MetricError('the grids share no known cells')
    va = (a.cells()[common] == FREE).astype(float)
    vb = (b.cells()[common] == FREE).astype(float)
    return float(math.sqrt(np.mean((va - vb) ** 2)) * a.resolution())


def transform_grid(grid, transform, frame=None):
    """
    Resamples ``grid`` moved by ``transform`` onto the cells of ``frame``
    by nearest-cell lookup. Cells that fall outside the source are unknown.

    :param grid: OccupancyGrid to move
    :param transform: Transform2D
    :param frame: target grid frame, default the source's own
    :return: OccupancyGrid
    """
    frame = grid if frame is None else frame
    x, y = frame.cell_centers()
    cx, cy = frame.cell_center((frame.width() - 1) / 2.0, (frame.height() - 1) / 2.0)
    c, s = math.cos(transform.dtheta), math.sin(transform.dtheta)
    # inverse motion: undo the translation, then the rotation about the center
    ux, uy = x - transform.dx - cx, y - transform.dy - cy
    sx, sy = cx + c * ux + s * uy, cy - s * ux + c * uy
    i, j = grid.world_to_cell(sx, sy)
    inside = grid.contains_cell(i, j)
    cells = np.full(frame.shape(), UNKNOWN, dtype=np.int8)
    cells[inside] = grid.cells()[j[inside], i[inside]]
    return OccupancyGrid(cells, frame.resolution(), frame.origin())


def _search_range(spec):
    low, high, step = spec
    if step <= 0 or high < low:
        raise MetricError('bad search range {}'.format(spec))
    count = int(round((high - low) / step)) + 1
    return low + step * np.arange(count)


def align_maps(est, gt, dx=(-0.3, 0.3, 0.05), dy=(-0.3, 0.3, 0.05), dtheta=(-0.05, 0.05, 0.01)):
    """
    Grid search for the rigid motion of ``est`` that maximizes its IoU with
    ``gt``. The identity is kept unless a candidate scores strictly higher.

    :param dx, dy, dtheta: (low, high, step) search ranges
    :return: (Transform2D, best IoU)
    """
    best, best_iou = IDENTITY, iou(transform_grid(est, IDENTITY, gt), gt)
    for tx in _search_range(dx):
        for ty in _search_range(dy):
            for tt in _search_range(dtheta):
                candidate = Transform2D(float(tx), float(ty), float(tt))
                score = iou(transform_grid(est, candidate, gt), gt)
                if score > best_iou:
                    best, best_iou = candidate, score
    logger.debug('alignment %s with IoU %.4f', best, best_iou)
    return best, best_iou


def evaluate_maps(gt, est, align=False):
    """
    KNN in both directions, RMSE and IoU of an estimated map against the
    ground truth. KNN uses the occupied cells of the region both maps know.

    :param gt: OccupancyGrid
    :param est: OccupancyGrid in the same frame, or any frame when align is set
    :param align: search the rigid motion of est first
    :return: MapReport with KNN and RMSE in metres
    """
    transform = IDENTITY
    if align:
        transform, _ = align_maps(est, gt)
        est = transform_grid(est, transform, gt)
    elif not est.same_frame(gt):
        est = transform_grid(est, IDENTITY, gt)
    common = gt.known() & est.known()
    gt_points = _points(gt, gt.occupied() & common)
    est_points = _points(est, est.occupied() & common)
    return MapReport(knn_distance(gt_points, est_points), knn_distance(est_points, gt_points),
                     map_rmse(gt, est), iou(gt, est), transform)


def _points(grid, mask):
    jj, ii = np.nonzero(mask)
    x, y = grid.cell_center(ii, jj)
    return np.column_stack([x, y])


def _paired(pred, gt):
    pred = np.asarray(pred, dtype=float).ravel()
    gt = np.asarray(gt, dtype=float).ravel()
    if pred.shape != gt.shape:
        raise MetricError('prediction and ground truth differ in length: {} vs {}'.format(pred.size, gt.size))
    if not pred.size:
        raise MetricError('no depth samples')
    return pred, gt


def mae(pred, gt):
    """Mean absolute error."""
    pred, gt = _paired(pred, gt)
    return float(np.mean(np.abs(pred - gt)))


def mre(pred, gt):
    """Mean relative error in percent of the ground truth."""
    pred, gt = _paired(pred, gt)
    if (gt <= 0).any():
        raise MetricError('ground-truth depths must be positive')
    return float(100.0 * np.mean(np.abs(pred - gt) / gt))


def mean_std(values):
    """
    :return: (mean, sample standard deviation); the deviation of a single value is 0
    """
    v = np.asarray(values, dtype=float).ravel()
    if not v.size:
        raise MetricError('no values')
    std = float(np.std(v, ddof=1)) if v.size > 1 else 0.0
    return float(np.mean(v)), std


def evaluate_depth(pred, gt, name='model', inference_time=None):
    return DepthRow(name, inference_time, mae(pred, gt), mre(pred, gt))


def map_report(report):
    """Renders a MapReport as a table, distances in centimetres."""
    lines = ['{:<22}{:>12}'.format('metric', 'value'),
             '{:<22}{:>12.2f}'.format('KNN gt->est (cm)', report.knn_gt_est * 100.0),
             '{:<22}{:>12.2f}'.format('KNN est->gt (cm)', report.knn_est_gt * 100.0),
             '{:<22}{:>12.2f}'.format('RMSE (cm)', report.rmse * 100.0),
             '{:<22}{:>12.4f}'.format('IoU', report.iou)]
    if report.transform != IDENTITY:
        t = report.transform
        lines.append('{:<22}{:>12}'.format('alignment', '{:+.2f},{:+.2f},{:+.3f}'.format(t.dx, t.dy, t.dtheta)))
    return '\n'.join(lines) + '\n'


def depth_report(rows):
    """Renders DepthRows: algorithm, inference time, MAE in metres, MRE in percent."""
    lines = ['{:<18}{:>18}{:>10}{:>10}'.format('algorithm', 'inference time (s)', 'MAE (m)', 'MRE (%)')]
    for row in rows:
        time = '-' if row.inference_time is None else '{:.3f}'.format(row.inference_time)
        lines.append('{:<18}{:>18}{:>10.3f}{:>10.3f}'.format(row.name, time, row.mae, row.mre))
    return '\n'.join(lines) + '\n'


def read_depth_csv(path):
    """
    Reads one column of depths, or two (pred, gt) columns, with an optional header.

    :return: ndarray of shape (n,) or (n, 2)
    """
    rows = []
    with open(path, newline='') as fh:
        for number, row in enumerate(csv.reader(fh), 1):
            if not row or not ''.join(row).strip():
                continue
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                if number == 1:
                    continue
                raise MetricError('{}:{}: not a number: {}'.format(path, number, row))
    if not rows:
        raise MetricError('{} holds no depth values'.format(path))
    data = np.array(rows)
    return data[:, 0] if data.shape[1] == 1 else data
