"""
Scan logs: one JSON object per line holding the time, the true pose,
the odometry reading since the previous record and the scan. NO_HIT
ranges are written as null.
"""
import collections
import json
import logging

import numpy as np

from .errors import ConfigError, ResultsIOError
from .geometry import Pose2D
from .grid import NO_HIT
from .lidar import LidarScan

__all__ = ['ScanRecord', 'write_log', 'read_log']

logger = logging.getLogger(__name__)

ScanRecord = collections.namedtuple('ScanRecord', ['t', 'pose', 'odom', 'scan'])


def _record_to_dict(record):
    return {
        't': record.t,
        'pose': [record.pose.x, record.pose.y, record.pose.theta],
        'odom': list(record.odom),
        'angles': [float(a) for a in record.scan.angles],
        'ranges': [float(r) if np.isfinite(r) else None for r in record.scan.ranges],
    }


def write_log(records, path):
    """Writes ScanRecords as JSON lines."""
    try:
        with open(path, 'w') as fh:
            for record in records:
                fh.write(json.dumps(_record_to_dict(record)))
                fh.write('\n')
    except OSError as err:
        raise ResultsIOError('cannot write scan log {}: {}'.format(path, err))
    logger.info('wrote scan log %s', path)


def read_log(path):
    """
    Reads a scan log.

    :return: list of ScanRecord
    """
    records = []
    try:
        with open(path) as fh:
            for number, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    d = json.loads(line)
                    ranges = np.array([NO_HIT if r is None else float(r) for r in d['ranges']])
                    angles = np.array(d['angles'], dtype=float)
                    if angles.shape != ranges.shape:
                        raise ValueError('angles and ranges differ in length')
                    scan = LidarScan(float(d['t']), angles, ranges)
                    records.append(ScanRecord(float(d['t']), Pose2D(*d['pose']), tuple(map(float, d['odom'])), scan))
                except (KeyError, TypeError, ValueError) as err:
                    raise ConfigError('{}:{}: bad scan record: {}'.format(path, number, err))
    except FileNotFoundError:
        raise ConfigError('scan log {} does not exist'.format(path))
    logger.info('read %d scan records from %s', len(records), path)
    return records
