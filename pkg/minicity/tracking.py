"""Greedy nearest-neighbour tracking of cluster centroids."""
import collections
import logging

import numpy as np

from .errors import ParameterError

__all__ = ['Track', 'Tracker', 'update_tracks']

logger = logging.getLogger(__name__)

Track = collections.namedtuple('Track', ['id', 'position', 'velocity', 'age', 'misses'])


def _associate(predicted, centroids, gate, reach=None, last=None):
    """
    Greedy assignment by increasing distance, ties broken by index. With
    ``reach``, a pair is also skipped when the centroid lies farther than
    that from the track's last position.
    """
    if not len(predicted) or not len(centroids):
        return []
    diff = predicted[:, None, :] - centroids[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    eligible = dist <= gate
    if reach is not None:
        jump = last[:, None, :] - centroids[None, :, :]
        eligible &= np.hypot(jump[..., 0], jump[..., 1]) <= reach
    ti, ci = np.nonzero(eligible)
    order = np.lexsort((ci, ti, dist[ti, ci]))
    used_t, used_c, pairs = set(), set(), []
    for k in order:
        t, c = int(ti[k]), int(ci[k])
        if t in used_t or c in used_c:
            continue
        used_t.add(t)
        used_c.add(c)
        pairs.append((t, c))
    return pairs


def update_tracks(tracks, clusters, dt, gate, max_misses, smoothing=0.5, next_id=None, max_speed=None):
    """
    One tracking step.

    Tracks are predicted with their velocity, then matched greedily to
    cluster centroids within ``gate``. A centroid that would move a track
    faster than ``max_speed`` is not matched to it. Matched tracks take the
    centroid as position and blend the observed velocity in with weight
    ``smoothing``.
    Unmatched tracks coast and are dropped after more than ``max_misses``
    consecutive misses. Unmatched clusters start new tracks unless they lie
    within gate/2 of a live track; live tracks closer than gate/2 to a
    matched or older track are merged into it.

    :param tracks: list of Track
    :param clusters: list of Cluster with world-frame centroids
    :param dt: float > 0, time since the previous step
    :param gate: float > 0, association radius
    :param max_misses: int >= 0
    :param smoothing: float in (0, 1]
    :param next_id: first id to assign to new tracks, default one past the largest live id
    :param max_speed: float > 0 or None for no limit, in metres per second
    :return: list of Track ordered by id
    """
    if not dt > 0 or not gate > 0:
        raise ParameterError('dt and gate must be positive')
    if max_misses < 0 or not 0 < smoothing <= 1:
        raise ParameterError('need max_misses >= 0 and smoothing in (0, 1]')
    if max_speed is not None and not max_speed > 0:
        raise ParameterError('max_speed must be positive, got {}'.format(max_speed))
    if next_id is None:
        next_id = max((t.id for t in tracks), default=-1) + 1

    predicted = np.array([t.position + t.velocity * dt for t in tracks]).reshape(-1, 2)
    centroids = np.array([c.centroid for c in clusters], dtype=float).reshape(-1, 2)
    last = np.array([t.position for t in tracks], dtype=float).reshape(-1, 2)
    reach = None if max_speed is None else max_speed * dt
    pairs = _associate(predicted, centroids, gate, reach, last)
    matched = dict(pairs)

    updated = []
    for k, track in enumerate(tracks):
        if k in matched:
            position = centroids[matched[k]]
            observed = (position - track.position) / dt
            velocity = smoothing * observed + (1.0 - smoothing) * track.velocity
            updated.append(Track(track.id, position, velocity, track.age + dt, 0))
        elif track.misses + 1 <= max_misses:
            updated.append(Track(track.id, predicted[k], track.velocity, track.age + dt, track.misses + 1))

    # seen tracks before coasting ones, then oldest first
    updated.sort(key=lambda t: (t.misses, -t.age, t.id))
    kept = []
    for track in updated:
        if all(np.hypot(*(track.position - other.position)) >= gate / 2.0 for other in kept):
            kept.append(track)

    used = set(matched.values())
    for c in range(len(centroids)):
        if c in used:
            continue
        position = centroids[c]
        if all(np.hypot(*(position - other.position)) >= gate / 2.0 for other in kept):
            kept.append(Track(next_id, position, np.zeros(2), 0.0, 0))
            next_id += 1
    kept.sort(key=lambda t: t.id)
    return kept


class Tracker:
    """
    Stateful wrapper around update_tracks that never reuses track ids.
    """

    def __init__(self, gate=0.5, max_misses=3, smoothing=0.5, max_speed=None):
        self._gate = gate
        self._max_speed = max_speed
        self._max_misses = max_misses
        self._smoothing = smoothing
        self._tracks = []
        self._next_id = 0

    def tracks(self):
        return list(self._tracks)

    def update(self, clusters, dt):
        """
        :return: list of live Track after the step
        """
        self._tracks = update_tracks(self._tracks, clusters, dt, self._gate, self._max_misses,
                                     self._smoothing, next_id=self._next_id, max_speed=self._max_speed)
        if self._tracks:
            self._next_id = max(self._next_id, max(t.id for t in self._tracks) + 1)
        return list(self._tracks)
