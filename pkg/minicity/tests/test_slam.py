import functools
import math

import numpy as np
import numpy.testing as npt
import pytest

import minicity
from minicity.tests.tools import make_box_grid, make_scan

LIDAR = minicity.make_lidar_params(beams=360, range_noise_sigma=0.0)


def _record(grid, pose, t=0.0, odom=(0.0, 0.0, 0.0)):
    return minicity.ScanRecord(t, pose, odom, minicity.simulate_scan(grid, [], pose, LIDAR, timestamp=t))


def _room_records(grid):
    poses = [minicity.Pose2D(0.6 + 0.1 * k, 1.05, 0.0) for k in range(9)]
    records = [_record(grid, poses[0])]
    for k in range(1, len(poses)):
        records.append(_record(grid, poses[k], 0.5 * k, minicity.relative(poses[k - 1], poses[k])))
    return records


def test_integrate_scan_marks_hits_and_free_space():
    grid = make_box_grid()
    cfg = minicity.make_slam_config(map_beam_step=1)
    empty = minicity.LogOddsGrid.like(grid)
    pose = minicity.Pose2D(1.0, 1.05, 0.0)
    updated = minicity.integrate_scan(empty, pose, _record(grid, pose).scan, cfg)
    assert not empty.log_odds().any()
    npt.assert_almost_equal(updated.log_odds()[10, 19], cfg.hit)
    npt.assert_almost_equal(updated.log_odds()[10, 10], -cfg.miss)
    assert (updated.log_odds()[1:-1, 1:-1] <= 0).all()


def test_log_odds_are_clamped():
    grid = make_box_grid()
    cfg = minicity.make_slam_config(map_beam_step=1, l_max=1.0)
    pose = minicity.Pose2D(1.0, 1.0, 0.0)
    scan = _record(grid, pose).scan
    log_odds = minicity.LogOddsGrid.like(grid)
    for _ in range(5):
        log_odds = minicity.integrate_scan(log_odds, pose, scan, cfg)
    assert np.abs(log_odds.log_odds()).max() == 1.0


def test_map_known_poses_only_marks_walls():
    grid = make_box_grid()
    cfg = minicity.make_slam_config(map_beam_step=1)
    records = _room_records(grid)
    estimate = minicity.map_known_poses(records, grid, cfg, poses=[(k, records[k].pose) for k in range(6)])
    cells = estimate.cells()
    assert cells[10, 19] == minicity.OCCUPIED
    assert cells[10, 10] == minicity.FREE
    assert not (estimate.occupied() & ~grid.occupied()).any()


def test_scan_likelihood_prefers_the_true_pose():
    grid = make_box_grid()
    cfg = minicity.make_slam_config(beam_step=1, map_beam_step=1)
    pose = minicity.Pose2D(1.0, 1.0, 0.0)
    scan = _record(grid, pose).scan
    mapped = minicity.integrate_scan(minicity.LogOddsGrid.like(grid), pose, scan, cfg)
    true_score = minicity.scan_log_likelihood(mapped, pose, scan, cfg)
    shifted = minicity.scan_log_likelihood(mapped, minicity.Pose2D(1.15, 1.0, 0.0), scan, cfg)
    assert true_score > shifted
    assert minicity.scan_log_likelihood(mapped, minicity.Pose2D(5.0, 1.0, 0.0), scan, cfg) == -math.inf


def test_effective_sample_size_and_resampling():
    assert minicity.effective_sample_size([0.25] * 4) == 4.0
    assert minicity.effective_sample_size([0.0, 1.0, 0.0]) == 1.0
    rng = np.random.default_rng(0)
    npt.assert_array_equal(minicity.systematic_resample([0.0, 1.0, 0.0, 0.0], rng), [1, 1, 1, 1])
    npt.assert_array_equal(minicity.systematic_resample([0.25] * 4, rng), [0, 1, 2, 3])


def test_gated_updates_accumulate_odometry():
    scan = make_scan([1.0])
    records = [minicity.ScanRecord(0.5 * k, minicity.Pose2D(0.0, 0.0), (0.125, 0.0, 0.0), scan) for k in range(6)]
    cfg = minicity.make_slam_config(linear_update=0.2)
    updates = list(minicity.gated_updates(records, cfg))
    assert [k for k, _ in updates] == [0, 2, 4]
    npt.assert_allclose(updates[1][1], (0.25, 0.0, 0.0))

    poses = minicity.dead_reckon(records, cfg)
    npt.assert_allclose([p.x for _, p in poses], [0.0, 0.25, 0.5])


def _mapped_particles(grid, cfg, pose):
    scan = _record(grid, pose).scan
    return [p._replace(map=minicity.integrate_scan(p.map, p.pose, scan, cfg))
            for p in minicity.init_particles(cfg, grid, pose)]


def test_rbpf_step_without_noise_follows_odometry():
    grid = make_box_grid()
    cfg = minicity.make_slam_config(particle_count=3, motion_sigmas=(0.0, 0.0, 0.0))
    start, end = minicity.Pose2D(0.8, 1.05, 0.0), minicity.Pose2D(1.0, 1.05, 0.0)
    particles = _mapped_particles(grid, cfg, start)
    stepped = minicity.rbpf_step(particles, minicity.relative(start, end), _record(grid, end).scan, cfg,
                                 np.random.default_rng(0))
    assert len(stepped) == 3
    for p in stepped:
        npt.assert_allclose([p.pose.x, p.pose.y, p.pose.theta], [1.0, 1.05, 0.0], atol=1e-9)
        assert len(p.trajectory) == 2
    npt.assert_allclose([p.weight for p in stepped], [1.0 / 3] * 3)
    assert stepped[0].map is not particles[0].map


def test_rbpf_step_resets_vanished_weights():
    grid = make_box_grid()
    cfg = minicity.make_slam_config(particle_count=4, motion_sigmas=(0.0, 0.0, 0.0))
    pose = minicity.Pose2D(1.0, 1.05, 0.0)
    particles = _mapped_particles(grid, cfg, pose)
    stepped = minicity.rbpf_step(particles, (10.0, 0.0, 0.0), _record(grid, pose).scan, cfg,
                                 np.random.default_rng(0))
    npt.assert_allclose([p.weight for p in stepped], [0.25] * 4)
    npt.assert_allclose([p.pose.x for p in stepped], [11.0] * 4)


def test_rbpf_step_resamples_towards_the_better_pose():
    grid = make_box_grid()
    cfg = minicity.make_slam_config(particle_count=2, motion_sigmas=(0.0, 0.0, 0.0), resample_threshold=1.0)
    pose = minicity.Pose2D(1.0, 1.05, 0.0)
    particles = _mapped_particles(grid, cfg, pose)
    particles[1] = particles[1]._replace(pose=minicity.Pose2D(1.15, 1.05, 0.0))
    stepped = minicity.rbpf_step(particles, (0.0, 0.0, 0.0), _record(grid, pose).scan, cfg,
                                 np.random.default_rng(0))
    npt.assert_allclose([p.pose.x for p in stepped], [1.0, 1.0])
    npt.assert_allclose([p.weight for p in stepped], [0.5, 0.5])
    assert stepped[0].map is not stepped[1].map


def test_particle_filter_without_motion_noise_maps_the_room():
    grid = make_box_grid(40, 40, 0.05)
    cfg = minicity.make_slam_config(particle_count=5, motion_sigmas=(0.0, 0.0, 0.0), hit=2.5, miss=2.5,
                                    map_beam_step=1)
    records = _room_records(grid)
    pf = minicity.ParticleFilter(cfg, grid, records[0].pose, np.random.default_rng(1))
    estimate = pf.run(records)
    assert pf.stats()['updates'] >= 1
    assert pf.stats()['resets'] == 0
    assert not (estimate.occupied() & ~grid.occupied()).any()
    assert minicity.iou(grid, estimate) > 0.9
    poses = [p.pose for p in pf.particles()]
    npt.assert_allclose([poses[0].x, poses[0].y], [records[-1].pose.x, records[-1].pose.y], atol=0.25)


def test_best_map_takes_heaviest_particle():
    grid = make_box_grid()
    cfg = minicity.make_slam_config(particle_count=2, hit=2.5, map_beam_step=1)
    particles = minicity.init_particles(cfg, grid, minicity.Pose2D(1.0, 1.0, 0.0))
    pose = particles[1].pose
    mapped = minicity.integrate_scan(particles[1].map, pose, _record(grid, pose).scan, cfg)
    particles = [particles[0]._replace(weight=0.4), particles[1]._replace(weight=0.6, map=mapped)]
    assert minicity.best_map(particles, cfg).occupied().any()
    assert len(particles[0].trajectory) == 1


def test_mapping_drive_records_a_closed_loop():
    layout = minicity.load_layout('default_city')
    records = minicity.mapping_drive(layout, loops=1, seed=4)
    assert len(records) > 100
    npt.assert_allclose(np.diff([r.t for r in records]), 0.5)
    start, end = records[0].pose, records[-1].pose
    assert math.hypot(end.x - start.x, end.y - start.y) < 0.5
    errors = np.array([np.subtract(r.odom, minicity.relative(p.pose, r.pose))
                       for p, r in zip(records, records[1:])])
    assert 0.003 < errors.std() < 0.007
    with pytest.raises(minicity.ParameterError):
        minicity.mapping_drive(layout, speed=0.0)


@pytest.mark.slow
def test_slam_on_the_city_loop():
    layout = minicity.load_layout('default_city')
    records = minicity.mapping_drive(layout, loops=1, seed=2)
    cfg = minicity.make_slam_config(particle_count=10)
    gt = minicity.build_city(layout, cfg.resolution)
    estimate = minicity.ParticleFilter(cfg, gt, records[0].pose, np.random.default_rng(2)).run(records)
    report = minicity.evaluate_maps(gt, estimate)
    assert report.knn_est_gt < 0.25


@functools.lru_cache(maxsize=None)
def _city_run(seed, odom_sigma):
    """Maps the bundled drive; the filter assumes twice the odometry noise."""
    layout, drive, cfg = minicity.parse_drive('mapping_drive')
    records = minicity.mapping_drive(layout, **dict(drive, seed=seed, odom_sigmas=(odom_sigma,) * 3))
    cfg = cfg._replace(motion_sigmas=(2.0 * odom_sigma,) * 3)
    gt = minicity.build_city(layout, cfg.resolution)
    estimate = minicity.ParticleFilter(cfg, gt, records[0].pose, np.random.default_rng(seed)).run(records)
    reckoned = minicity.map_known_poses(records, gt, cfg, poses=minicity.dead_reckon(records, cfg))
    return minicity.evaluate_maps(gt, estimate), minicity.iou(gt, reckoned)


@pytest.mark.slow
def test_city_maps_over_seeds():
    scores = [_city_run(seed, 0.005)[0].iou for seed in range(10)]
    assert sum(s >= 0.70 for s in scores) >= 8


@pytest.mark.slow
def test_city_map_without_odometry_noise():
    assert _city_run(0, 0.0)[0].iou >= 0.90


@pytest.mark.slow
def test_city_map_degrades_with_odometry_noise():
    means = [np.mean([_city_run(seed, sigma)[0].iou for seed in range(3)]) for sigma in (0.0, 0.005, 0.02)]
    assert means[0] >= means[1] >= means[2]


@pytest.mark.slow
def test_particles_beat_dead_reckoning():
    runs = [_city_run(seed, 0.02) for seed in range(10)]
    assert np.mean([r.iou for r, _ in runs]) >= np.mean([dr for _, dr in runs])


@pytest.mark.slow
def test_city_map_distances_agree_both_ways():
    report = _city_run(0, 0.005)[0]
    assert abs(report.knn_gt_est - report.knn_est_gt) < 0.05
    assert max(report.knn_gt_est, report.knn_est_gt) <= 0.25
