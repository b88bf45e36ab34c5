import math

import numpy as np
import numpy.testing as npt
import pytest

import minicity
from minicity.tests.tools import make_state

PARAMS = minicity.make_vehicle_params()


def _model(**kwargs):
    layout = minicity.load_layout('default_city')
    return minicity.IntersectionModel.from_spec(layout.intersections[0], **kwargs)


def _track(x, y, vx=0.0, vy=0.0, track_id=0):
    return minicity.Track(track_id, np.array([x, y]), np.array([vx, vy]), 1.0, 0)


def _channel(seed=0, **params):
    return minicity.ChannelModel(minicity.make_channel_params(**params), np.random.default_rng(seed))


def test_codec():
    state = minicity.vehicle_state_message(3, 1.25, minicity.Pose2D(2.8, 1.9, 1.5), 0.7)
    data = minicity.encode_message(state)
    assert len(data) == 14 + 32
    assert minicity.decode_message(data) == state
    warning = minicity.warning_message(0, 2.0, True, 4)
    assert minicity.decode_message(minicity.encode_message(warning)) == warning
    cleared = minicity.warning_message(0, 2.1, False)
    assert minicity.decode_message(minicity.encode_message(cleared)).payload.cause_track_id is None


def test_codec_rejects_corrupt_records():
    data = minicity.encode_message(minicity.warning_message(0, 2.0, True, 4))
    with pytest.raises(minicity.ParameterError):
        minicity.decode_message(data[:-1])
    with pytest.raises(minicity.ParameterError):
        minicity.decode_message(data[:2] + b'\x09' + data[3:])
    with pytest.raises(minicity.ParameterError):
        minicity.decode_message(data[:5])


def test_ideal_channel_delivers_at_send_time():
    ch = _channel()
    msg = minicity.warning_message(0, 1.0, True)
    assert ch.send(msg, 1.0, receiver=2) == minicity.Delivery(1.0)
    assert ch.receive(1.0, receiver=1) == []
    assert ch.receive(1.0, receiver=2) == [msg]


def test_latency_in_ticks():
    ch = _channel(base_latency=0.2)
    ch.send(minicity.warning_message(0, 0.0, True), 0.0)
    arrivals = [t for t in np.arange(0.0, 0.5, 0.05) if ch.receive(t)]
    npt.assert_allclose(arrivals, [0.2])


def test_jitter_never_reorders_a_link():
    ch = _channel(seed=3, base_latency=0.1, jitter_sigma=0.08)
    for k in range(50):
        ch.send(minicity.vehicle_state_message(1, 0.05 * k, minicity.Pose2D(0.0, 0.0), 0.0), 0.05 * k)
    received = ch.receive(100.0)
    assert [m.timestamp for m in received] == sorted(m.timestamp for m in received)
    assert len(received) == 50
    assert ch.pending() == 0


def test_drop_probability():
    assert _channel(drop_prob=1.0).send(minicity.warning_message(0, 0.0, True), 0.0) is minicity.DROPPED
    ch = _channel(seed=9, drop_prob=0.3)
    for k in range(2000):
        ch.send(minicity.warning_message(0, float(k), True), float(k))
    counts = ch.counts()
    assert counts['sent'] == 2000
    assert 0.25 < counts['dropped'] / 2000.0 < 0.35


def test_intersection_model_geometry():
    model = _model()
    npt.assert_almost_equal(minicity.polygon_area(model.polygon()), 0.64)
    npt.assert_allclose(model.centroid(), [2.6, 3.0])
    bigger = model.with_scale(1.25)
    npt.assert_almost_equal(minicity.polygon_area(bigger.polygon()), 1.0)
    shifted = model.with_offset((-0.3, -0.3))
    npt.assert_allclose(shifted.centroid(), [2.3, 2.7])
    assert model.stop_line('S') == ((2.6, 2.15), (3.0, 2.15))
    with pytest.raises(minicity.ConfigError):
        model.with_scale(2.2)
    with pytest.raises(minicity.ParameterError):
        model.with_scale(0.0)


def test_zone_outline_keeps_its_depth():
    model = _model(approach_zone_depth=0.5)
    outline = model.zone()
    distances = [minicity.distance_to_polygon(p, model.polygon()) for p in outline]
    npt.assert_allclose(distances, 0.5, atol=1e-9)
    assert model.in_zone((2.6, 2.2)) and not model.in_zone((2.6, 1.0))


def test_approaching():
    model = _model()
    assert minicity.approaching(_track(2.6, 3.0), model)
    assert minicity.approaching(_track(2.6, 1.9, vy=0.5), model)
    assert not minicity.approaching(_track(2.6, 1.9, vy=-0.5), model)
    assert not minicity.approaching(_track(2.6, 1.9, vy=0.01), model)
    assert not minicity.approaching(_track(2.6, 1.0, vy=1.0), model)


def test_decide_warning_ignores_reporting_vehicles():
    model = _model()
    tracks = [_track(2.6, 1.9, vy=0.5, track_id=7)]
    report = minicity.CommReport(minicity.Pose2D(2.6, 1.4, math.pi / 2), 1.0, 0.0)
    assert minicity.decide_warning(tracks, {1: report}, model, 0.5) == (False, None)
    assert minicity.decide_warning(tracks, {1: report}, model, 0.0) == (True, 7)
    assert minicity.decide_warning(tracks, {}, model, 0.0) == (True, 7)


def test_infra_keeps_newest_report():
    infra = minicity.InfraState()
    infra.receive(minicity.vehicle_state_message(1, 0.5, minicity.Pose2D(1.0, 1.0), 0.3))
    infra.receive(minicity.vehicle_state_message(1, 0.4, minicity.Pose2D(9.0, 9.0), 0.3))
    infra.receive(minicity.warning_message(0, 0.6, True))
    assert infra.comm_states() == {1: minicity.CommReport(minicity.Pose2D(1.0, 1.0), 0.3, 0.5)}


def test_infra_decide_emits_on_change_and_heartbeat():
    model = _model(heartbeat=0.1)
    infra = minicity.InfraState()
    first = minicity.infra_decide(infra, model, 0.0)
    assert first.kind == minicity.WARNING and not first.payload.active
    assert minicity.infra_decide(infra, model, 0.05) is None
    assert minicity.infra_decide(infra, model, 0.1) is not None
    infra.set_tracks([_track(2.6, 3.0, track_id=2)])
    raised = minicity.infra_decide(infra, model, 0.15)
    assert raised.payload == minicity.WarningPayload(True, 2)
    assert infra.warning_active()
    assert [d.active for d in infra.log()] == [False, False, False, True]


def test_comm_vehicle_handle():
    line = minicity.StopLine((2.6, 2.15), (3.0, 2.15))
    ctx = minicity.VehicleContext(make_state(2.8, 1.15, math.pi / 2, 1.0), PARAMS, line, 1.0, 0.05)
    assert minicity.comm_vehicle_handle(False, ctx) == minicity.ControlIntent('cruise', 1.0)
    assert minicity.comm_vehicle_handle(True, ctx) == minicity.ControlIntent('stop', 1.0)
    near = ctx._replace(state=make_state(2.8, 1.95, math.pi / 2, 1.0))
    intent = minicity.comm_vehicle_handle(True, near)
    assert intent.mode == 'stop'
    npt.assert_almost_equal(intent.target_speed, math.sqrt(2.0 * minicity.PLANNED_BRAKE_FRACTION * PARAMS.max_decel * 0.15))
    npt.assert_almost_equal(intent.target_speed, 0.6)
    past = ctx._replace(state=make_state(2.8, 2.3, math.pi / 2, 1.0))
    assert minicity.comm_vehicle_handle(True, past).mode == 'continue'
    with pytest.raises(minicity.ConfigError):
        minicity.comm_vehicle_handle(True, ctx._replace(stop_line=None))


def test_warning_latch_bridges_short_gaps():
    latch = minicity.WarningLatch(0.1)
    assert not latch.update(False, 0.0)
    assert latch.update(True, 0.05)
    assert latch.update(False, 0.1)
    assert latch.update(False, 0.15)
    assert not latch.update(False, 0.2)
    assert latch.update(True, 0.25)
    assert not minicity.WarningLatch(0.0).update(False, 1.0)
    with pytest.raises(minicity.ParameterError):
        minicity.WarningLatch(-0.1)


def test_presence_trigger():
    model = _model()
    assert not minicity.presence_trigger(minicity.Pose2D(2.8, 2.1, math.pi / 2), PARAMS, model)
    assert minicity.presence_trigger(minicity.Pose2D(2.8, 2.2, math.pi / 2), PARAMS, model)
    assert minicity.presence_trigger(minicity.Pose2D(2.8, 2.1, math.pi / 2), PARAMS, model.with_scale(1.25))


def test_channel_send_uses_the_default_receiver():
    ch = _channel(base_latency=0.1)
    msg = minicity.vehicle_state_message(1, 0.0, minicity.Pose2D(2.8, 1.0, 1.5), 1.0)
    npt.assert_allclose(minicity.channel_send(ch, msg, 0.0).at, 0.1)
    assert ch.pending() == 1
    assert ch.receive(0.1) == [msg]
    assert ch.pending() == 0
    with pytest.raises(minicity.ParameterError):
        minicity.channel_send(ch, msg, math.nan)
