"""Gap engine: hand oracles, closed-form kinematics, frame-scan equivalence."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pedcross import gaps as gp
from pedcross import sim
from conftest import scripted_trial


def _stream(times, lane=sim.NEAR, direction=+1):
    return sim.VehicleStream(lane, direction, np.asarray(times, dtype=float))


# ---------------------------------------------------------------------------
# car gaps

def test_car_gaps_hand():
    out = gp.car_gaps(_stream([0.0, 5.0, 12.0]))
    assert [g.duration for g in out] == [5.0, 7.0]
    assert [(g.open_t, g.close_t) for g in out] == [(0.0, 5.0), (5.0, 12.0)]


def test_car_gaps_degenerate():
    assert gp.car_gaps(_stream([0.0])) == []


def test_simulated_streams_inside_band(de_cohort):
    for trial in de_cohort:
        for s in trial.streams:
            d = np.diff(s.arrival_times)
            assert (d >= trial.scenario.gap_min - 1e-9).all()
            assert (d <= trial.scenario.gap_max + 1e-9).all()


@given(st.lists(st.floats(0.1, 8.0), min_size=1, max_size=30))
@settings(max_examples=60, deadline=None)
def test_car_gap_durations_are_diffs(diffs):
    times = np.concatenate([[0.0], np.cumsum(diffs)])
    out = gp.car_gaps(_stream(times))
    assert np.allclose([g.duration for g in out], diffs)


# ---------------------------------------------------------------------------
# effective gaps

def test_stationary_effective_equals_car():
    t = np.arange(0.0, 30.0, 0.02)
    x = np.zeros_like(t)
    eff = gp.effective_gaps(_stream([10.0, 15.0]), t, x, 8.33)
    assert len(eff) == 1
    assert abs(eff[0].duration - 5.0) < 1e-12


def test_moving_pedestrian_closed_form():
    """Walking along the lane at rate v: pass time solves
    d*(x0 + v*(t - t0)) = speed*(t - a)."""
    speed, v = 8.33, 1.0
    t = np.arange(0.0, 40.0, 0.02)
    x = v * t                      # moves in +x from origin
    stream = _stream([10.0, 20.0], direction=+1)
    times, extrap = gp.pass_times(stream, t, x, speed)
    for a, got in zip(stream.arrival_times, times):
        want = a * speed / (speed - v)
        assert abs(got - want) < 1e-9
    assert not extrap.any()
    # toward the oncoming lane (direction -1) the pass happens earlier
    stream2 = _stream([10.0, 20.0], lane=sim.FAR, direction=-1)
    times2, _ = gp.pass_times(stream2, t, x, speed)
    for a, got in zip(stream2.arrival_times, times2):
        want = a * speed / (speed + v)
        assert abs(got - want) < 1e-9


def test_walking_away_stretches_gap():
    t = np.arange(0.0, 60.0, 0.02)
    x_away = 0.5 * t
    x_toward = -0.5 * t
    s = _stream([20.0, 26.0], direction=+1)
    g_away = gp.effective_gaps(s, t, x_away, 8.33)[0].duration
    g_toward = gp.effective_gaps(s, t, x_toward, 8.33)[0].duration
    assert g_away > 6.0 > g_toward


def test_extrapolation_flagged():
    t = np.arange(0.0, 5.0, 0.02)      # trace ends before vehicles pass
    x = np.zeros_like(t)
    eff = gp.effective_gaps(_stream([10.0, 14.0]), t, x, 8.33)
    assert eff[0].extrapolated


# ---------------------------------------------------------------------------
# synchronized gaps

def test_sync_worked_example_near7_far5():
    """Simultaneous heads; near window 7 s, far window 5 s: the window
    available at the shared head lasts exactly 5 s (closed by the far
    vehicle), with the 5->7 s remainder as a separate later window."""
    near = gp.car_gaps(_stream([0.0, 7.0]))
    far = gp.car_gaps(_stream([0.0, 5.0], lane=sim.FAR, direction=-1))
    both = gp.synchronized_gaps(near, far)
    assert (both[0].open_t, both[0].close_t) == (0.0, 5.0)
    assert both[0].duration == 5.0


def test_sync_offset_windows_tile_merged_events():
    # every pass event opens a window closing at the next event on any lane
    near = gp.car_gaps(_stream([2.0, 9.0]))
    far = gp.car_gaps(_stream([4.0, 12.0], lane=sim.FAR, direction=-1))
    both = gp.synchronized_gaps(near, far)
    assert [(g.open_t, g.close_t) for g in both] == [(2.0, 4.0), (4.0, 9.0),
                                                     (9.0, 12.0)]


def test_sync_no_containment():
    near = gp.car_gaps(_stream([0.0, 4.0, 11.0, 14.0]))
    far = gp.car_gaps(_stream([1.0, 5.0, 9.0, 15.0], lane=sim.FAR, direction=-1))
    both = gp.synchronized_gaps(near, far)
    wins = [(g.open_t, g.close_t) for g in both]
    for i, (o1, c1) in enumerate(wins):
        for j, (o2, c2) in enumerate(wins):
            if i != j:
                assert not (o1 >= o2 and c1 <= c2), "contained window kept"


def test_sync_durations_positive_and_sorted(de_cohort):
    for trial in de_cohort:
        b = trial.gaps or gp.compute_all_gaps(trial)
        for lst in (b.car_both, b.eff_both):
            opens = [g.open_t for g in lst]
            assert opens == sorted(opens)
            assert all(g.duration > 0 for g in lst)


# ---------------------------------------------------------------------------
# frame-scan oracle

def frame_scan_pass_times(stream, trace_t, trace_x, speed):
    """Independent stopwatch: first frame where the vehicle has caught up
    with the pedestrian's current x."""
    out = []
    d = float(stream.direction)
    for a in stream.arrival_times:
        sep = speed * (trace_t - a) - d * trace_x   # <0 before the pass
        k = np.nonzero(sep >= 0.0)[0]
        out.append(trace_t[k[0]] if len(k) else np.inf)
    return np.array(out)


def test_pass_times_match_frame_scan(de_cohort):
    dt = de_cohort[0].scenario.frame_dt
    checked = 0
    for trial in de_cohort[:40]:
        speed = trial.scenario.vehicle_speed
        for s in trial.streams:
            got, _ = gp.pass_times(s, trial.trace_t, trial.trace_xy[:, 0], speed)
            want = frame_scan_pass_times(s, trial.trace_t,
                                         trial.trace_xy[:, 0], speed)
            m = np.isfinite(want)
            assert np.abs(got[m] - want[m]).max() <= dt + 1e-9
            checked += int(m.sum())
    assert checked > 100


# ---------------------------------------------------------------------------
# crossing events

def test_events_on_scripted_trial():
    # enter at t=10 inside the near [8,15] / far [9,14] shared window
    trial = scripted_trial([2.0, 8.0, 15.0], [3.0, 9.0, 14.0], 10.0)
    ev = gp.crossing_events(trial)
    assert ev.wait_start == 0.0
    assert abs(ev.road_entry_t - 10.0) < 0.03
    assert ev.crossing_end_t > ev.road_entry_t
    assert abs(ev.accepted_gap_car_both - 5.0) < 1e-9   # [9,14] overlap
    assert not ev.used_zebra


def test_events_never_entering():
    trial = scripted_trial([2.0, 8.0], [3.0, 9.0], 10.0)
    trial.trace_xy[:, 1] = -1.5     # never leaves the curb
    ev = gp.crossing_events(trial)
    assert ev.road_entry_t is None and ev.crossing_end_t is None
    assert ev.accepted_gap_car_both is None


def test_used_and_missed_flags():
    trial = scripted_trial([2.0, 8.0, 15.0], [3.0, 9.0, 14.0], 10.0)
    ev = gp.crossing_events(trial)
    b = trial.gaps
    used = [g for g in b.car_both if g.used]
    assert len(used) == 1
    for g in b.car_both:
        if g.missed:
            assert g.close_t < ev.road_entry_t
            assert not g.used
