"""Gap taxonomy and crossing-event extraction.

Three gap kinds are computed from a trial:

* car gaps: differences between consecutive arrival times on one lane,
  measured at the reference line (the pedestrian's start abscissa).
* effective gaps: the same pairs of vehicles, but timed by a virtual
  stopwatch that travels with the pedestrian; each boundary is the instant
  the vehicle's x coordinate equals the pedestrian's current x coordinate.
* synchronized gaps: windows jointly open across both lanes.  At every pass
  event the candidate window lasts until the earlier next pass on either
  lane; candidate windows contained inside a larger one are discarded.

All windows are half-open [open_t, close_t).  The pedestrian "uses" the
window of each kind that contains its road-entry instant, and "misses" every
window that closed between wait start and entry.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:  # pragma: no cover
    from .sim import TrialRecord

CAR, EFFECTIVE = "car", "effective"
NEAR, FAR, BOTH = "near", "far", "both"

# Entry within this x-distance of the zebra centre counts as using it.
ZEBRA_HALF_WIDTH = 2.0


@dataclass
class GapObservation:
    """One gap window of a given kind and lane scope."""

    lane_scope: str
    kind: str
    open_t: float
    close_t: float
    duration: float
    used: bool = False
    missed: bool = False
    extrapolated: bool = False

    def __post_init__(self):
        if not self.close_t > self.open_t:
            raise ValueError("gap window must have positive extent")
        if self.duration <= 0:
            raise ValueError("gap duration must be positive")


@dataclass
class CrossingEvents:
    """Timestamps and labels of one pedestrian crossing."""

    wait_start: float
    road_entry_t: float | None
    crossing_end_t: float | None
    accepted_gap_car_both: float | None
    accepted_gap_effective_both: float | None
    used_zebra: bool


@dataclass
class GapBundle:
    """Every gap list computed for one trial."""

    car_near: list = field(default_factory=list)
    car_far: list = field(default_factory=list)
    car_both: list = field(default_factory=list)
    eff_near: list = field(default_factory=list)
    eff_far: list = field(default_factory=list)
    eff_both: list = field(default_factory=list)

    def groups(self):
        yield NEAR, CAR, self.car_near
        yield FAR, CAR, self.car_far
        yield BOTH, CAR, self.car_both
        yield NEAR, EFFECTIVE, self.eff_near
        yield FAR, EFFECTIVE, self.eff_far
        yield BOTH, EFFECTIVE, self.eff_both

    def all_observations(self):
        for _, _, lst in self.groups():
            yield from lst


def car_gaps(stream) -> list:
    """Consecutive arrival differences on one lane; [] for < 2 arrivals."""
    a = np.asarray(stream.arrival_times, dtype=float)
    scope = stream.lane
    return [GapObservation(scope, CAR, float(a[i]), float(a[i + 1]), float(a[i + 1] - a[i]))
            for i in range(len(a) - 1)]


def pass_times(stream, trace_t, trace_x, speed: float, ref_x: float = 0.0):
    """Instant each vehicle's x equals the pedestrian's (moving) x.

    The along-lane separation dir*(x_ped - x_veh) is strictly decreasing in
    time because vehicles outrun pedestrians, so each vehicle has exactly one
    pass instant.  With psi(t) = dir*(x_ped(t) - ref_x) - speed*t the root of
    vehicle a solves psi(t) = -speed*a, and psi is strictly decreasing, so a
    single vectorized bisection over the trace works for every vehicle at
    once.  Roots outside the trace use the frozen endpoint position and are
    flagged.

    Returns (times, extrapolated) arrays, times strictly increasing.
    """
    a = np.asarray(stream.arrival_times, dtype=float)
    t = np.asarray(trace_t, dtype=float)
    x = np.asarray(trace_x, dtype=float)
    if speed <= 0:
        raise ValueError("vehicle speed must be positive")
    d = float(stream.direction)
    psi = d * (x - ref_x) - speed * t
    targets = -speed * a
    # psi decreasing: search on the reversed (increasing) array.
    neg = -psi
    idx = np.searchsorted(neg, -targets, side="left")

    times = np.empty_like(a)
    extrap = np.zeros(len(a), dtype=bool)
    for k, (ai, tgt, i) in enumerate(zip(a, targets, idx)):
        if i == 0:
            # Root at/before trace start: pedestrian frozen at x[0].
            times[k] = ai + d * (x[0] - ref_x) / speed
            extrap[k] = times[k] < t[0]
        elif i >= len(t):
            times[k] = ai + d * (x[-1] - ref_x) / speed
            extrap[k] = True
        else:
            p0, p1 = psi[i - 1], psi[i]
            if p0 == p1:
                times[k] = t[i]
            else:
                times[k] = t[i - 1] + (t[i] - t[i - 1]) * (p0 - tgt) / (p0 - p1)
    return times, extrap


def effective_gaps(stream, trace_t, trace_x, speed: float, ref_x: float = 0.0) -> list:
    """Virtual-stopwatch gaps between consecutive vehicles on one lane."""
    times, extrap = pass_times(stream, trace_t, trace_x, speed, ref_x)
    out = []
    for i in range(len(times) - 1):
        o, c = float(times[i]), float(times[i + 1])
        out.append(GapObservation(stream.lane, EFFECTIVE, o, c, c - o,
                                  extrapolated=bool(extrap[i] or extrap[i + 1])))
    return out


def _windows_from_events(event_lists) -> np.ndarray:
    """Candidate synchronized windows over per-lane pass-event arrays.

    For each merged event, the window closes at the earliest strictly-later
    event among lanes that still have one.  Lanes without events are ignored
    (single-lane pass-through).
    """
    lanes = [np.asarray(e, dtype=float) for e in event_lists if len(e) > 0]
    if not lanes:
        return np.empty((0, 2))
    events = np.unique(np.concatenate(lanes))
    close = np.full(len(events), np.inf)
    for lane in lanes:
        j = np.searchsorted(lane, events, side="right")
        nxt = np.where(j < len(lane), lane[np.minimum(j, len(lane) - 1)], np.inf)
        close = np.minimum(close, nxt)
    ok = np.isfinite(close)
    return np.column_stack([events[ok], close[ok]])


def drop_contained(windows: np.ndarray) -> np.ndarray:
    """Remove duplicate windows and windows contained in a larger one.

    A window is dropped when another kept window spans it ([o2,c2] with
    o2 <= o1 and c1 <= c2, not identical both ways); exact duplicates
    collapse to one.  Sweep order: open ascending, close descending, so any
    container precedes its contents.
    """
    if len(windows) == 0:
        return np.asarray(windows, dtype=float).reshape(0, 2)
    w = np.asarray(windows, dtype=float)
    order = np.lexsort((-w[:, 1], w[:, 0]))
    kept = []
    max_close = -np.inf
    for i in order:
        o, c = w[i]
        if c <= max_close:
            continue
        kept.append((o, c))
        max_close = c
    kept.sort()
    return np.asarray(kept)


def sync_windows(near_events, far_events) -> np.ndarray:
    """Synchronized windows as an (k, 2) array of [open, close) pairs."""
    return drop_contained(_windows_from_events([near_events, far_events]))


def synchronized_gaps(near_gaps: list, far_gaps: list, kind: str | None = None) -> list:
    """Two-lane synchronized gaps from per-lane gap lists of one kind."""
    kinds = {g.kind for g in near_gaps} | {g.kind for g in far_gaps}
    if len(kinds) > 1:
        raise ValueError(f"mixed gap kinds {sorted(kinds)}")
    if kind is None:
        kind = kinds.pop() if kinds else CAR
    elif kinds and kinds != {kind}:
        raise ValueError("gap lists do not match requested kind")

    def boundary_events(gaps):
        ev, flagged = [], []
        for g in gaps:
            for b, f in ((g.open_t, g.extrapolated), (g.close_t, g.extrapolated)):
                ev.append(b)
                flagged.append(f)
        return np.asarray(ev), np.asarray(flagged, dtype=bool)

    ev_n, fl_n = boundary_events(near_gaps)
    ev_f, fl_f = boundary_events(far_gaps)
    wins = drop_contained(_windows_from_events([ev_n, ev_f]))
    all_ev = np.concatenate([ev_n, ev_f])
    all_fl = np.concatenate([fl_n, fl_f]) if len(all_ev) else np.zeros(0, bool)

    def event_flag(t):
        hit = all_fl[np.isclose(all_ev, t, rtol=0.0, atol=1e-12)]
        return bool(hit.any())

    return [GapObservation(BOTH, kind, float(o), float(c), float(c - o),
                           extrapolated=event_flag(o) or event_flag(c))
            for o, c in wins]


def compute_all_gaps(trial: "TrialRecord") -> GapBundle:
    """All six gap lists for one trial."""
    near = trial.stream(NEAR)
    far = trial.stream(FAR)
    speed = trial.scenario.vehicle_speed
    ref_x = trial.scenario.start_x
    tx = trial.trace_xy[:, 0]
    b = GapBundle()
    b.car_near = car_gaps(near)
    b.car_far = car_gaps(far)
    b.car_both = synchronized_gaps(b.car_near, b.car_far, CAR)
    b.eff_near = effective_gaps(near, trial.trace_t, tx, speed, ref_x)
    b.eff_far = effective_gaps(far, trial.trace_t, tx, speed, ref_x)
    b.eff_both = synchronized_gaps(b.eff_near, b.eff_far, EFFECTIVE)
    return b


def crossing_events(trial: "TrialRecord", bundle: GapBundle | None = None) -> CrossingEvents:
    """Derive entry/exit timestamps, flag used and missed gaps, label zebra use.

    Attaches the bundle and events to the trial (trial.gaps / trial.events)
    and returns the events.  Entry is the first trace frame at or past the
    near road edge y=0; a trial whose trace never enters the road yields
    absent entry fields and no flags.
    """
    if bundle is None:
        bundle = compute_all_gaps(trial)
    t = trial.trace_t
    y = trial.trace_xy[:, 1]
    x = trial.trace_xy[:, 0]
    wait_start = float(t[0])

    entered = y >= 0.0
    if not entered.any():
        ev = CrossingEvents(wait_start, None, None, None, None, False)
        trial.gaps, trial.events = bundle, ev
        return ev
    k = int(np.argmax(entered))
    entry_t = float(t[k])
    past = y >= trial.scenario.road_width
    end_t = float(t[int(np.argmax(past))]) if past.any() else None

    accepted = {CAR: None, EFFECTIVE: None}
    for scope, kind, lst in bundle.groups():
        for g in lst:
            g.used = g.open_t <= entry_t < g.close_t
            g.missed = (not g.used) and wait_start <= g.close_t < entry_t
            if g.used and scope == BOTH:
                accepted[kind] = g.duration

    used_zebra = bool(trial.scenario.zebra_present
                      and abs(float(x[k]) - trial.scenario.zebra_x)
                      <= ZEBRA_HALF_WIDTH)
    ev = CrossingEvents(wait_start, entry_t, end_t,
                        accepted[CAR], accepted[EFFECTIVE], used_zebra)
    trial.gaps, trial.events = bundle, ev
    return ev
