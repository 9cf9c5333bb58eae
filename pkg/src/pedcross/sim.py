"""Deterministic two-lane road-crossing world with parameterized pedestrian agents.

The world is deliberately small: a straight road with one traffic lane per
direction, point vehicles at constant speed, and a single pedestrian that
starts on the near curb and wants to reach the far side.  Vehicles on the far
lane mirror the near lane shifted by a per-trial constant offset, so both
lanes form loose platoons and sizable two-lane windows actually occur.

The agent follows a thresholded gap law: it waits at the curb, watches the
synchronized (two-lane) gap windows, and enters the road at the first window
whose duration is at least

    max(threshold_floor, road_width / walk_speed + safety_margin
        - impatience_rate * missed_so_far)

After ``horizon`` seconds the threshold relaxes to the floor, and after twice
the horizon the agent takes the next window it can physically walk into, so
every trial terminates.  Scenario variants add a zebra crossing (vehicles
yield via a scripted linear stop) and leader-follower group conditions where
a known leader gap is planted into both lanes.

Everything is reproducible: a trial is a pure function of
(config, agent, seed), and datasets derive per-trial seeds by counter from a
master seed, so generation order and thread count never matter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .gaps import ZEBRA_HALF_WIDTH, sync_windows

VEHICLE_SPEED = 8.33            # m/s, 30 km/h
GAP_RANGE = (2.5, 8.5)          # s, uniform inter-arrival bounds
ROAD_WIDTH = 7.0                # m, two 3.5 m lanes
FRAME_DT = 0.02                 # s, 50 Hz trace sampling
HORIZON = 120.0                 # s, threshold relaxation point
ZEBRA_X = 4.0                   # m, default zebra abscissa
YIELD_RAMP = 1.0                # s, linear braking ramp ending at the zebra line
ZEBRA_ENTRY_DELAY = 1.25        # s, wait at zebra before stepping in (ramp + margin)
INITIAL_PAUSE = 0.5             # s, look-around before walking to the zebra

NEAR, FAR = "near", "far"
ALONE, RISKY, SAFE = "alone", "risky", "safe"
LEADER_GAPS = {RISKY: 4.0, SAFE: 6.5}

_SIXTY_FOURTH = 1.0 / 64.0


def _round64(x: float) -> float:
    """Round up to the 1/64 s grid. Grid times are dyadic, so sums and
    differences of grid times are exact in float64."""
    return math.ceil(x * 64.0) * _SIXTY_FOURTH


@dataclass(frozen=True)
class ScenarioConfig:
    """Static description of one road-crossing scenario."""

    lane_count: int = 2
    vehicle_speed: float = VEHICLE_SPEED
    gap_min: float = GAP_RANGE[0]
    gap_max: float = GAP_RANGE[1]
    road_width: float = ROAD_WIDTH
    zebra_present: bool = False
    zebra_x: float = ZEBRA_X
    start_x: float = 0.0
    start_y: float = -1.5
    goal_x: float = 0.0
    goal_y: float = ROAD_WIDTH + 1.5
    group_condition: str = ALONE
    leader_gap: float | None = None
    frame_dt: float = FRAME_DT
    # Far lane arrivals = near lane + delta, delta drawn per trial from this
    # band and snapped to the 1/64 s grid.
    lane_offset_min: float = 0.35
    lane_offset_max: float = 0.85

    def __post_init__(self):
        if self.lane_count != 2:
            raise ValueError("only two-lane roads are modeled")
        for name in ("vehicle_speed", "frame_dt", "road_width"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be finite and positive")
        if not (0 < self.gap_min < self.gap_max) or not math.isfinite(self.gap_max):
            raise ValueError("need 0 < gap_min < gap_max")
        if self.gap_max - self.gap_min < 1.0:
            raise ValueError("gap band narrower than 1 s leaves no room for planting")
        if not (self.start_y < 0.0 < self.road_width <= self.goal_y):
            raise ValueError("pedestrian must start before the near edge and aim past the far edge")
        if not (0.0 <= self.lane_offset_min <= self.lane_offset_max <= self.gap_min):
            raise ValueError("lane offsets must satisfy 0 <= min <= max <= gap_min")
        if self.lane_offset_max > self.gap_max - self.gap_min:
            raise ValueError("lane offset band too wide for the gap band")
        if self.group_condition not in (ALONE, RISKY, SAFE):
            raise ValueError(f"unknown group condition {self.group_condition!r}")
        if self.group_condition != ALONE:
            if self.zebra_present:
                raise ValueError("group conditions and zebra scenarios do not combine")
            gap = self.leader_gap if self.leader_gap is not None else LEADER_GAPS[self.group_condition]
            if gap not in (4.0, 6.5):
                raise ValueError("leader_gap must be 4.0 or 6.5")
            if not (self.gap_min <= gap <= self.gap_max):
                raise ValueError("leader_gap outside the scenario gap band")
            object.__setattr__(self, "leader_gap", gap)

    @property
    def condition_label(self) -> str:
        """Analysis label: zebra scenarios shadow the (alone) group value."""
        return "zebra" if self.zebra_present else self.group_condition


@dataclass(frozen=True)
class AgentProfile:
    """Behavioral parameters of the synthetic pedestrian population."""

    profile_name: str
    walk_speed_mean: float
    walk_speed_sd: float
    safety_margin_mean: float
    safety_margin_sd: float
    impatience_rate: float
    threshold_floor: float
    zebra_preference: float
    leader_follow_weight: float
    mind_change_prob: float

    def __post_init__(self):
        if self.walk_speed_sd < 0 or self.safety_margin_sd < 0:
            raise ValueError("standard deviations must be non-negative")
        if self.threshold_floor <= 0:
            raise ValueError("threshold_floor must be positive")
        if self.impatience_rate < 0:
            raise ValueError("impatience_rate must be non-negative")
        if not (math.isfinite(self.walk_speed_mean) and self.walk_speed_mean > 0):
            raise ValueError("walk_speed_mean must be finite and positive")
        if not math.isfinite(self.safety_margin_mean):
            raise ValueError("safety_margin_mean must be finite")
        for name in ("zebra_preference", "leader_follow_weight", "mind_change_prob"):
            p = getattr(self, name)
            if not (0.0 <= p <= 1.0):
                raise ValueError(f"{name} must lie in [0, 1]")


# Population presets. Numeric values were tuned against the target summary
# statistics of the two field datasets (see scripts/calibrate_profiles.py);
# they are ordinary defaults, not fitted per-run quantities.
DE_PROFILE = AgentProfile(
    profile_name="DE",
    walk_speed_mean=1.43, walk_speed_sd=0.12,
    safety_margin_mean=2.0, safety_margin_sd=0.45,
    impatience_rate=0.9, threshold_floor=5.0,
    zebra_preference=0.5, leader_follow_weight=0.62,
    mind_change_prob=0.046,
)
JP_PROFILE = AgentProfile(
    profile_name="JP",
    walk_speed_mean=1.48, walk_speed_sd=0.12,
    safety_margin_mean=2.6, safety_margin_sd=0.5,
    impatience_rate=0.5, threshold_floor=5.2,
    zebra_preference=0.55, leader_follow_weight=0.55,
    mind_change_prob=0.006,
)
PROFILE_PRESETS = {"DE": DE_PROFILE, "JP": JP_PROFILE}

# Drawn walk speeds are clipped to keep the curb step-in shorter than any
# acceptable window (1.5 m / 0.8 m/s < gap_min).
WALK_SPEED_CLIP = (0.8, 2.5)
SAFETY_MARGIN_CLIP = (0.0, 10.0)


@dataclass
class VehicleStream:
    """Arrival times of point vehicles on one lane at the reference line x=0."""

    lane: str
    direction: int
    arrival_times: np.ndarray

    def validate(self, gap_min: float, gap_max: float) -> None:
        a = self.arrival_times
        if a.ndim != 1 or len(a) < 2:
            raise ValueError("stream needs at least two arrivals")
        d = np.diff(a)
        if not (np.all(d >= gap_min - 1e-9) and np.all(d <= gap_max + 1e-9)):
            raise ValueError("inter-arrival time outside the configured band")


@dataclass
class AgentOutcome:
    """Ground-truth bookkeeping of what the agent actually did."""

    walk_speed: float
    safety_margin: float
    plan: str                    # direct | zebra | divert
    followed_leader: bool
    missed_before_entry: int
    threshold_at_entry: float
    move_start_t: float
    road_entry_est: float        # exact (unquantized) entry-time estimate
    lane_offset: float


@dataclass
class TrialRecord:
    """One simulated crossing, traffic plus pedestrian trace."""

    trial_id: str
    participant_id: str
    country_tag: str
    scenario: ScenarioConfig
    streams: tuple
    trace_t: np.ndarray
    trace_xy: np.ndarray
    entry_frame_index: int
    outcome: AgentOutcome
    zebra_yield: tuple | None = None   # (t_on, t_off) while vehicles hold at the line
    events: object = None              # CrossingEvents, attached by the gap engine
    gaps: object = None                # GapBundle, attached by the gap engine

    @property
    def condition_label(self) -> str:
        return self.scenario.condition_label

    def stream(self, lane: str) -> VehicleStream:
        for s in self.streams:
            if s.lane == lane:
                return s
        raise KeyError(lane)


def _grow_lane(rng, start: float, gap_min: float, gap_max: float, until: float) -> list:
    out = [start]
    while out[-1] < until:
        out.append(out[-1] + rng.uniform(gap_min, gap_max))
    return out


def _offset_far(near: np.ndarray, delta: float) -> np.ndarray:
    """Far lane mirrors the near lane shifted by delta, except both lanes
    share the very first arrival (one platoon release).  The shared head
    guarantees every synchronized window closes at an instant where some
    per-lane gap also closes, which bounds synchronized missed-gap maxima
    by the per-lane ones."""
    far = near + delta
    far[0] = near[0]
    return far


def _build_streams(rng, cfg: ScenarioConfig, horizon: float):
    """Near-lane renewal arrivals plus the offset far lane.

    Group scenarios plant consecutive near arrivals at T-delta and
    T+leader_gap with T on the 1/64 grid; the far lane then carries T and
    T+leader_gap+delta, so the synchronized window [T, T+leader_gap) has an
    exactly representable duration.
    """
    delta = _round64(rng.uniform(cfg.lane_offset_min, cfg.lane_offset_max))
    delta = min(max(delta, cfg.lane_offset_min), cfg.gap_min)
    t_cover = 2.0 * horizon + 20.0
    first = rng.uniform(0.3, cfg.gap_min)
    # First near gap capped so the far lane's first difference stays in band.
    second = first + rng.uniform(cfg.gap_min, cfg.gap_max - delta)
    planted_t = None
    if cfg.group_condition == ALONE:
        near = [first] + _grow_lane(rng, second, cfg.gap_min, cfg.gap_max, t_cover)
    else:
        lead_in = rng.uniform(8.0, 16.0)
        near = [first] + _grow_lane(rng, second, cfg.gap_min, cfg.gap_max, lead_in)
        gap_to_plant = rng.uniform(cfg.gap_min + 0.1, cfg.gap_max - 0.1)
        planted_t = _round64(near[-1] + delta + gap_to_plant)
        near.append(planted_t - delta)
        near.append(planted_t + cfg.leader_gap)
        near.extend(_grow_lane(rng, near[-1], cfg.gap_min, cfg.gap_max, t_cover)[1:])
    near_arr = np.asarray(near)
    return near_arr, _offset_far(near_arr, delta), delta, planted_t


def _extend_streams(rng, cfg, near, far, n_more=50):
    delta = far[1] - near[1]
    ext = _grow_lane(rng, near[-1], cfg.gap_min, cfg.gap_max, near[-1] + n_more * cfg.gap_min)[1:]
    near2 = np.concatenate([near, ext])
    return near2, _offset_far(near2, delta)


def _scan_windows(windows, S, F, agent, cfg, horizon):
    """First synchronized window passing the threshold law.

    Returns (move_t, missed_count, threshold) or None when the supplied
    windows are exhausted (caller extends the streams and retries).
    """
    base = cfg.road_width / S + F
    walkup = (0.0 - cfg.start_y) / S
    missed = 0
    for o, c in windows:
        d = c - o
        if o >= 2.0 * horizon:
            if d >= walkup + 0.15:
                return o, missed, float("-inf")
        elif o >= horizon:
            if d >= agent.threshold_floor:
                return o, missed, agent.threshold_floor
        else:
            thr = max(agent.threshold_floor, base - agent.impatience_rate * missed)
            if d >= thr:
                return o, missed, thr
        missed += 1
    return None


def _waypoints_direct(cfg, S, move_t):
    sx, sy, gx, gy = cfg.start_x, cfg.start_y, cfg.goal_x, cfg.goal_y
    dist = math.hypot(gx - sx, gy - sy)
    return [(0.0, sx, sy), (move_t, sx, sy), (move_t + dist / S, gx, gy)]


def _waypoints_divert(cfg, S, move_t):
    # Starts like a direct crossing, bends toward the zebra mid-road.
    sx, sy, gx, gy = cfg.start_x, cfg.start_y, cfg.goal_x, cfg.goal_y
    zx = cfg.zebra_x
    y1 = 0.45 * cfg.road_width
    y2 = cfg.road_width
    pts = [(sx, sy), (sx, y1), (zx, y2), (gx, gy)]
    wps = [(0.0, sx, sy), (move_t, sx, sy)]
    t = move_t
    for (x0, y0), (x1, y1b) in zip(pts[:-1], pts[1:]):
        t += math.hypot(x1 - x0, y1b - y0) / S
        wps.append((t, x1, y1b))
    return wps


def _waypoints_zebra(cfg, S):
    sx, sy, gx, gy = cfg.start_x, cfg.start_y, cfg.goal_x, cfg.goal_y
    zx = cfg.zebra_x
    t_z = INITIAL_PAUSE + abs(zx - sx) / S
    move2 = t_z + ZEBRA_ENTRY_DELAY
    t_across = move2 + (gy - sy) / S
    wps = [(0.0, sx, sy), (INITIAL_PAUSE, sx, sy), (t_z, zx, sy),
           (move2, zx, sy), (t_across, zx, gy)]
    if abs(gx - zx) > 1e-12:
        wps.append((t_across + abs(gx - zx) / S, gx, gy))
    return wps, t_z


def _trace_from_waypoints(wps, dt):
    wp = [(t, x, y) for i, (t, x, y) in enumerate(wps)
          if i == 0 or t > wps[i - 1][0] + 1e-12]
    wt = np.array([w[0] for w in wp])
    wx = np.array([w[1] for w in wp])
    wy = np.array([w[2] for w in wp])
    n = int(math.ceil(wt[-1] / dt)) + 1
    t = np.arange(n) * dt
    return t, np.column_stack([np.interp(t, wt, wx), np.interp(t, wt, wy)])


def generate_trial(config: ScenarioConfig, agent: AgentProfile, seed,
                   *, trial_id: str = "t000", participant_id: str = "p000",
                   country_tag: str = "XX", walk_speed: float | None = None,
                   safety_margin: float | None = None,
                   horizon: float = HORIZON) -> TrialRecord:
    """Simulate one crossing. Pure in (config, agent, seed, overrides).

    The per-participant quantities (walk speed, safety margin) may be pinned
    by the caller; otherwise they are drawn from the trial's own RNG stream.
    """
    if not isinstance(config, ScenarioConfig) or not isinstance(agent, AgentProfile):
        raise TypeError("config/agent of wrong type")
    rng = np.random.Generator(np.random.PCG64(seed))

    S = walk_speed if walk_speed is not None else float(
        np.clip(rng.normal(agent.walk_speed_mean, agent.walk_speed_sd), *WALK_SPEED_CLIP))
    F = safety_margin if safety_margin is not None else float(
        np.clip(rng.normal(agent.safety_margin_mean, agent.safety_margin_sd), *SAFETY_MARGIN_CLIP))
    if not (math.isfinite(S) and S > 0 and math.isfinite(F)):
        raise ValueError("non-finite walk speed or safety margin")

    # Fixed draw order regardless of scenario keeps stream RNG offsets stable.
    u_zebra = rng.random()
    u_follow = rng.random()
    u_mind = rng.random()

    near, far, delta, planted_t = _build_streams(rng, config, horizon)

    plan = "direct"
    followed = False
    if config.zebra_present and u_zebra < agent.zebra_preference:
        plan = "zebra"

    if plan == "zebra":
        wps, t_z = _waypoints_zebra(config, S)
        move_t = t_z + ZEBRA_ENTRY_DELAY
        missed = 0
        thr = math.nan
    else:
        if planted_t is not None and u_follow < agent.leader_follow_weight:
            followed = True
            move_t = planted_t
            windows = sync_windows(near, far)
            missed = int(np.sum(windows[:, 1] <= planted_t)) if len(windows) else 0
            thr = math.nan
        else:
            for _ in range(40):
                windows = sync_windows(near, far)
                hit = _scan_windows(windows, S, F, agent, config, horizon)
                if hit is not None:
                    break
                near, far = _extend_streams(rng, config, near, far)
            if hit is None:
                # Unreachable in practice; move at the last observed event.
                hit = (float(max(near[-1], far[-1])) + 0.1, len(windows), math.nan)
            move_t, missed, thr = hit
        if config.zebra_present and u_mind < agent.mind_change_prob:
            plan = "divert"
            wps = _waypoints_divert(config, S, move_t)
        else:
            wps = _waypoints_direct(config, S, move_t)

    trace_t, trace_xy = _trace_from_waypoints(wps, config.frame_dt)
    y = trace_xy[:, 1]
    if y[0] >= 0.0 or y[-1] < config.road_width:
        raise RuntimeError("trace does not cross the road")
    entry_idx = int(np.argmax(y >= 0.0))

    entry_est = move_t + (0.0 - config.start_y) / S
    zebra_yield = None
    if plan == "zebra":
        t_z = move_t - ZEBRA_ENTRY_DELAY
        exit_t = move_t + (config.road_width - config.start_y) / S
        zebra_yield = (t_z, exit_t)

    keep = near <= entry_est + 25.0
    keep[:2] = True   # never drop below two arrivals
    near, far = near[keep], far[keep]

    streams = (VehicleStream(NEAR, +1, near), VehicleStream(FAR, -1, far))
    for s in streams:
        s.validate(config.gap_min, config.gap_max)

    outcome = AgentOutcome(
        walk_speed=S, safety_margin=F, plan=plan, followed_leader=followed,
        missed_before_entry=missed, threshold_at_entry=thr,
        move_start_t=move_t, road_entry_est=entry_est, lane_offset=delta,
    )
    return TrialRecord(
        trial_id=trial_id, participant_id=participant_id, country_tag=country_tag,
        scenario=config, streams=streams, trace_t=trace_t, trace_xy=trace_xy,
        entry_frame_index=entry_idx, outcome=outcome, zebra_yield=zebra_yield,
    )


def default_condition_set(trials_per_condition: int = 15) -> list:
    """The standard session: equal blocks of alone, zebra, risky, safe."""
    return [
        (ScenarioConfig(), trials_per_condition),
        (ScenarioConfig(zebra_present=True), trials_per_condition),
        (ScenarioConfig(group_condition=RISKY), trials_per_condition),
        (ScenarioConfig(group_condition=SAFE), trials_per_condition),
    ]


def generate_dataset(configs, agent: AgentProfile, n_participants: int,
                     trials_per_condition: int, seed, *,
                     country_tag: str | None = None,
                     horizon: float = HORIZON) -> list:
    """Simulate a full cohort.

    Walk speed and safety margin are drawn once per participant and held
    fixed across that participant's trials.  Per-trial seeds are derived by
    counter from the master seed, so any subset of trials can be regenerated
    independently and generation parallelizes without changing output.
    """
    if n_participants < 1:
        raise ValueError("need at least one participant")
    if trials_per_condition < 1:
        raise ValueError("need at least one trial per condition")
    configs = list(configs)
    if not configs:
        raise ValueError("no scenario configs supplied")
    tag = country_tag if country_tag is not None else agent.profile_name

    trials = []
    counter = 0
    for p in range(n_participants):
        pid = f"{tag}-p{p:03d}"
        prng = np.random.Generator(np.random.PCG64(
            np.random.SeedSequence(seed, spawn_key=(1, p))))
        S = float(np.clip(prng.normal(agent.walk_speed_mean, agent.walk_speed_sd),
                          *WALK_SPEED_CLIP))
        F = float(np.clip(prng.normal(agent.safety_margin_mean, agent.safety_margin_sd),
                          *SAFETY_MARGIN_CLIP))
        k = 0
        for cfg in configs:
            for _ in range(trials_per_condition):
                tseed = np.random.SeedSequence(seed, spawn_key=(0, counter))
                trials.append(generate_trial(
                    cfg, agent, tseed,
                    trial_id=f"{tag}-p{p:03d}-t{k:03d}", participant_id=pid,
                    country_tag=tag, walk_speed=S, safety_margin=F,
                    horizon=horizon))
                counter += 1
                k += 1
    return trials


# ---------------------------------------------------------------------------
# Vehicle kinematics (shared by the feature extractor and tests)

def vehicle_states(stream: VehicleStream, t: float, cfg: ScenarioConfig,
                   zebra_yield: tuple | None = None):
    """Positions and speeds of every vehicle in a lane at time t.

    Vehicles run at constant speed except when a zebra yield window is
    active: a vehicle whose braking point falls inside the window ramps
    linearly to zero over YIELD_RAMP seconds, stops exactly at the zebra
    line, holds until the window closes, then resumes at full speed.
    Vehicles are points; queue interactions are not modeled.
    """
    a = stream.arrival_times
    v = cfg.vehicle_speed
    d = float(stream.direction)
    pos = cfg.start_x + d * v * (t - a)
    spd = np.full_like(a, v)
    if zebra_yield is None or not cfg.zebra_present:
        return pos, spd
    yw0, yw1 = zebra_yield
    line = cfg.zebra_x
    t_line = a + d * (line - cfg.start_x) / v       # nominal time at the line
    t_brake = t_line - 0.5 * YIELD_RAMP
    braking = (t_brake >= yw0) & (t_brake <= yw1)
    for i in np.nonzero(braking)[0]:
        tb = t_brake[i]
        if t <= tb:
            continue
        tau = t - tb
        x_tb = cfg.start_x + d * v * (tb - a[i])
        if tau < YIELD_RAMP:
            pos[i] = x_tb + d * v * (tau - tau * tau / (2.0 * YIELD_RAMP))
            spd[i] = v * (1.0 - tau / YIELD_RAMP)
        elif t <= yw1:
            pos[i] = line
            spd[i] = 0.0
        else:
            pos[i] = line + d * v * (t - yw1)
            spd[i] = v
    return pos, spd


def nearest_approaching(trial: TrialRecord, lane: str, t: float, x_ped: float):
    """Distance along the lane and speed of the closest vehicle still
    heading toward the pedestrian's x position. Raises if the stored stream
    is too short to contain one (streams are generated with margin)."""
    s = trial.stream(lane)
    pos, spd = vehicle_states(s, t, trial.scenario, trial.zebra_yield)
    ahead = s.direction * (x_ped - pos) > 0.0
    if not np.any(ahead):
        raise RuntimeError(f"no approaching vehicle on {lane} lane at t={t:.2f}")
    dist = np.abs(pos - x_ped)
    dist[~ahead] = np.inf
    i = int(np.argmin(dist))
    return float(dist[i]), float(spd[i])
