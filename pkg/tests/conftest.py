"""Shared fixtures: scripted hand-built trials and small simulated cohorts."""

import math

import numpy as np
import pytest

from pedcross import sim


def scripted_trial(near, far, entry_t, *, walk=1.4, dt=0.02, width=7.0,
                   end_pad=2.0, trial_id="T000", pid="P000", tag="XX",
                   zebra=False, x_path=None):
    """Build a TrialRecord with hand-chosen streams and a scripted trace.

    The pedestrian stands at (0, -1.5) until entry_t - 1.5/walk, then walks
    straight at `walk` m/s; road entry (y=0) happens at entry_t.  x_path, if
    given, maps t -> x for lateral movement (e.g. a zebra detour).
    """
    move_t = entry_t - 1.5 / walk
    total = entry_t + (width + 1.5) / walk + end_pad
    t = np.arange(0.0, total, dt)
    y = np.where(t < move_t, -1.5, -1.5 + walk * (t - move_t))
    y = np.minimum(y, width + 1.5)
    x = np.zeros_like(t) if x_path is None else np.array([x_path(tt) for tt in t])
    trace_xy = np.column_stack([x, y])

    cfg = sim.ScenarioConfig(zebra_present=zebra)
    streams = (sim.VehicleStream(sim.NEAR, +1, np.asarray(near, dtype=float)),
               sim.VehicleStream(sim.FAR, -1, np.asarray(far, dtype=float)))
    entered = y >= 0.0
    entry_idx = int(np.argmax(entered)) if entered.any() else None
    outcome = sim.AgentOutcome(
        walk_speed=walk, safety_margin=0.0, plan="zebra" if zebra else "direct",
        followed_leader=False, missed_before_entry=0,
        threshold_at_entry=math.nan, move_start_t=move_t,
        road_entry_est=entry_t, lane_offset=0.5)
    return sim.TrialRecord(
        trial_id=trial_id, participant_id=pid, country_tag=tag,
        scenario=cfg, streams=streams, trace_t=t, trace_xy=trace_xy,
        entry_frame_index=entry_idx, outcome=outcome, zebra_yield=None)


@pytest.fixture(scope="session")
def de_cohort():
    """Small mixed-condition DE cohort shared across read-only tests."""
    cfgs = [sim.ScenarioConfig(),
            sim.ScenarioConfig(group_condition=sim.RISKY, leader_gap=4.0),
            sim.ScenarioConfig(group_condition=sim.SAFE, leader_gap=6.5),
            sim.ScenarioConfig(zebra_present=True)]
    return sim.generate_dataset(cfgs, sim.PROFILE_PRESETS["DE"], 6, 3, 1234,
                                country_tag="DE")


@pytest.fixture(scope="session")
def two_domain_rows():
    """Feature rows for a DE + JP cohort (gap task usable on both)."""
    from pedcross import features as ftr
    cfgs = [sim.ScenarioConfig(),
            sim.ScenarioConfig(group_condition=sim.RISKY, leader_gap=4.0),
            sim.ScenarioConfig(zebra_present=True)]
    rows = []
    for tag, seed in (("DE", 11), ("JP", 22)):
        trials = sim.generate_dataset(cfgs, sim.PROFILE_PRESETS[tag], 6, 3,
                                      seed, country_tag=tag)
        rows.extend(ftr.extract(t) for t in trials)
    return rows
