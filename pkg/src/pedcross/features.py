"""Behavioral feature vectors, labels, and the train-fitted normalizer.

Each crossing yields 14 pre-event features (measured strictly before road
entry) and, on zebra scenarios, 5 entry-frame features (measured at the
entry frame).  Pre-event columns, in fixed order:

    T_w   waiting time from trial start to road entry
    V_p   average walking speed, wait start to crossing end (arc length / time)
    N_*, M_*   count and maximum duration of unused gaps per kind and scope
               (e=effective, c=car; n=near lane, f=far lane, b=both lanes)

Entry-frame columns: D_n, V_cn, D_f, V_cf (distance and speed of the closest
approaching vehicle per lane, projected on the lane axis) and D_z (distance
to the zebra centre).  An unused gap is one whose window closed between wait
start and entry; maxima default to 0 when nothing was missed, so rows stay
dense.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import gaps as gp
from . import sim

PRE_EVENT_COLUMNS = ("T_w", "V_p", "N_en", "N_cn", "M_en", "M_cn",
                     "N_ef", "N_cf", "M_ef", "M_cf", "N_eb", "N_cb",
                     "M_eb", "M_cb")
ENTRY_COLUMNS = ("D_n", "V_cn", "D_f", "V_cf", "D_z")


class NoCrossingError(ValueError):
    """Raised for trials whose trace never enters the road."""


@dataclass(frozen=True)
class PreEventFeatures:
    T_w: float
    V_p: float
    N_en: float
    N_cn: float
    M_en: float
    M_cn: float
    N_ef: float
    N_cf: float
    M_ef: float
    M_cf: float
    N_eb: float
    N_cb: float
    M_eb: float
    M_cb: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, c) for c in PRE_EVENT_COLUMNS], dtype=float)


@dataclass(frozen=True)
class EntryFrameFeatures:
    D_n: float
    V_cn: float
    D_f: float
    V_cf: float
    D_z: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, c) for c in ENTRY_COLUMNS], dtype=float)


@dataclass
class FeatureRow:
    """Feature vector plus whichever labels apply to the trial's scenario."""

    trial_id: str
    participant_id: str
    country_tag: str
    condition: str
    pre: PreEventFeatures
    entry: EntryFrameFeatures | None
    label_gap: float | None
    label_zebra: bool | None
    label_trajectory: np.ndarray | None   # (m, 2) resampled path


def resample_trajectory(trace_t, trace_xy, m: int) -> np.ndarray:
    """Resample a trace to m points uniformly spaced in normalized time."""
    if m < 2:
        raise ValueError("need at least two resample points")
    t = np.asarray(trace_t, dtype=float)
    xy = np.asarray(trace_xy, dtype=float)
    tt = np.linspace(t[0], t[-1], m)
    return np.column_stack([np.interp(tt, t, xy[:, 0]),
                            np.interp(tt, t, xy[:, 1])])


def _missed(lst, wait_start, entry_t):
    out = []
    for g in lst:
        used = g.open_t <= entry_t < g.close_t
        if not used and wait_start <= g.close_t < entry_t:
            out.append(g.duration)
    return out


def extract(trial: "sim.TrialRecord", events=None, bundle=None,
            m_points: int = 32) -> FeatureRow:
    """Feature row for one trial.

    Pure in (trial, events, bundle): unused-gap sets are recomputed from the
    window timestamps, not read from the mutable used/missed flags.  Events
    and gap bundle are derived on the fly when not supplied.
    """
    if bundle is None:
        bundle = trial.gaps if trial.gaps is not None else gp.compute_all_gaps(trial)
    if events is None:
        events = trial.events if trial.events is not None else gp.crossing_events(trial, bundle)
    if events.road_entry_t is None:
        raise NoCrossingError(f"no-crossing trial {trial.trial_id}")
    entry_t = events.road_entry_t
    ws = events.wait_start
    end_t = events.crossing_end_t if events.crossing_end_t is not None else float(trial.trace_t[-1])

    span = (trial.trace_t >= ws) & (trial.trace_t <= end_t)
    seg = trial.trace_xy[span]
    arc = float(np.sum(np.linalg.norm(np.diff(seg, axis=0), axis=1)))
    v_p = arc / (end_t - ws) if end_t > ws else 0.0

    stats = {}
    for scope, kind, lst in bundle.groups():
        ms = _missed(lst, ws, entry_t)
        key = ("e" if kind == gp.EFFECTIVE else "c") + scope[0]
        stats["N_" + key] = float(len(ms))
        stats["M_" + key] = max(ms) if ms else 0.0
    pre = PreEventFeatures(T_w=entry_t - ws, V_p=v_p, **stats)

    entry = None
    if trial.scenario.zebra_present:
        k = int(np.argmax(trial.trace_xy[:, 1] >= 0.0))
        x_e = float(trial.trace_xy[k, 0])
        t_e = float(trial.trace_t[k])
        d_n, v_cn = sim.nearest_approaching(trial, gp.NEAR, t_e, x_e)
        d_f, v_cf = sim.nearest_approaching(trial, gp.FAR, t_e, x_e)
        entry = EntryFrameFeatures(D_n=d_n, V_cn=v_cn, D_f=d_f, V_cf=v_cf,
                                   D_z=abs(x_e - trial.scenario.zebra_x))

    zebra = trial.scenario.zebra_present
    return FeatureRow(
        trial_id=trial.trial_id, participant_id=trial.participant_id,
        country_tag=trial.country_tag, condition=trial.condition_label,
        pre=pre, entry=entry,
        label_gap=None if zebra else events.accepted_gap_car_both,
        label_zebra=events.used_zebra if zebra else None,
        label_trajectory=resample_trajectory(trial.trace_t, trial.trace_xy, m_points)
        if zebra else None,
    )


def extract_all(trials, m_points: int = 32, on_skip=None) -> list:
    """Feature rows for every crossing trial; no-crossing trials are skipped
    (reported through on_skip when given)."""
    rows = []
    for tr in trials:
        try:
            rows.append(extract(tr, m_points=m_points))
        except NoCrossingError as e:
            if on_skip is not None:
                on_skip(tr, e)
    return rows


def pre_event_matrix(rows) -> np.ndarray:
    return np.vstack([r.pre.as_array() for r in rows])


def full_matrix(rows) -> np.ndarray:
    """Pre-event and entry-frame features side by side; every row must carry
    entry features."""
    if any(r.entry is None for r in rows):
        raise ValueError("entry features absent on some rows")
    return np.vstack([np.concatenate([r.pre.as_array(), r.entry.as_array()])
                      for r in rows])


FULL_COLUMNS = PRE_EVENT_COLUMNS + ENTRY_COLUMNS


# ---------------------------------------------------------------------------
# Normalizer

@dataclass
class Scaler:
    """Per-column z-score transform fitted on training data only.

    Constant columns are dropped (recorded in `dropped`); apply() returns
    only the retained columns, invert() reinstates dropped columns at their
    constant value.
    """

    mean: np.ndarray
    sd: np.ndarray
    keep: np.ndarray
    columns: tuple
    dropped: tuple

    @property
    def kept_columns(self) -> tuple:
        return tuple(c for c, k in zip(self.columns, self.keep) if k)


def fit_scaler(X: np.ndarray, columns=None) -> Scaler:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("need a 2-D matrix with at least 2 rows")
    if not np.isfinite(X).all():
        raise ValueError("non-finite feature values")
    if columns is None:
        columns = tuple(f"f{i}" for i in range(X.shape[1]))
    columns = tuple(columns)
    if len(columns) != X.shape[1]:
        raise ValueError("column name count mismatch")
    mean = X.mean(axis=0)
    sd = X.std(axis=0)
    keep = sd > 1e-12 * np.maximum(1.0, np.abs(mean))
    dropped = tuple(c for c, k in zip(columns, keep) if not k)
    if dropped:
        warnings.warn(f"dropping constant feature(s): {', '.join(dropped)}",
                      stacklevel=2)
    return Scaler(mean=mean, sd=sd, keep=keep, columns=columns, dropped=dropped)


def apply_scaler(scaler: Scaler, X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != len(scaler.columns):
        raise ValueError("width mismatch with fitted scaler")
    k = scaler.keep
    return (X[:, k] - scaler.mean[k]) / scaler.sd[k]


def invert_scaler(scaler: Scaler, Z: np.ndarray) -> np.ndarray:
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    k = scaler.keep
    if Z.shape[1] != int(k.sum()):
        raise ValueError("width mismatch with retained columns")
    X = np.tile(scaler.mean, (Z.shape[0], 1))
    X[:, k] = Z * scaler.sd[k] + scaler.mean[k]
    return X
