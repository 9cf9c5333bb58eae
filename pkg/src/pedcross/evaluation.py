"""Metrics, fold construction, and five-fold cross-validation.

Folds are dealt at the unit level (trial or participant), so a unit's rows
never straddle folds.  Cross-validation re-derives fold membership from
unit ids and canonicalizes row order, making reports invariant to input
row permutations; the scaler is fitted inside each fold on training rows
only.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import features as ft
from . import models as md

BY_TRIAL = "ByTrial"
BY_PARTICIPANT = "ByParticipant"
SPLIT_MODES = (BY_TRIAL, BY_PARTICIPANT)

TASK_GAP = "GapSelection"
TASK_ZEBRA = "ZebraUsage"
TASK_TRAJECTORY = "Trajectory"
TASKS = (TASK_GAP, TASK_ZEBRA, TASK_TRAJECTORY)

# Output head each task needs from a model.
MODEL_TASK = {TASK_GAP: md.REGRESSION,
              TASK_ZEBRA: md.CLASSIFICATION,
              TASK_TRAJECTORY: md.REGRESSION}


# ---------------------------------------------------------------------------
# Metrics

def _pair(y, yhat):
    y = np.asarray(y, dtype=float)
    yhat = np.asarray(yhat, dtype=float)
    if y.shape != yhat.shape:
        raise ValueError("length mismatch")
    if y.size == 0:
        raise ValueError("empty inputs")
    return y, yhat


def mae(y, yhat) -> float:
    y, yhat = _pair(y, yhat)
    return float(np.mean(np.abs(y - yhat)))


def mape(y, yhat) -> float:
    """Percent: 100 * MAE / mean(y)."""
    y, yhat = _pair(y, yhat)
    ybar = float(np.mean(y))
    if ybar == 0.0:
        raise ValueError("mean of targets is zero")
    return 100.0 * mae(y, yhat) / ybar


def acc(labels, preds) -> float:
    """Percent agreement."""
    labels, preds = _pair(labels, preds)
    return 100.0 * float(np.mean(labels == preds))


def f1(labels, preds) -> float:
    """Percent F1 of the positive class (label 1)."""
    labels, preds = _pair(labels, preds)
    tp = float(np.sum((labels == 1) & (preds == 1)))
    fp = float(np.sum((labels == 0) & (preds == 1)))
    fn = float(np.sum((labels == 1) & (preds == 0)))
    if tp + fp + fn == 0:
        raise ValueError("no positive labels or predictions")
    return 100.0 * 2.0 * tp / (2.0 * tp + fp + fn)


def ade(trajs, pred_trajs) -> float:
    """Mean Euclidean distance over all n x m trajectory points (meters)."""
    T = np.asarray(trajs, dtype=float)
    P = np.asarray(pred_trajs, dtype=float)
    if T.shape != P.shape:
        raise ValueError("shape mismatch")
    if T.size == 0:
        raise ValueError("empty inputs")
    if T.ndim == 2:
        T = T[None]
        P = P[None]
    return float(np.mean(np.linalg.norm(T - P, axis=-1)))


# ---------------------------------------------------------------------------
# Splits

@dataclass
class SplitPlan:
    mode: str
    seed: int
    n_folds: int
    unit_fold: dict           # unit id -> fold index
    folds: list               # row-index arrays for the rows it was built on

    def fold_of(self, row) -> int:
        return self.unit_fold[_unit_key(self.mode, row)]


def _unit_key(mode: str, row) -> str:
    return row.trial_id if mode == BY_TRIAL else row.participant_id


def make_splits(rows, mode: str, seed, n_folds: int = 5) -> SplitPlan:
    if mode not in SPLIT_MODES:
        raise ValueError(f"unknown split mode {mode!r}")
    units = sorted({_unit_key(mode, r) for r in rows})
    if len(units) < n_folds:
        raise ValueError(
            f"need at least {n_folds} distinct units, got {len(units)}")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    order = rng.permutation(len(units))
    unit_fold = {units[j]: int(i % n_folds) for i, j in enumerate(order)}
    folds = [np.array([i for i, r in enumerate(rows)
                       if unit_fold[_unit_key(mode, r)] == f], dtype=np.int64)
             for f in range(n_folds)]
    return SplitPlan(mode=mode, seed=seed, n_folds=n_folds,
                     unit_fold=unit_fold, folds=folds)


# ---------------------------------------------------------------------------
# Cross-validation

@dataclass
class EvalReport:
    task: str
    model_kind: str
    split_mode: str
    fold_metrics: list                 # one dict per fold
    fold_sizes: list
    mean_metrics: dict
    fold_scaler_means: list = field(default_factory=list)

    @property
    def metric_names(self) -> tuple:
        return tuple(self.mean_metrics)


def metrics_for(task: str, y_true, y_pred, labels_pred=None) -> dict:
    if task == TASK_GAP:
        return {"MAE": mae(y_true, y_pred), "MAPE": mape(y_true, y_pred)}
    if task == TASK_ZEBRA:
        return {"ACC": acc(y_true, labels_pred), "F1": f1(y_true, labels_pred)}
    return {"ADE": ade(y_true, y_pred)}


def task_data(rows, task: str, m_points: int = 32):
    """(X, Y, columns) for a task; rows must carry the applicable label."""
    if task == TASK_GAP:
        keep = [r for r in rows if r.label_gap is not None]
        X = ft.pre_event_matrix(keep)
        Y = np.array([r.label_gap for r in keep], dtype=float)
        return keep, X, Y, ft.PRE_EVENT_COLUMNS
    if task == TASK_ZEBRA:
        keep = [r for r in rows if r.label_zebra is not None]
        X = ft.full_matrix(keep)
        Y = np.array([1.0 if r.label_zebra else 0.0 for r in keep])
        return keep, X, Y, ft.FULL_COLUMNS
    keep = [r for r in rows if r.label_trajectory is not None]
    X = ft.full_matrix(keep)
    Y = np.vstack([r.label_trajectory.reshape(-1) for r in keep])
    if Y.shape[1] != 2 * m_points:
        raise ValueError("trajectory resample width mismatch")
    return keep, X, Y, ft.FULL_COLUMNS


def _canonical(rows_idx, rows):
    return sorted(rows_idx, key=lambda i: (rows[i].participant_id,
                                           rows[i].trial_id))


def fit_fold(spec, X_train, Y_train, columns):
    """Scaler + model fitted on training rows only."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        scaler = ft.fit_scaler(X_train, columns)
    Z = ft.apply_scaler(scaler, X_train)
    model = md.fit(spec, Z, Y_train, columns=scaler.kept_columns)
    return scaler, model


def eval_model(task, model, scaler, X_test, Y_test) -> dict:
    Z = ft.apply_scaler(scaler, X_test)
    if task == TASK_ZEBRA:
        labels = md.predict_label(model, Z)
        return metrics_for(task, Y_test, None, labels)
    pred = md.predict(model, Z)
    if task == TASK_TRAJECTORY:
        m = Y_test.shape[1] // 2
        return metrics_for(task, Y_test.reshape(-1, m, 2),
                            np.asarray(pred).reshape(-1, m, 2))
    return metrics_for(task, Y_test, pred)


def cross_validate(spec: md.ModelSpec, rows, plan: SplitPlan,
                   task: str) -> EvalReport:
    """Per-fold fit/evaluate with a train-only scaler; deterministic given
    the plan (row order never matters)."""
    if task not in TASKS:
        raise ValueError(f"unknown task {task!r}")
    keep, X, Y, columns = task_data(rows, task)
    fold_ids = np.array([plan.fold_of(r) for r in keep], dtype=np.int64)

    fold_metrics = []
    fold_sizes = []
    scaler_means = []
    for f in range(plan.n_folds):
        test_idx = _canonical(np.nonzero(fold_ids == f)[0], keep)
        train_idx = _canonical(np.nonzero(fold_ids != f)[0], keep)
        if not test_idx or len(train_idx) < 2:
            raise ValueError(f"fold {f}: too few rows (train {len(train_idx)}, "
                             f"test {len(test_idx)})")
        try:
            scaler, model = fit_fold(spec, X[train_idx], Y[train_idx], columns)
            fold_metrics.append(
                eval_model(task, model, scaler, X[test_idx], Y[test_idx]))
        except Exception as e:
            raise RuntimeError(f"fold {f}: {e}") from e
        fold_sizes.append(len(test_idx))
        scaler_means.append(scaler.mean.copy())

    mean_metrics = {k: float(np.mean([m[k] for m in fold_metrics]))
                    for k in fold_metrics[0]}
    return EvalReport(task=task, model_kind=spec.kind, split_mode=plan.mode,
                      fold_metrics=fold_metrics, fold_sizes=fold_sizes,
                      mean_metrics=mean_metrics, fold_scaler_means=scaler_means)


def cross_val_predict(spec: md.ModelSpec, rows, plan: SplitPlan, task: str):
    """Out-of-fold predictions, row-aligned with the returned rows.

    Returns (keep, y_true, y_pred) where y_pred holds probabilities for the
    binary task and point predictions otherwise.  Every row is predicted by
    the model whose training fold excluded it.
    """
    if task not in TASKS:
        raise ValueError(f"unknown task {task!r}")
    keep, X, Y, columns = task_data(rows, task)
    fold_ids = np.array([plan.fold_of(r) for r in keep], dtype=np.int64)
    y_pred = np.empty(Y.shape, dtype=float)
    for f in range(plan.n_folds):
        test_idx = _canonical(np.nonzero(fold_ids == f)[0], keep)
        train_idx = _canonical(np.nonzero(fold_ids != f)[0], keep)
        if not test_idx or len(train_idx) < 2:
            raise ValueError(f"fold {f}: too few rows")
        scaler, model = fit_fold(spec, X[train_idx], Y[train_idx], columns)
        Z = ft.apply_scaler(scaler, X[test_idx])
        y_pred[test_idx] = np.asarray(md.predict(model, Z)).reshape(
            Y[test_idx].shape)
    return keep, Y, y_pred


def binned_curve(x, v, n_bins: int = 5, integer_bins: bool = False):
    """Mean of v per bin of x.

    Quantile (equal-count) bin edges by default; integer_bins uses one bin
    per distinct integer value of x.  Returns [(lo, hi, center, n, mean)],
    skipping empty bins.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if x.shape != v.shape or x.ndim != 1 or x.size == 0:
        raise ValueError("x and v must be equal-length 1-D arrays")
    out = []
    if integer_bins:
        for k in np.unique(np.round(x)):
            m = np.round(x) == k
            out.append((float(k) - 0.5, float(k) + 0.5, float(k),
                        int(m.sum()), float(v[m].mean())))
        return out
    qs = np.quantile(x, np.linspace(0.0, 1.0, n_bins + 1))
    for i in range(n_bins):
        lo, hi = qs[i], qs[i + 1]
        m = (x >= lo) & (x <= hi if i == n_bins - 1 else x < hi)
        if not m.any():
            continue
        out.append((float(lo), float(hi), float(0.5 * (lo + hi)),
                    int(m.sum()), float(v[m].mean())))
    return out
