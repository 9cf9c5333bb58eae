"""Model suite core: specs, the uniform fit/predict surface, importance.

Five families behind one interface: ordinary least squares, logistic
regression, a linear soft-margin SVM, a random forest, and a two-hidden-
layer MLP.  Classification is binary with targets in {0, 1}; predict()
returns P(y=1) and predict_label() thresholds at 0.5.  Regression may be
multi-output (output_dim > 1).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LINEAR_REGRESSION = "LinearRegression"
LOGISTIC_REGRESSION = "LogisticRegression"
LINEAR_SVM = "LinearSVM"
RANDOM_FOREST = "RandomForest"
MLP = "MLP"
MODEL_KINDS = (LINEAR_REGRESSION, LOGISTIC_REGRESSION, LINEAR_SVM,
               RANDOM_FOREST, MLP)

REGRESSION = "regression"
CLASSIFICATION = "classification"
TASKS = (REGRESSION, CLASSIFICATION)

# kind -> tasks it supports
_COMPAT = {
    LINEAR_REGRESSION: (REGRESSION,),
    LOGISTIC_REGRESSION: (CLASSIFICATION,),
    LINEAR_SVM: (CLASSIFICATION,),
    RANDOM_FOREST: (REGRESSION, CLASSIFICATION),
    MLP: (REGRESSION, CLASSIFICATION),
}

_DEFAULT_HYPER = {
    LINEAR_REGRESSION: {"ridge": 0.0},
    LOGISTIC_REGRESSION: {"lr": 0.1, "epochs": 500, "batch": 32,
                          "momentum": 0.9, "l2": 0.0, "tol": 1e-6},
    LINEAR_SVM: {"C": 1.0, "lr": 0.05, "epochs": 500, "batch": 32,
                 "momentum": 0.9, "tol": 1e-6},
    RANDOM_FOREST: {"n_trees": 100, "max_depth": 5, "min_leaf": 1},
    MLP: {"hidden": (8, 4), "lr": 0.01, "epochs": 500, "batch": 32,
          "momentum": 0.9, "l2": 1e-4, "tol": 1e-6},
}


@dataclass(frozen=True)
class DesignMatrix:
    rows: np.ndarray
    column_names: tuple

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float)
        if rows.ndim != 2 or rows.shape[0] < 1 or rows.shape[1] < 1:
            raise ValueError("design matrix must be n x d with n, d >= 1")
        if not np.isfinite(rows).all():
            raise ValueError("non-finite entries in design matrix")
        if len(self.column_names) != rows.shape[1]:
            raise ValueError("column name count mismatch")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "column_names", tuple(self.column_names))


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    task: str
    hyper: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}")
        if self.task not in _COMPAT[self.kind]:
            raise ValueError(f"{self.kind} does not support task {self.task}")
        merged = dict(_DEFAULT_HYPER[self.kind])
        merged.update(self.hyper)
        object.__setattr__(self, "hyper", merged)
        if self.kind == RANDOM_FOREST:
            if merged["n_trees"] < 1:
                raise ValueError("n_trees must be >= 1")
            if merged["max_depth"] < 1:
                raise ValueError("max_depth must be >= 1")
        if self.kind == MLP:
            h = tuple(int(v) for v in merged["hidden"])
            if len(h) != 2 or any(v < 1 for v in h):
                raise ValueError("hidden must be two positive sizes")
            merged["hidden"] = h


@dataclass
class TrainedModel:
    spec: ModelSpec
    columns: tuple
    output_dim: int
    payload: dict                     # family-specific learned parameters
    importance: list                  # ranked (column_name, score)

    @property
    def n_features(self) -> int:
        return len(self.columns)


def _as_matrix(X, columns=None):
    if isinstance(X, DesignMatrix):
        return X.rows, X.column_names
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if columns is None:
        columns = tuple(f"f{i}" for i in range(X.shape[1]))
    return X, tuple(columns)


def _check_targets(spec: ModelSpec, Y):
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if not np.isfinite(Y).all():
        raise ValueError("non-finite targets")
    if spec.task == CLASSIFICATION:
        if Y.shape[1] != 1:
            raise ValueError("classification targets must be a single column")
        vals = np.unique(Y)
        if not np.isin(vals, (0.0, 1.0)).all():
            raise ValueError("classification targets must be in {0, 1}")
    return Y


def supports_task(kind: str, task: str) -> bool:
    """Whether a model kind can fit the given output task."""
    return task in _COMPAT.get(kind, ())


def fit(spec: ModelSpec, X, Y, columns=None) -> TrainedModel:
    """Train a model; deterministic under spec.seed."""
    from . import forest, linear, mlp, svm

    Xm, cols = _as_matrix(X, columns)
    Ym = _check_targets(spec, Y)
    if Xm.shape[0] != Ym.shape[0]:
        raise ValueError("row count mismatch between X and Y")
    if Xm.shape[0] < 2:
        raise ValueError("need at least 2 training rows")

    fitter = {
        LINEAR_REGRESSION: linear.fit_ols,
        LOGISTIC_REGRESSION: linear.fit_logistic,
        LINEAR_SVM: svm.fit_svm,
        RANDOM_FOREST: forest.fit_forest,
        MLP: mlp.fit_mlp,
    }[spec.kind]
    payload, output_dim = fitter(spec, Xm, Ym)
    model = TrainedModel(spec=spec, columns=cols, output_dim=output_dim,
                         payload=payload, importance=[])
    model.importance = _builtin_importance(model, Xm, Ym)
    return model


def predict(model: TrainedModel, X) -> np.ndarray:
    """Regression values (n,) or (n, q); classification P(y=1) as (n,)."""
    from . import forest, linear, mlp, svm

    Xm, _ = _as_matrix(X)
    if Xm.shape[1] != model.n_features:
        raise ValueError(
            f"expected {model.n_features} features, got {Xm.shape[1]}")
    out = {
        LINEAR_REGRESSION: linear.predict_ols,
        LOGISTIC_REGRESSION: linear.predict_logistic,
        LINEAR_SVM: svm.predict_svm,
        RANDOM_FOREST: forest.predict_forest,
        MLP: mlp.predict_mlp,
    }[model.spec.kind](model, Xm)
    if model.spec.task == REGRESSION and model.output_dim == 1:
        return out[:, 0]
    return out


def predict_label(model: TrainedModel, X) -> np.ndarray:
    if model.spec.task != CLASSIFICATION:
        raise ValueError("labels only defined for classification models")
    return (predict(model, X) >= 0.5).astype(np.int64)


# ---------------------------------------------------------------------------
# Feature importance

def _rank(columns, scores) -> list:
    order = sorted(range(len(columns)), key=lambda j: (-scores[j], j))
    return [(columns[j], float(scores[j])) for j in order]


def standardized_coefficients(model: TrainedModel) -> list:
    """|coefficient| times the training-column spread; multi-output uses the
    L2 norm of each feature's coefficient row."""
    W = np.atleast_2d(np.asarray(model.payload["weights"], dtype=float))
    if W.shape[0] != model.n_features:
        W = W.T
    mags = np.sqrt((W * W).sum(axis=1))
    scores = mags * np.asarray(model.payload["train_sd"], dtype=float)
    return _rank(model.columns, scores)


def impurity_importance(model: TrainedModel) -> list:
    scores = np.asarray(model.payload["split_gains"], dtype=float)
    total = scores.sum()
    if total > 0:
        scores = scores / total
    return _rank(model.columns, scores)


def permutation_importance(model: TrainedModel, X_val, Y_val, seed,
                           n_shuffles: int = 5) -> list:
    """Metric degradation per shuffled column, averaged over n_shuffles.

    Regression scores MAE increase; classification scores accuracy drop.
    """
    Xm, _ = _as_matrix(X_val)
    Y = np.asarray(Y_val, dtype=float)
    if Y.ndim == 1 and model.output_dim > 1:
        raise ValueError("validation targets narrower than model output")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))

    if model.spec.task == REGRESSION:
        def metric(Xe):
            pred = predict(model, Xe)
            return float(np.mean(np.abs(pred - Y)))
        sign = 1.0     # bigger error after shuffle = more important
    else:
        def metric(Xe):
            return float(np.mean(predict_label(model, Xe) == Y))
        sign = -1.0    # smaller accuracy after shuffle = more important

    base = metric(Xm)
    scores = np.zeros(model.n_features)
    for _ in range(n_shuffles):
        for j in range(model.n_features):
            Xp = Xm.copy()
            Xp[:, j] = Xp[rng.permutation(Xm.shape[0]), j]
            scores[j] += sign * (metric(Xp) - base)
    scores /= n_shuffles
    return _rank(model.columns, scores)


def _builtin_importance(model: TrainedModel, X, Y) -> list:
    if model.spec.kind in (LINEAR_REGRESSION, LOGISTIC_REGRESSION, LINEAR_SVM):
        return standardized_coefficients(model)
    if model.spec.kind == RANDOM_FOREST:
        return impurity_importance(model)
    return permutation_importance(model, X, Y[:, 0] if Y.shape[1] == 1 else Y,
                                  seed=model.spec.seed)


def feature_importance(model: TrainedModel, X_val=None, Y_val=None,
                       seed: int = 0) -> list:
    """Ranked (column, score); permutation mode needs validation data."""
    if model.spec.kind in (LINEAR_REGRESSION, LOGISTIC_REGRESSION, LINEAR_SVM):
        return standardized_coefficients(model)
    if model.spec.kind == RANDOM_FOREST:
        return impurity_importance(model)
    if X_val is None or Y_val is None:
        return list(model.importance)
    return permutation_importance(model, X_val, Y_val, seed)
