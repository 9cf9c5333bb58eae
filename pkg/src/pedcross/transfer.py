"""Cross-domain transfer evaluation and transferability strategies.

Five strategies: Separate (one model per domain), Joint (pooled), plus three
feature augmentations of the pooled model: a binary domain column, a cluster
one-hot (agglomerative on normalized inputs for tabular tasks, on resampled
trajectories for the trajectory task, with nearest-centroid or classifier
assignment for test rows), and a predicted zebra-usage column (trajectory
task only).  Scalers and clusterings are always fitted on training rows;
test rows only pass through them.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import evaluation as ev
from . import features as ft
from . import models as md

SEPARATE = "Separate"
JOINT = "Joint"
COUNTRY_FEATURE = "CountryFeature"
CLUSTER_FEATURE = "ClusterFeature"
ZEBRA_USAGE_FEATURE = "ZebraUsageFeature"
STRATEGIES = (SEPARATE, JOINT, COUNTRY_FEATURE, CLUSTER_FEATURE,
              ZEBRA_USAGE_FEATURE)

_DEFAULT_USAGE_SPEC = md.ModelSpec(md.LOGISTIC_REGRESSION, md.CLASSIFICATION)


@dataclass(frozen=True)
class StrategySpec:
    strategy: str
    base: md.ModelSpec
    n_clusters: int = 2
    usage_model: md.ModelSpec = _DEFAULT_USAGE_SPEC
    per_cluster: bool = False      # one regressor per cluster (trajectory)

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.n_clusters < 1:
            raise ValueError("n_clusters must be >= 1")
        if self.per_cluster and self.strategy != CLUSTER_FEATURE:
            raise ValueError("per_cluster requires the cluster strategy")


def validate_strategy_task(strategy: str, task: str) -> None:
    if strategy == ZEBRA_USAGE_FEATURE and task != ev.TASK_TRAJECTORY:
        raise ValueError("ZebraUsageFeature applies to the trajectory task only")


def _sorted_rows(rows):
    return sorted(rows, key=lambda r: (r.participant_id, r.trial_id))


def _domain_tag(rows) -> str:
    tags = {r.country_tag for r in rows}
    if len(tags) != 1:
        raise ValueError(f"rows span multiple domains: {sorted(tags)}")
    return tags.pop()


# ---------------------------------------------------------------------------
# One-vs-rest multiclass wrapper over the binary families

@dataclass
class OvrClassifier:
    specs: list
    models: list
    classes: np.ndarray


def fit_ovr(spec: md.ModelSpec, X, labels) -> OvrClassifier:
    labels = np.asarray(labels, dtype=np.int64)
    classes = np.unique(labels)
    models = []
    specs = []
    for i, c in enumerate(classes):
        s = md.ModelSpec(spec.kind, spec.task, dict(spec.hyper),
                         seed=spec.seed + i)
        specs.append(s)
        models.append(md.fit(s, X, (labels == c).astype(float)))
    return OvrClassifier(specs=specs, models=models, classes=classes)


def predict_ovr(clf: OvrClassifier, X) -> np.ndarray:
    probs = np.column_stack([md.predict(m, X) for m in clf.models])
    return clf.classes[np.argmax(probs, axis=1)]


# ---------------------------------------------------------------------------
# Feature augmentation

def _one_hot(labels: np.ndarray, k: int) -> np.ndarray:
    out = np.zeros((labels.shape[0], k))
    out[np.arange(labels.shape[0]), labels] = 1.0
    return out


@dataclass
class Augmenter:
    """Train-fitted transform appending strategy columns to a base matrix."""
    strategy: str
    extra_columns: tuple = ()
    domain_code: dict | None = None
    scaler: ft.Scaler | None = None            # for cluster assignment space
    clustering: md.Clustering | None = None
    classifier: OvrClassifier | None = None    # trajectory cluster routing
    usage: object = None                       # (scaler, model) for zebra usage
    train_clusters: np.ndarray | None = None

    def transform(self, X, rows) -> np.ndarray:
        if self.strategy in (SEPARATE, JOINT):
            return X
        if self.strategy == COUNTRY_FEATURE:
            col = np.array([self.domain_code[r.country_tag] for r in rows],
                           dtype=float)
            return np.column_stack([X, col])
        if self.strategy == CLUSTER_FEATURE:
            k = self.clustering.n_clusters
            if self.classifier is not None:
                Z = ft.apply_scaler(self.scaler, X)
                labels = predict_ovr(self.classifier, Z)
            else:
                Z = ft.apply_scaler(self.scaler, X)
                labels = md.assign(self.clustering, Z)
            return np.column_stack([X, _one_hot(labels, k)])
        # zebra usage
        uscaler, umodel = self.usage
        Z = ft.apply_scaler(uscaler, X)
        pred = md.predict_label(umodel, Z).astype(float)
        return np.column_stack([X, pred])

    def assigned_clusters(self, X) -> np.ndarray:
        if self.clustering is None:
            raise ValueError("no clustering in this strategy")
        Z = ft.apply_scaler(self.scaler, X)
        if self.classifier is not None:
            return predict_ovr(self.classifier, Z)
        return md.assign(self.clustering, Z)


def fit_augmenter(sspec: StrategySpec, task: str, X_train, Y_train,
                  train_rows, columns, domain_code) -> Augmenter:
    s = sspec.strategy
    if s in (SEPARATE, JOINT):
        return Augmenter(strategy=s)
    if s == COUNTRY_FEATURE:
        return Augmenter(strategy=s, extra_columns=("domain",),
                         domain_code=domain_code)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        scaler = ft.fit_scaler(X_train, columns)
    Z = ft.apply_scaler(scaler, X_train)
    if s == CLUSTER_FEATURE:
        k = min(sspec.n_clusters, Z.shape[0])
        if k < sspec.n_clusters:
            warnings.warn(f"reducing n_clusters to {k} (too few rows)")
        if task == ev.TASK_TRAJECTORY:
            # cluster the trajectories, route test rows via a classifier
            clustering = md.agglomerative(Y_train, k, md.WARD)
            clf = fit_ovr(sspec.usage_model, Z, clustering.labels)
            return Augmenter(strategy=s,
                             extra_columns=tuple(f"cluster{j}" for j in range(k)),
                             scaler=scaler, clustering=clustering,
                             classifier=clf, train_clusters=clustering.labels)
        clustering = md.agglomerative(Z, k, md.WARD)
        return Augmenter(strategy=s,
                         extra_columns=tuple(f"cluster{j}" for j in range(k)),
                         scaler=scaler, clustering=clustering,
                         train_clusters=clustering.labels)
    # zebra usage: classifier over true training labels
    labels = np.array([1.0 if r.label_zebra else 0.0 for r in train_rows])
    umodel = md.fit(sspec.usage_model, Z, labels, columns=scaler.kept_columns)
    return Augmenter(strategy=s, extra_columns=("zebra_usage",),
                     usage=(scaler, umodel))


# ---------------------------------------------------------------------------
# Strategy evaluation under a participant-level plan

@dataclass
class StrategyReport:
    strategy: str
    task: str
    model_kind: str
    n_clusters: int | None
    per_domain: dict                  # tag -> mean metrics dict
    average: dict
    per_cluster: dict = field(default_factory=dict)   # cluster id -> ADE


def _fit_cluster_heads(sspec, X_train, Y_train, train_clusters, columns):
    """One (scaler, model) per training cluster; the one-hot is redundant
    inside a single cluster, so heads train on the base columns."""
    heads = {}
    for c in np.unique(train_clusters):
        sub = np.nonzero(train_clusters == c)[0]
        if sub.size < 2:
            raise ValueError(
                f"cluster {int(c)}: too few training rows for its own head")
        heads[int(c)] = ev.fit_fold(sspec.base, X_train[sub], Y_train[sub],
                                    columns)
    return heads


def _routed_predict(task, heads, labels, X_test):
    pred = None
    for c in np.unique(labels):
        sel = labels == c
        scaler, model = heads[int(c)]
        Z = ft.apply_scaler(scaler, X_test[sel])
        p = (md.predict_label(model, Z) if task == ev.TASK_ZEBRA
             else np.asarray(md.predict(model, Z), dtype=float))
        if pred is None:
            pred = np.empty((X_test.shape[0],) + p.shape[1:], dtype=float)
        pred[sel] = p
    return pred


def _task_metrics(task, Y_true, pred) -> dict:
    """Metrics from raw predictions (labels for the binary task)."""
    if task == ev.TASK_ZEBRA:
        return ev.metrics_for(task, Y_true, None, pred)
    if task == ev.TASK_TRAJECTORY:
        m = Y_true.shape[1] // 2
        return ev.metrics_for(task, Y_true.reshape(-1, m, 2),
                              pred.reshape(-1, m, 2))
    return ev.metrics_for(task, Y_true, pred)


def _fit_eval_fold(sspec, task, X, Y, keep, train_idx, test_by_domain,
                   columns, domain_code):
    """One fold: fit on train_idx, return tag -> metrics (+ per-cluster)."""
    train_rows = [keep[i] for i in train_idx]
    aug = fit_augmenter(sspec, task, X[train_idx], Y[train_idx], train_rows,
                        columns, domain_code)
    routed = sspec.per_cluster and aug.clustering is not None
    if routed:
        heads = _fit_cluster_heads(sspec, X[train_idx], Y[train_idx],
                                   aug.train_clusters, columns)
    else:
        Xa_train = aug.transform(X[train_idx], train_rows)
        cols = tuple(columns) + tuple(aug.extra_columns)
        scaler, model = ev.fit_fold(sspec.base, Xa_train, Y[train_idx], cols)

    out = {}
    cluster_acc = {}
    for tag, idx in test_by_domain.items():
        if idx.size == 0:
            continue
        rows_t = [keep[i] for i in idx]
        labels = (aug.assigned_clusters(X[idx])
                  if aug.clustering is not None else None)
        if routed:
            pred = _routed_predict(task, heads, labels, X[idx])
        else:
            Xa_test = aug.transform(X[idx], rows_t)
            Z = ft.apply_scaler(scaler, Xa_test)
            pred = (md.predict_label(model, Z) if task == ev.TASK_ZEBRA
                    else np.asarray(md.predict(model, Z), dtype=float))
        out[tag] = _task_metrics(task, Y[idx], pred)
        if task == ev.TASK_TRAJECTORY and labels is not None:
            m = Y.shape[1] // 2
            for c in np.unique(labels):
                sel = labels == c
                cluster_acc.setdefault(int(c), []).append(
                    ev.ade(Y[idx][sel].reshape(-1, m, 2),
                           pred[sel].reshape(-1, m, 2)))
    return out, cluster_acc


def run_strategy(sspec: StrategySpec, rows_a, rows_b, plan: ev.SplitPlan,
                 task: str) -> StrategyReport:
    """Cross-validated strategy evaluation over two domains."""
    validate_strategy_task(sspec.strategy, task)
    tag_a = _domain_tag(rows_a)
    tag_b = _domain_tag(rows_b)
    if tag_a == tag_b:
        raise ValueError("domains must differ")
    domain_code = {t: float(i) for i, t in enumerate(sorted((tag_a, tag_b)))}
    merged = _sorted_rows(list(rows_a) + list(rows_b))
    keep, X, Y, columns = ev.task_data(merged, task)
    fold_ids = np.array([plan.fold_of(r) for r in keep], dtype=np.int64)
    tags = np.array([r.country_tag for r in keep])

    per_domain_folds = {tag_a: [], tag_b: []}
    cluster_folds: dict = {}
    for f in range(plan.n_folds):
        test_mask = fold_ids == f
        if sspec.strategy == SEPARATE:
            metrics = {}
            for tag in (tag_a, tag_b):
                tr = np.nonzero(~test_mask & (tags == tag))[0]
                te = np.nonzero(test_mask & (tags == tag))[0]
                m, _ = _fit_eval_fold(sspec, task, X, Y, keep, tr, {tag: te},
                                      columns, domain_code)
                metrics.update(m)
            cl = {}
        else:
            tr = np.nonzero(~test_mask)[0]
            test_by = {tag: np.nonzero(test_mask & (tags == tag))[0]
                       for tag in (tag_a, tag_b)}
            metrics, cl = _fit_eval_fold(sspec, task, X, Y, keep, tr, test_by,
                                         columns, domain_code)
        for tag, m in metrics.items():
            per_domain_folds[tag].append(m)
        for c, vals in cl.items():
            cluster_folds.setdefault(c, []).extend(vals)

    for tag, folds in per_domain_folds.items():
        if not folds:
            raise ValueError(f"domain {tag}: no test rows in any fold")
    per_domain = {tag: {k: float(np.mean([fm[k] for fm in folds]))
                        for k in folds[0]}
                  for tag, folds in per_domain_folds.items()}
    names = list(next(iter(per_domain.values())))
    average = {k: float(np.mean([per_domain[t][k] for t in sorted(per_domain)]))
               for k in names}
    per_cluster = {c: float(np.mean(v)) for c, v in sorted(cluster_folds.items())}
    return StrategyReport(
        strategy=sspec.strategy, task=task, model_kind=sspec.base.kind,
        n_clusters=sspec.n_clusters if sspec.strategy == CLUSTER_FEATURE else None,
        per_domain=per_domain, average=average, per_cluster=per_cluster)


# ---------------------------------------------------------------------------
# Plain cross-domain transfer matrix

@dataclass
class TransferMatrix:
    task: str
    split_mode: str
    seed: int
    cells: dict        # (train_tag, test_tag, model_kind) -> EvalReport

    def mean(self, train_tag, test_tag, kind, metric) -> float:
        return self.cells[(train_tag, test_tag, kind)].mean_metrics[metric]


def _whole_domain_report(spec, task, keep, X, Y, train_idx, test_idx,
                         columns, split_mode) -> ev.EvalReport:
    scaler, model = ev.fit_fold(spec, X[train_idx], Y[train_idx], columns)
    metrics = ev.eval_model(task, model, scaler, X[test_idx], Y[test_idx])
    return ev.EvalReport(task=task, model_kind=spec.kind, split_mode=split_mode,
                         fold_metrics=[metrics], fold_sizes=[len(test_idx)],
                         mean_metrics=dict(metrics),
                         fold_scaler_means=[scaler.mean.copy()])


def transfer_eval(train_rows, test_rows, model_specs, split_mode: str,
                  seed, task: str = ev.TASK_GAP) -> TransferMatrix:
    """(A,A) and (B,B) by within-domain cross-validation; (A,B) and (B,A)
    by training on the entire source domain and scoring the entire target."""
    tag_a = _domain_tag(train_rows)
    tag_b = _domain_tag(test_rows)
    if tag_a == tag_b:
        raise ValueError("domains must be disjoint")
    if not list(train_rows) or not list(test_rows):
        raise ValueError("empty domain")
    doms = {tag_a: _sorted_rows(train_rows), tag_b: _sorted_rows(test_rows)}

    cells = {}
    for kind_spec in model_specs:
        for src in (tag_a, tag_b):
            plan = ev.make_splits(doms[src], split_mode, seed)
            cells[(src, src, kind_spec.kind)] = ev.cross_validate(
                kind_spec, doms[src], plan, task)
            dst = tag_b if src == tag_a else tag_a
            keep_s, X_s, Y_s, columns = ev.task_data(doms[src], task)
            keep_d, X_d, Y_d, _ = ev.task_data(doms[dst], task)
            X = np.vstack([X_s, X_d])
            Y = np.concatenate([Y_s, Y_d]) if Y_s.ndim == 1 else np.vstack([Y_s, Y_d])
            tr = np.arange(len(keep_s))
            te = np.arange(len(keep_s), len(keep_s) + len(keep_d))
            cells[(src, dst, kind_spec.kind)] = _whole_domain_report(
                kind_spec, task, keep_s + keep_d, X, Y, tr, te, columns,
                split_mode)
    return TransferMatrix(task=task, split_mode=split_mode, seed=seed,
                          cells=cells)


# ---------------------------------------------------------------------------
# Trajectory pipeline (single fit, feature-only prediction)

@dataclass
class TrajectoryBundle:
    m: int
    strategy: StrategySpec
    columns: tuple
    augmenter: Augmenter
    scaler: ft.Scaler | None
    model: md.TrainedModel | None
    train_cluster_labels: np.ndarray | None
    heads: dict | None = None          # cluster id -> (scaler, model)


def fit_trajectory_pipeline(rows, sspec: StrategySpec, m: int = 32,
                            domain_code=None) -> TrajectoryBundle:
    """Cluster training trajectories, train the cluster classifier and the
    2m-output regressor; prediction later consumes features only."""
    validate_strategy_task(sspec.strategy, ev.TASK_TRAJECTORY)
    rows = _sorted_rows([r for r in rows if r.label_trajectory is not None])
    if not rows:
        raise ValueError("no trajectory-labeled rows")
    if domain_code is None:
        tags = sorted({r.country_tag for r in rows})
        domain_code = {t: float(i) for i, t in enumerate(tags)}
    keep, X, Y, columns = ev.task_data(rows, ev.TASK_TRAJECTORY, m_points=m)
    aug = fit_augmenter(sspec, ev.TASK_TRAJECTORY, X, Y, keep, columns,
                        domain_code)
    if sspec.per_cluster and aug.clustering is not None:
        heads = _fit_cluster_heads(sspec, X, Y, aug.train_clusters, columns)
        return TrajectoryBundle(m=m, strategy=sspec, columns=columns,
                                augmenter=aug, scaler=None, model=None,
                                train_cluster_labels=aug.train_clusters,
                                heads=heads)
    Xa = aug.transform(X, keep)
    cols = tuple(columns) + tuple(aug.extra_columns)
    scaler, model = ev.fit_fold(sspec.base, Xa, Y, cols)
    return TrajectoryBundle(m=m, strategy=sspec, columns=columns,
                            augmenter=aug, scaler=scaler, model=model,
                            train_cluster_labels=aug.train_clusters)


def predict_trajectory(bundle: TrajectoryBundle, rows) -> np.ndarray:
    """(n, m, 2) predicted paths from behavioral features alone."""
    single = not isinstance(rows, (list, tuple))
    rows = [rows] if single else list(rows)
    X = ft.full_matrix(rows)
    if bundle.heads is not None:
        labels = bundle.augmenter.assigned_clusters(X)
        flat = _routed_predict(ev.TASK_TRAJECTORY, bundle.heads, labels, X)
    else:
        Xa = bundle.augmenter.transform(X, rows)
        Z = ft.apply_scaler(bundle.scaler, Xa)
        flat = np.asarray(md.predict(bundle.model, Z))
    pred = flat.reshape(-1, bundle.m, 2)
    return pred[0] if single else pred
