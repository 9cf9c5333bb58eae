"""Versioned JSON persistence for trained models, scalers, and clusterings.

Floating-point values are written at full precision (shortest round-trip
repr), so a loaded model reproduces its predictions bit-exactly.  Files are
written atomically (temp + rename).
"""

from __future__ import annotations

import json
import os
import tempfile

import numpy as np

from .. import features as ft
from . import base
from .cluster import Clustering
from .forest import Tree

FORMAT = "pedcross-model"
VERSION = 1


def _atomic_write_text(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dump(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def _payload_to_dict(model: base.TrainedModel) -> dict:
    p = model.payload
    kind = model.spec.kind
    if kind == base.LINEAR_REGRESSION:
        return {"weights": p["weights"].tolist(),
                "intercept": np.asarray(p["intercept"]).tolist(),
                "train_sd": p["train_sd"].tolist()}
    if kind in (base.LOGISTIC_REGRESSION, base.LINEAR_SVM):
        return {"weights": p["weights"].tolist(),
                "intercept": float(p["intercept"]),
                "train_sd": p["train_sd"].tolist(),
                "loss_history": list(p["loss_history"])}
    if kind == base.RANDOM_FOREST:
        return {"trees": [{"feature": t.feature.tolist(),
                           "threshold": t.threshold.tolist(),
                           "left": t.left.tolist(),
                           "right": t.right.tolist(),
                           "value": t.value.tolist()} for t in p["trees"]],
                "split_gains": p["split_gains"].tolist(),
                "train_sd": p["train_sd"].tolist()}
    if kind == base.MLP:
        return {"arch": list(p["arch"]),
                "params": p["params"].tolist(),
                "loss_history": list(p["loss_history"]),
                "train_sd": p["train_sd"].tolist()}
    raise ValueError(f"unknown kind {kind!r}")


def _payload_from_dict(kind: str, d: dict) -> dict:
    if kind == base.LINEAR_REGRESSION:
        return {"weights": np.array(d["weights"], dtype=float),
                "intercept": np.array(d["intercept"], dtype=float),
                "train_sd": np.array(d["train_sd"], dtype=float)}
    if kind in (base.LOGISTIC_REGRESSION, base.LINEAR_SVM):
        return {"weights": np.array(d["weights"], dtype=float),
                "intercept": float(d["intercept"]),
                "train_sd": np.array(d["train_sd"], dtype=float),
                "loss_history": list(d["loss_history"])}
    if kind == base.RANDOM_FOREST:
        trees = [Tree(feature=np.array(t["feature"], dtype=np.int64),
                      threshold=np.array(t["threshold"], dtype=float),
                      left=np.array(t["left"], dtype=np.int64),
                      right=np.array(t["right"], dtype=np.int64),
                      value=np.array(t["value"], dtype=float))
                 for t in d["trees"]]
        return {"trees": trees,
                "split_gains": np.array(d["split_gains"], dtype=float),
                "train_sd": np.array(d["train_sd"], dtype=float)}
    if kind == base.MLP:
        return {"arch": tuple(int(v) for v in d["arch"]),
                "params": np.array(d["params"], dtype=float),
                "loss_history": list(d["loss_history"]),
                "train_sd": np.array(d["train_sd"], dtype=float)}
    raise ValueError(f"unknown kind {kind!r}")


def model_to_dict(model: base.TrainedModel) -> dict:
    return {
        "format": FORMAT,
        "version": VERSION,
        "spec": {"kind": model.spec.kind, "task": model.spec.task,
                 "hyper": {k: (list(v) if isinstance(v, tuple) else v)
                           for k, v in model.spec.hyper.items()},
                 "seed": model.spec.seed},
        "columns": list(model.columns),
        "output_dim": model.output_dim,
        "importance": [[c, s] for c, s in model.importance],
        "payload": _payload_to_dict(model),
    }


def model_from_dict(doc: dict) -> base.TrainedModel:
    if doc.get("format") != FORMAT:
        raise ValueError("not a model document")
    if doc.get("version") != VERSION:
        raise ValueError(f"unsupported model version {doc.get('version')}")
    s = doc["spec"]
    hyper = dict(s["hyper"])
    if "hidden" in hyper:
        hyper["hidden"] = tuple(hyper["hidden"])
    spec = base.ModelSpec(kind=s["kind"], task=s["task"], hyper=hyper,
                          seed=s["seed"])
    return base.TrainedModel(
        spec=spec, columns=tuple(doc["columns"]),
        output_dim=int(doc["output_dim"]),
        payload=_payload_from_dict(spec.kind, doc["payload"]),
        importance=[(c, float(v)) for c, v in doc["importance"]])


def save_model(model: base.TrainedModel, path: str) -> None:
    _atomic_write_text(path, _dump(model_to_dict(model)))


def load_model(path: str) -> base.TrainedModel:
    with open(path, encoding="utf-8") as f:
        return model_from_dict(json.load(f))


def scaler_to_dict(scaler: ft.Scaler) -> dict:
    return {"mean": scaler.mean.tolist(), "sd": scaler.sd.tolist(),
            "keep": [bool(k) for k in scaler.keep],
            "columns": list(scaler.columns), "dropped": list(scaler.dropped)}


def scaler_from_dict(d: dict) -> ft.Scaler:
    return ft.Scaler(mean=np.array(d["mean"], dtype=float),
                     sd=np.array(d["sd"], dtype=float),
                     keep=np.array(d["keep"], dtype=bool),
                     columns=tuple(d["columns"]),
                     dropped=tuple(d["dropped"]))


def clustering_to_dict(c: Clustering) -> dict:
    return {"n_clusters": c.n_clusters, "linkage": c.linkage,
            "labels": c.labels.tolist(), "centroids": c.centroids.tolist(),
            "merges": c.merges.tolist()}


def clustering_from_dict(d: dict) -> Clustering:
    return Clustering(n_clusters=int(d["n_clusters"]), linkage=d["linkage"],
                      labels=np.array(d["labels"], dtype=np.int64),
                      centroids=np.array(d["centroids"], dtype=float),
                      merges=np.array(d["merges"], dtype=float).reshape(-1, 3))
