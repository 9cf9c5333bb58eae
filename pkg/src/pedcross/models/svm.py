"""Linear soft-margin SVM trained on the primal hinge loss.

Objective: mean hinge + ||w||^2 / (2 C n).  Subgradient treats margins
exactly at 1 as inactive.  predict() squashes the signed margin through a
logistic link so the classification surface is a probability like the other
families; the 0.5 threshold coincides with the zero-margin decision rule.
"""

from __future__ import annotations

import numpy as np

from ._gd import descend
from .linear import _sigmoid


def fit_svm(spec, X, Y):
    y = Y[:, 0]
    s = 2.0 * y - 1.0
    n, d = X.shape
    h = spec.hyper
    lam = 1.0 / (float(h["C"]) * n)

    def unpack(p):
        return p[:d], p[d]

    def loss_fn(p):
        w, b = unpack(p)
        m = s * (X @ w + b)
        return float(np.mean(np.maximum(0.0, 1.0 - m)) + 0.5 * lam * (w @ w))

    def grad_fn(p, idx):
        w, b = unpack(p)
        Xb = X[idx]
        sb = s[idx]
        m = sb * (Xb @ w + b)
        act = (m < 1.0).astype(float) * sb / idx.shape[0]
        return np.r_[lam * w - Xb.T @ act, -act.sum()]

    rng = np.random.Generator(np.random.PCG64(
        np.random.SeedSequence(spec.seed, spawn_key=(7,))))
    p0 = np.zeros(d + 1)
    p, history = descend(p0, grad_fn, loss_fn, n, rng, lr=float(h["lr"]),
                         epochs=int(h["epochs"]), batch=h["batch"],
                         momentum=float(h["momentum"]), tol=float(h["tol"]))
    payload = {
        "weights": p[:d],
        "intercept": float(p[d]),
        "train_sd": X.std(axis=0),
        "loss_history": history,
    }
    return payload, 1


def predict_svm(model, X):
    margin = X @ model.payload["weights"] + model.payload["intercept"]
    return _sigmoid(margin)
