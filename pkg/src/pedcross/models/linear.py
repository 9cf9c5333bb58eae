"""Ordinary least squares and logistic regression."""

from __future__ import annotations

import numpy as np

from ._gd import descend


def _augment(X: np.ndarray) -> np.ndarray:
    return np.column_stack([X, np.ones(X.shape[0])])


def fit_ols(spec, X, Y):
    """Normal equations; a 1e-8 ridge jitter rescues singular systems.

    Multi-output solves share one factorization, so per-column results equal
    independent single-output fits exactly.
    """
    Xa = _augment(X)
    d = X.shape[1]
    A = Xa.T @ Xa
    ridge = float(spec.hyper.get("ridge", 0.0))
    if ridge > 0.0:
        A = A + np.diag(np.r_[np.full(d, ridge), 0.0])
    B = Xa.T @ Y
    # near-singular systems (duplicated or collinear columns) pass solve()
    # with garbage coefficients, so gate on the condition number
    if not np.isfinite(np.linalg.cond(A)) or np.linalg.cond(A) > 1e10:
        A = A + 1e-8 * np.eye(d + 1)
    # one solve per output column: multi-output fits then equal independent
    # single-output fits exactly
    cols = []
    for j in range(Y.shape[1]):
        try:
            wj = np.linalg.solve(A, B[:, j])
            if not np.isfinite(wj).all():
                raise np.linalg.LinAlgError("non-finite solution")
        except np.linalg.LinAlgError:
            wj = np.linalg.solve(A + 1e-8 * np.eye(d + 1), B[:, j])
        cols.append(wj)
    W = np.column_stack(cols)
    payload = {
        "weights": W[:d],                 # (d, q)
        "intercept": W[d],                # (q,)
        "train_sd": X.std(axis=0),
    }
    return payload, Y.shape[1]


def predict_ols(model, X):
    return X @ model.payload["weights"] + model.payload["intercept"]


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def fit_logistic(spec, X, Y):
    """Binary cross-entropy with optional L2 on the weights, trained by
    mini-batch momentum descent."""
    y = Y[:, 0]
    n, d = X.shape
    h = spec.hyper
    l2 = float(h["l2"])

    def unpack(p):
        return p[:d], p[d]

    def loss_fn(p):
        w, b = unpack(p)
        z = X @ w + b
        # softplus(z) - y*z, stable for large |z|
        bce = np.mean(np.log1p(np.exp(-np.abs(z))) + np.maximum(z, 0.0) - y * z)
        return bce + 0.5 * l2 * float(w @ w)

    def grad_fn(p, idx):
        w, b = unpack(p)
        Xb = X[idx]
        z = Xb @ w + b
        r = (_sigmoid(z) - y[idx]) / idx.shape[0]
        return np.r_[Xb.T @ r + l2 * w, r.sum()]

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


def predict_logistic(model, X):
    z = X @ model.payload["weights"] + model.payload["intercept"]
    return _sigmoid(z)
