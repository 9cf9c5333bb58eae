"""Two-hidden-layer perceptron with ReLU hidden units.

Regression uses an identity output and mean squared error over all output
entries; binary classification uses a single logit, logistic link, and
cross-entropy.  Parameters travel as one flat vector (W1, b1, W2, b2, W3,
b3 in order) so gradients can be checked against finite differences.
"""

from __future__ import annotations

import numpy as np

from ._gd import descend
from .linear import _sigmoid


def shapes(arch):
    """(d, h1, h2, out) -> [(W1), (b1), (W2), (b2), (W3), (b3)] shapes."""
    d, h1, h2, out = arch
    return [(d, h1), (h1,), (h1, h2), (h2,), (h2, out), (out,)]


def param_count(arch) -> int:
    return sum(int(np.prod(s)) for s in shapes(arch))


def unflatten(arch, flat: np.ndarray):
    parts = []
    k = 0
    for s in shapes(arch):
        size = int(np.prod(s))
        parts.append(flat[k:k + size].reshape(s))
        k += size
    return parts


def flatten(parts) -> np.ndarray:
    return np.concatenate([p.ravel() for p in parts])


def init_params(arch, seed) -> np.ndarray:
    """Uniform He-style init for the weights, zero biases."""
    rng = np.random.Generator(np.random.PCG64(
        np.random.SeedSequence(seed, spawn_key=(3,))))
    parts = []
    for s in shapes(arch):
        if len(s) == 2:
            limit = np.sqrt(6.0 / s[0])
            parts.append(rng.uniform(-limit, limit, size=s))
        else:
            parts.append(np.zeros(s))
    return flatten(parts)


def _forward(arch, flat, X):
    W1, b1, W2, b2, W3, b3 = unflatten(arch, flat)
    z1 = X @ W1 + b1
    a1 = np.maximum(z1, 0.0)
    z2 = a1 @ W2 + b2
    a2 = np.maximum(z2, 0.0)
    z3 = a2 @ W3 + b3
    return z1, a1, z2, a2, z3


def mlp_loss(arch, flat, X, Y, task: str, l2: float) -> float:
    *_, z3 = _forward(arch, flat, X)
    if task == "classification":
        z = z3[:, 0]
        y = Y[:, 0]
        data = np.mean(np.log1p(np.exp(-np.abs(z))) + np.maximum(z, 0.0) - y * z)
    else:
        data = np.mean((z3 - Y) ** 2)
    if l2 > 0.0:
        W1, _, W2, _, W3, _ = unflatten(arch, flat)
        data += 0.5 * l2 * (float((W1 * W1).sum()) + float((W2 * W2).sum())
                            + float((W3 * W3).sum()))
    return float(data)


def mlp_gradients(arch, flat, X, Y, task: str, l2: float) -> np.ndarray:
    """Backpropagation gradient of mlp_loss, flat layout."""
    n = X.shape[0]
    z1, a1, z2, a2, z3 = _forward(arch, flat, X)
    W1, _, W2, _, W3, _ = unflatten(arch, flat)
    if task == "classification":
        d3 = (_sigmoid(z3[:, 0]) - Y[:, 0])[:, None] / n
    else:
        d3 = 2.0 * (z3 - Y) / (n * Y.shape[1])
    gW3 = a2.T @ d3
    gb3 = d3.sum(axis=0)
    d2 = (d3 @ W3.T) * (z2 > 0.0)
    gW2 = a1.T @ d2
    gb2 = d2.sum(axis=0)
    d1 = (d2 @ W2.T) * (z1 > 0.0)
    gW1 = X.T @ d1
    gb1 = d1.sum(axis=0)
    if l2 > 0.0:
        gW1 = gW1 + l2 * W1
        gW2 = gW2 + l2 * W2
        gW3 = gW3 + l2 * W3
    return flatten([gW1, gb1, gW2, gb2, gW3, gb3])


def fit_mlp(spec, X, Y):
    n, d = X.shape
    h = spec.hyper
    out = 1 if spec.task == "classification" else Y.shape[1]
    arch = (d, h["hidden"][0], h["hidden"][1], out)
    l2 = float(h["l2"])

    def loss_fn(p):
        return mlp_loss(arch, p, X, Y, spec.task, l2)

    def grad_fn(p, idx):
        return mlp_gradients(arch, p, X[idx], Y[idx], spec.task, l2)

    rng = np.random.Generator(np.random.PCG64(
        np.random.SeedSequence(spec.seed, spawn_key=(7,))))
    p0 = init_params(arch, spec.seed)
    p, history = descend(p0, grad_fn, loss_fn, n, rng, lr=float(h["lr"]),
                         epochs=int(h["epochs"]), batch=h["batch"],
                         momentum=float(h["momentum"]), tol=float(h["tol"]))
    payload = {
        "arch": arch,
        "params": p,
        "loss_history": history,
        "train_sd": X.std(axis=0),
    }
    return payload, out


def predict_mlp(model, X):
    arch = model.payload["arch"]
    *_, z3 = _forward(arch, model.payload["params"], X)
    if model.spec.task == "classification":
        return _sigmoid(z3[:, 0])
    return z3
