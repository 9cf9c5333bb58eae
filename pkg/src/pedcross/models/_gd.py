"""Shared mini-batch gradient descent with momentum.

Full-batch mode (batch=None) uses a halving safeguard so the recorded loss
sequence is non-increasing; mini-batch mode takes plain momentum steps and
stops on a small epoch-to-epoch change in the full-data loss.
"""

from __future__ import annotations

import numpy as np


class TrainingError(RuntimeError):
    """Raised when optimization produces a non-finite loss."""


def descend(params: np.ndarray, grad_fn, loss_fn, n_rows: int, rng, *,
            lr: float, epochs: int, batch, momentum: float, tol: float):
    """Optimize a flat parameter vector; returns (params, loss_history).

    grad_fn(params, idx) -> flat gradient on the given rows;
    loss_fn(params) -> full-data loss.  History entry 0 is the initial loss.
    """
    params = params.astype(float).copy()
    all_idx = np.arange(n_rows)
    loss = float(loss_fn(params))
    if not np.isfinite(loss):
        raise TrainingError(f"non-finite initial loss {loss!r}")
    history = [loss]
    full = batch is None or batch >= n_rows
    vel = np.zeros_like(params)
    lr_eff = lr

    for _ in range(epochs):
        if full:
            g = grad_fn(params, all_idx)
            vel = momentum * vel - lr_eff * g
            cand = params + vel
            new = float(loss_fn(cand))
            while not (new <= loss) and lr_eff > 1e-14:
                # reject the step: drop momentum, halve the rate
                lr_eff /= 2.0
                vel = np.zeros_like(params)
                cand = params - lr_eff * g
                new = float(loss_fn(cand))
            if not (new <= loss):
                break
            params = cand
        else:
            perm = rng.permutation(n_rows)
            for s in range(0, n_rows, batch):
                idx = perm[s:s + batch]
                g = grad_fn(params, idx)
                vel = momentum * vel - lr_eff * g
                params = params + vel
            new = float(loss_fn(params))
        if not np.isfinite(new):
            raise TrainingError(
                f"non-finite loss {new!r} at epoch {len(history)}; "
                f"last finite losses {history[-3:]}")
        history.append(new)
        if abs(loss - new) < tol:
            loss = new
            break
        loss = new
    return params, history
