"""Reference numpy kernels for the hot model loops.

The compiled extension (_speedups) mirrors these functions operation for
operation: identical arithmetic order, strict-inequality improvements that
keep the first optimum, and sequential cumulative sums.  Any edit here must
be reflected there, or backend results stop being bit-identical.
"""

from __future__ import annotations

import numpy as np

NEG_INF = float("-inf")


def scan_split_reg(xs: np.ndarray, Y: np.ndarray, min_leaf: int):
    """Best threshold on one presorted feature for (multi-output) regression.

    xs ascending, Y row-aligned (n, q).  Returns (threshold, gain) with gain
    the reduction in total squared error; (nan, -inf) when no valid split.
    """
    n = xs.shape[0]
    q = Y.shape[1]
    cs = np.cumsum(Y, axis=0)
    cs2 = np.cumsum(Y * Y, axis=0)
    tot = cs[n - 1]
    tot2 = cs2[n - 1]
    parent = 0.0
    for c in range(q):
        parent += tot2[c] - tot[c] * tot[c] / n

    i = np.arange(1, n, dtype=np.float64)     # left counts
    left = cs[:-1]
    left2 = cs2[:-1]
    children = np.zeros(n - 1)
    for c in range(q):
        rsum = tot[c] - left[:, c]
        t1 = left2[:, c] - left[:, c] * left[:, c] / i
        t2 = (tot2[c] - left2[:, c]) - rsum * rsum / (n - i)
        children += t1 + t2
    gains = parent - children
    valid = (xs[:-1] < xs[1:]) & (i >= min_leaf) & ((n - i) >= min_leaf)
    if not valid.any():
        return float("nan"), NEG_INF
    gains[~valid] = NEG_INF
    k = int(np.argmax(gains))
    return (xs[k] + xs[k + 1]) / 2.0, float(gains[k])


def scan_split_cls(xs: np.ndarray, y: np.ndarray, min_leaf: int):
    """Best threshold on one presorted feature for binary labels in {0, 1}.

    Returns (threshold, gain) with gain the weighted Gini decrease times n;
    (nan, -inf) when no valid split.
    """
    n = xs.shape[0]
    c1 = np.cumsum(y)
    tot1 = c1[n - 1]
    tot0 = n - tot1
    parent = n - (tot0 * tot0 + tot1 * tot1) / n

    i = np.arange(1, n, dtype=np.float64)
    l1 = c1[:-1]
    l0 = i - l1
    r1 = tot1 - l1
    r0 = (n - i) - r1
    children = (i - (l0 * l0 + l1 * l1) / i) + ((n - i) - (r0 * r0 + r1 * r1) / (n - i))
    gains = parent - children
    valid = (xs[:-1] < xs[1:]) & (i >= min_leaf) & ((n - i) >= min_leaf)
    if not valid.any():
        return float("nan"), NEG_INF
    gains[~valid] = NEG_INF
    k = int(np.argmax(gains))
    return (xs[k] + xs[k + 1]) / 2.0, float(gains[k])


def tree_apply(feature: np.ndarray, threshold: np.ndarray,
               left: np.ndarray, right: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Leaf node index per row; feature < 0 marks a leaf, descent is x <= thr."""
    n = X.shape[0]
    idx = np.zeros(n, dtype=np.int64)
    while True:
        f = feature[idx]
        live = f >= 0
        if not live.any():
            return idx
        rows = np.nonzero(live)[0]
        nodes = idx[rows]
        go_left = X[rows, f[rows]] <= threshold[nodes]
        idx[rows] = np.where(go_left, left[nodes], right[nodes])


def nn_argmin(D: np.ndarray, active: np.ndarray, i: int) -> int:
    """Nearest active cluster to i (ties resolve to the lowest index)."""
    row = D[i].copy()
    row[~active.astype(bool)] = np.inf
    row[i] = np.inf
    return int(np.argmin(row))


def lw_update(D: np.ndarray, size: np.ndarray, a: int, b: int,
              ks: np.ndarray, code: int) -> None:
    """Lance-Williams distance update for merging b into a, in place.

    code 0 = Ward on squared distances, 1 = average, 2 = complete.  size
    holds pre-merge cluster cardinalities; ks lists the other active ids.
    """
    na = size[a]
    nb = size[b]
    dak = D[a, ks]
    dbk = D[b, ks]
    if code == 0:
        nk = size[ks]
        new = ((na + nk) * dak + (nb + nk) * dbk - nk * D[a, b]) / (na + nb + nk)
    elif code == 1:
        new = (na * dak + nb * dbk) / (na + nb)
    else:
        new = np.maximum(dak, dbk)
    D[a, ks] = new
    D[ks, a] = new
