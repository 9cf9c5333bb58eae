"""Agglomerative clustering via the nearest-neighbor chain.

Ward (default), average, and complete linkage, all reducible, so the chain
reproduces the exact greedy dendrogram.  Merge records reference original
row ids; cutting to k clusters applies the n-k lowest merges, which is
order-independent.  Ward distances are kept squared throughout (heights are
in that metric), which preserves merge order.

Memory is O(n^2) for the pairwise matrix; rows beyond ~8000 are refused.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._backend import kernels

WARD = "ward"
AVERAGE = "average"
COMPLETE = "complete"
_CODES = {WARD: 0, AVERAGE: 1, COMPLETE: 2}
_MAX_ROWS = 8000


@dataclass
class Clustering:
    n_clusters: int
    linkage: str
    labels: np.ndarray        # (n,) ints in [0, k)
    centroids: np.ndarray     # (k, d)
    merges: np.ndarray        # (n-1, 3): height, row_a, row_b; height-sorted


def _pairwise(X: np.ndarray, squared: bool) -> np.ndarray:
    diff = X[:, None, :] - X[None, :, :]
    D = np.einsum("ijk,ijk->ij", diff, diff)
    if not squared:
        D = np.sqrt(D)
    np.fill_diagonal(D, np.inf)
    return D


def _chain_merges(D: np.ndarray, code: int) -> list:
    """All n-1 merges as (height, keep_slot, drop_slot), chain order."""
    n = D.shape[0]
    active = np.ones(n, dtype=np.uint8)
    size = np.ones(n, dtype=float)
    alive = list(range(n))
    chain: list[int] = []
    merges = []
    for _ in range(n - 1):
        if not chain:
            chain.append(alive[0])
        while True:
            a = chain[-1]
            j = kernels.nn_argmin(D, active, a)
            # prefer the chain predecessor on distance ties to avoid cycles
            if len(chain) >= 2 and D[a, chain[-2]] == D[a, j]:
                j = chain[-2]
            if len(chain) >= 2 and j == chain[-2]:
                chain.pop()
                chain.pop()
                break
            chain.append(j)
        keep, drop = (a, j) if a < j else (j, a)
        height = float(D[keep, drop])
        ks = np.array([s for s in alive if s != keep and s != drop],
                      dtype=np.int64)
        if ks.size:
            kernels.lw_update(D, size, keep, drop, ks, code)
        size[keep] = size[keep] + size[drop]
        active[drop] = 0
        D[drop, :] = np.inf
        D[:, drop] = np.inf
        alive.remove(drop)
        merges.append((height, keep, drop))
    return merges


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, i):
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def agglomerative(X, n_clusters: int, linkage: str = WARD) -> Clustering:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n = X.shape[0]
    if linkage not in _CODES:
        raise ValueError(f"unknown linkage {linkage!r}")
    if not 1 <= n_clusters <= n:
        raise ValueError(f"need 1 <= k <= n rows, got k={n_clusters}, n={n}")
    if n > _MAX_ROWS:
        raise ValueError(f"too many rows for a pairwise matrix ({n})")
    if not np.isfinite(X).all():
        raise ValueError("non-finite inputs")

    if n == 1:
        merges = np.empty((0, 3))
    else:
        D = _pairwise(X, squared=linkage == WARD)
        raw = _chain_merges(D, _CODES[linkage])
        heights = np.array([m[0] for m in raw])
        order = np.argsort(heights, kind="stable")
        merges = np.array([raw[i] for i in order], dtype=float)

    uf = _UnionFind(n)
    for h, a, b in merges[:n - n_clusters]:
        uf.union(int(a), int(b))
    roots = [uf.find(i) for i in range(n)]
    remap: dict[int, int] = {}
    labels = np.empty(n, dtype=np.int64)
    for i, r in enumerate(roots):
        if r not in remap:
            remap[r] = len(remap)
        labels[i] = remap[r]

    centroids = np.vstack([X[labels == c].mean(axis=0)
                           for c in range(n_clusters)])
    return Clustering(n_clusters=n_clusters, linkage=linkage, labels=labels,
                      centroids=centroids, merges=merges)


def assign(clustering: Clustering, x) -> np.ndarray:
    """Nearest-centroid labels for new rows (ties to the lowest label)."""
    X = np.atleast_2d(np.asarray(x, dtype=float))
    if X.shape[1] != clustering.centroids.shape[1]:
        raise ValueError("dimension mismatch with centroids")
    diff = X[:, None, :] - clustering.centroids[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    return np.argmin(d2, axis=1).astype(np.int64)
