"""Random forest on bootstrap samples with random feature subsets.

Trees are depth-capped binary CARTs: variance reduction for regression
(summed over outputs for multi-output targets), Gini decrease for binary
classification.  Candidate features scan in ascending column order and a
new best must strictly beat the incumbent, so ties resolve to the lowest
column index.  Per-tree RNG streams derive from the tree index, making the
ensemble independent of build order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._backend import kernels


@dataclass
class Tree:
    feature: np.ndarray     # int64, -1 at leaves
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray       # (n_nodes, q) leaf payload


class _Builder:
    def __init__(self, X, Y, is_cls, max_depth, min_leaf, n_feats, rng):
        self.X = X
        self.Y = Y
        self.is_cls = is_cls
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.n_feats = n_feats
        self.rng = rng
        self.feature = []
        self.threshold = []
        self.left = []
        self.right = []
        self.value = []
        self.gains = np.zeros(X.shape[1])

    def _new_node(self, rows):
        self.feature.append(-1)
        self.threshold.append(np.nan)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(self.Y[rows].mean(axis=0))
        return len(self.feature) - 1

    def build(self, rows, depth) -> int:
        node = self._new_node(rows)
        n = rows.shape[0]
        Yn = self.Y[rows]
        if depth >= self.max_depth or n < 2 * self.min_leaf:
            return node
        if (Yn == Yn[0]).all():
            return node

        d = self.X.shape[1]
        feats = self.rng.choice(d, size=self.n_feats, replace=False)
        feats.sort()
        best_gain = -np.inf
        best_f = -1
        best_thr = np.nan
        for f in feats:
            col = self.X[rows, f]
            order = np.argsort(col, kind="stable")
            xs = np.ascontiguousarray(col[order])
            if self.is_cls:
                thr, gain = kernels.scan_split_cls(
                    xs, np.ascontiguousarray(Yn[order, 0]), self.min_leaf)
            else:
                thr, gain = kernels.scan_split_reg(
                    xs, np.ascontiguousarray(Yn[order]), self.min_leaf)
            if gain > best_gain:
                best_gain, best_f, best_thr = gain, int(f), thr
        if best_f < 0 or not best_gain > 0.0:
            return node

        self.gains[best_f] += best_gain
        go_left = self.X[rows, best_f] <= best_thr
        self.feature[node] = best_f
        self.threshold[node] = best_thr
        self.left[node] = self.build(rows[go_left], depth + 1)
        self.right[node] = self.build(rows[~go_left], depth + 1)
        return node

    def tree(self) -> Tree:
        return Tree(feature=np.array(self.feature, dtype=np.int64),
                    threshold=np.array(self.threshold, dtype=float),
                    left=np.array(self.left, dtype=np.int64),
                    right=np.array(self.right, dtype=np.int64),
                    value=np.vstack(self.value))


def fit_forest(spec, X, Y):
    h = spec.hyper
    n, d = X.shape
    is_cls = spec.task == "classification"
    n_feats = max(1, int(round(np.sqrt(d)))) if is_cls else max(1, d // 3)
    n_feats = min(n_feats, d)
    trees = []
    gains = np.zeros(d)
    for t in range(int(h["n_trees"])):
        rng = np.random.Generator(np.random.PCG64(
            np.random.SeedSequence(spec.seed, spawn_key=(t,))))
        boot = rng.integers(0, n, size=n)
        b = _Builder(X, Y, is_cls, int(h["max_depth"]), int(h["min_leaf"]),
                     n_feats, rng)
        b.build(boot, 0)
        trees.append(b.tree())
        gains += b.gains
    payload = {
        "trees": trees,
        "split_gains": gains,
        "train_sd": X.std(axis=0),
    }
    return payload, 1 if is_cls else Y.shape[1]


def predict_forest(model, X):
    X = np.ascontiguousarray(X, dtype=float)
    trees = model.payload["trees"]
    acc = None
    for t in trees:
        leaves = kernels.tree_apply(t.feature, t.threshold, t.left, t.right, X)
        vals = t.value[leaves]
        acc = vals if acc is None else acc + vals
    out = acc / len(trees)
    if model.spec.task == "classification":
        return out[:, 0]
    return out


def tree_depth(tree: Tree) -> int:
    """Longest root-to-leaf path length in edges."""
    def walk(i):
        if tree.feature[i] < 0:
            return 0
        return 1 + max(walk(tree.left[i]), walk(tree.right[i]))
    return walk(0)
