"""Random forest of entropy-split decision trees.

Each tree is grown on a bootstrap resample. At every node a fresh subset of
``features_per_node`` features is drawn without replacement and the split
with the largest information gain among them is taken; candidate
thresholds are midpoints between consecutive distinct values. Growth stops
at ``max_depth``, when a node holds fewer than ``min_samples`` rows, or
when no candidate improves entropy. Leaves store the fraction of positive
training rows they received.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

from .base import ModelError, as_matrix, check_binary

LEAF = -1
_MIN_GAIN = 1e-12


@dataclass(frozen=True)
class Tree:
    feature: np.ndarray      # LEAF for leaves
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray        # positive-class fraction at the node
    n_samples: np.ndarray
    depth: np.ndarray
    candidates: tuple[tuple[int, ...], ...]  # features considered at each node ( () if never tried)

    @property
    def node_count(self) -> int:
        return self.feature.size

    def apply(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=int)
        rows = np.arange(X.shape[0])
        while True:
            f = self.feature[node]
            internal = f != LEAF
            if not internal.any():
                return node
            r, n = rows[internal], node[internal]
            go_left = X[r, f[internal]] <= self.threshold[n]
            node[internal] = np.where(go_left, self.left[n], self.right[n])

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]


@dataclass(frozen=True)
class ForestModel:
    trees: tuple[Tree, ...]
    n_features: int
    max_depth: int = 8
    min_samples: int = 8
    features_per_node: int = 4
    criterion: str = "entropy"
    seed: int = 42

    def scores(self, X) -> np.ndarray:
        X = as_matrix(X, self.n_features)
        total = np.zeros(X.shape[0])
        for tree in self.trees:
            total += tree.predict_proba(X)
        return total / len(self.trees)

    def predict(self, X) -> np.ndarray:
        return (self.scores(X) > 0.5).astype(int)


def entropy(pos, n):
    """Binary entropy in bits of ``pos`` positives among ``n`` rows (vectorised)."""
    pos = np.asarray(pos, dtype=float)
    n = np.asarray(n, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(n > 0, pos / np.where(n > 0, n, 1.0), 0.0)
        h = -(np.where(p > 0, p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
              + np.where(p < 1, (1 - p) * np.log2(np.where(p < 1, 1 - p, 1.0)), 0.0))
    return h


def gini(pos, n):
    pos = np.asarray(pos, dtype=float)
    n = np.asarray(n, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(n > 0, pos / np.where(n > 0, n, 1.0), 0.0)
    return 2.0 * p * (1.0 - p)


def _weighted_entropy(pos, n):
    # n * H(pos / n) in bits, from counts alone
    neg = n - pos
    return (xlogy(n, n) - xlogy(pos, pos) - xlogy(neg, neg)) / np.log(2.0)


def _weighted_gini(pos, n):
    n = np.asarray(n, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(n > 0, 2.0 * pos * (n - pos) / np.where(n > 0, n, 1.0), 0.0)


IMPURITY = {"entropy": entropy, "gini": gini}
_WEIGHTED = {"entropy": _weighted_entropy, "gini": _weighted_gini}


def best_split_on_feature(values, y, criterion="entropy"):
    """Best ``(gain, threshold)`` for one feature, or ``(0.0, None)`` when unsplittable."""
    weighted = _WEIGHTED[criterion]
    order = np.argsort(values, kind="stable")
    v = values[order]
    ys = y[order]
    n = v.size
    cuts = np.flatnonzero(v[:-1] < v[1:])
    if cuts.size == 0:
        return 0.0, None
    pos_total = float(ys.sum())
    cum = np.cumsum(ys)
    n_left = (cuts + 1).astype(float)
    pos_left = cum[cuts].astype(float)
    gains = (weighted(pos_total, float(n))
             - weighted(pos_left, n_left) - weighted(pos_total - pos_left, n - n_left)) / n
    k = int(np.argmax(gains))
    return float(gains[k]), 0.5 * (v[cuts[k]] + v[cuts[k] + 1])


def best_splits(values, y, criterion="entropy"):
    """Column-wise ``best_split_on_feature`` for an ``(n, k)`` block of feature values.

    Returns per-column best gains (``-inf`` when a column is constant) and thresholds.
    """
    weighted = _WEIGHTED[criterion]
    n, k = values.shape
    order = np.argsort(values, axis=0, kind="stable")
    v = np.take_along_axis(values, order, axis=0)
    cum = np.cumsum(y[order], axis=0).astype(float)
    pos_total = cum[-1, 0]
    valid = v[:-1] < v[1:]
    n_left = np.arange(1, n, dtype=float)[:, None]
    pos_left = cum[:-1]
    gains = (weighted(pos_total, float(n))
             - weighted(pos_left, n_left) - weighted(pos_total - pos_left, n - n_left)) / n
    gains = np.where(valid, gains, -np.inf)
    best = np.argmax(gains, axis=0)
    cols = np.arange(k)
    thresholds = 0.5 * (v[best, cols] + v[np.minimum(best + 1, n - 1), cols])
    return gains[best, cols], thresholds


def split_gain(values, y, threshold, impurity=entropy) -> float:
    """Information gain of splitting at ``values <= threshold``."""
    left = values <= threshold
    n, nl = y.size, int(left.sum())
    nr = n - nl
    parent = impurity(y.sum(), n)
    return float(parent - (nl * impurity(y[left].sum(), nl) + nr * impurity(y[~left].sum(), nr)) / n)


def build_tree(X, y, rng, max_depth=8, min_samples=8, features_per_node=4, criterion="entropy") -> Tree:
    n_features = X.shape[1]
    feature, threshold, left, right, value, counts, depths, candidates = [], [], [], [], [], [], [], []

    def new_node(idx, depth):
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        value.append(float(y[idx].mean()))
        counts.append(idx.size)
        depths.append(depth)
        candidates.append(())
        return len(feature) - 1

    stack = [(new_node(np.arange(X.shape[0]), 0), np.arange(X.shape[0]), 0)]
    while stack:
        node, idx, depth = stack.pop()
        yi = y[idx]
        pos = int(yi.sum())
        if depth >= max_depth or idx.size < min_samples or pos == 0 or pos == idx.size:
            continue
        feats = rng.choice(n_features, size=features_per_node, replace=False)
        candidates[node] = tuple(int(f) for f in feats)
        gains, thresholds = best_splits(X[np.ix_(idx, feats)], yi, criterion)
        k = int(np.argmax(gains))
        if not gains[k] > _MIN_GAIN:
            continue
        best_f, best_t = int(feats[k]), thresholds[k]
        mask = X[idx, best_f] <= best_t
        li, ri = idx[mask], idx[~mask]
        feature[node], threshold[node] = best_f, float(best_t)
        left[node] = new_node(li, depth + 1)
        right[node] = new_node(ri, depth + 1)
        # right first so the left subtree is numbered first
        stack.append((right[node], ri, depth + 1))
        stack.append((left[node], li, depth + 1))
    return Tree(np.array(feature, dtype=int), np.array(threshold), np.array(left, dtype=int),
                np.array(right, dtype=int), np.array(value), np.array(counts, dtype=int),
                np.array(depths, dtype=int), tuple(candidates))


def train_forest(X, y, trees: int = 500, max_depth: int = 8, min_samples: int = 8,
                 features_per_node: int = 4, seed: int = 42, criterion: str = "entropy",
                 bootstrap: bool = True, n_jobs: int = 1) -> ForestModel:
    X = as_matrix(X)
    if X.shape[0] == 0:
        raise ModelError("cannot train a forest on empty input")
    y = np.asarray(y).astype(int).reshape(-1)
    if X.shape[0] != y.size:
        raise ModelError("X and y lengths differ")
    if X.shape[0] < min_samples:
        raise ModelError(f"need at least min_samples={min_samples} rows, got {X.shape[0]}")
    if not np.all((y == 0) | (y == 1)):
        check_binary(y)
    if features_per_node > X.shape[1]:
        raise ModelError("features_per_node exceeds the feature count")
    if criterion not in IMPURITY:
        raise ModelError(f"unknown criterion {criterion!r}")
    children = np.random.SeedSequence(seed).spawn(trees)

    def grow(ss):
        rng = np.random.default_rng(ss)
        rows = rng.integers(0, X.shape[0], X.shape[0]) if bootstrap else np.arange(X.shape[0])
        return build_tree(X[rows], y[rows], rng, max_depth, min_samples, features_per_node, criterion)

    if n_jobs == 1:
        built = [grow(ss) for ss in children]
    else:
        from joblib import Parallel, delayed
        built = Parallel(n_jobs=n_jobs)(delayed(grow)(ss) for ss in children)
    return ForestModel(tuple(built), X.shape[1], max_depth, min_samples, features_per_node, criterion, seed)


def count_rf_ops(model: ForestModel | None = None, trees: int = 500, max_depth: int = 8,
                 features_per_node: int = 4) -> dict:
    """Worst-case comparison budget of forest inference.

    ``comparisons`` is trees x depth x features per node; ``path_comparisons``
    counts one comparison per level actually traversed (trees x depth).
    """
    if model is not None:
        trees, max_depth, features_per_node = len(model.trees), model.max_depth, model.features_per_node
    return {
        "trees": int(trees),
        "max_depth": int(max_depth),
        "features_per_node": int(features_per_node),
        "comparisons": int(trees) * int(max_depth) * int(features_per_node),
        "path_comparisons": int(trees) * int(max_depth),
    }
