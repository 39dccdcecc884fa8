"""Stacked ensemble of logistic, SVM and forest with an RBF SVM meta-learner."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .base import ModelError, as_matrix, check_binary
from .forest import ForestModel, train_forest
from .logistic import LogisticModel, train_logistic
from .svm import SvmModel, train_svm_rbf


@dataclass(frozen=True)
class StackingModel:
    logistic: LogisticModel
    svm: SvmModel
    forest: ForestModel
    meta: SvmModel
    hard_labels: bool = False

    @property
    def n_features(self) -> int:
        return self.forest.n_features

    def meta_features(self, X) -> np.ndarray:
        return base_scores(self.logistic, self.svm, self.forest, X, self.hard_labels)

    def decision(self, X) -> np.ndarray:
        return self.meta.decision(self.meta_features(X))

    def predict(self, X) -> np.ndarray:
        return (self.decision(X) > 0).astype(int)


def base_scores(logistic, svm, forest, X, hard_labels=False) -> np.ndarray:
    X = as_matrix(X)
    if hard_labels:
        cols = [logistic.predict(X), svm.predict(X), forest.predict(X)]
    else:
        cols = [logistic.scores(X), svm.decision(X), forest.scores(X)]
    return np.column_stack(cols).astype(float)


@dataclass(frozen=True)
class StackingParams:
    logistic: dict = field(default_factory=dict)
    svm: dict = field(default_factory=lambda: {"C": 1.0, "gamma": 0.5})
    forest: dict = field(default_factory=dict)
    meta: dict = field(default_factory=lambda: {"C": 1.0, "gamma": 0.5})


def stratified_folds(y, folds: int, seed: int) -> np.ndarray:
    """Fold index per row: shuffled within class, then dealt round-robin."""
    rng = np.random.default_rng(seed)
    out = np.empty(y.size, dtype=int)
    offset = 0
    for cls in (0, 1):
        idx = np.flatnonzero(y == cls)
        idx = idx[rng.permutation(idx.size)]
        out[idx] = (np.arange(idx.size) + offset) % folds
        offset += idx.size
    return out


def _fit_bases(X, y, params: StackingParams, seed: int):
    logistic = train_logistic(X, y, **params.logistic)
    svm = train_svm_rbf(X, y, **params.svm)
    forest = train_forest(X, y, seed=seed, **params.forest)
    return logistic, svm, forest


def out_of_fold_scores(X, y, folds=5, seed=42, params: StackingParams | None = None,
                       hard_labels=False, fold_ids=None):
    """Meta-training matrix; row r comes from base models that never saw row r."""
    params = params or StackingParams()
    fold_ids = stratified_folds(y, folds, seed) if fold_ids is None else fold_ids
    meta_X = np.zeros((X.shape[0], 3))
    for k in range(folds):
        held = fold_ids == k
        bases = _fit_bases(X[~held], y[~held], params, seed + k + 1)
        meta_X[held] = base_scores(*bases, X[held], hard_labels)
    return meta_X, fold_ids


def train_stacking(X, y, folds: int = 5, seed: int = 42, params: StackingParams | None = None,
                   hard_labels: bool = False) -> StackingModel:
    X = as_matrix(X)
    y = check_binary(y)
    if min(np.sum(y == 0), np.sum(y == 1)) < folds:
        raise ModelError(f"stacking needs at least {folds} samples per class")
    params = params or StackingParams()
    meta_X, _ = out_of_fold_scores(X, y, folds, seed, params, hard_labels)
    meta = train_svm_rbf(meta_X, y, **params.meta)
    logistic, svm, forest = _fit_bases(X, y, params, seed)
    return StackingModel(logistic, svm, forest, meta, hard_labels)
