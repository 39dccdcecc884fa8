"""Soft-margin RBF SVM trained by sequential minimal optimisation.

Working-set selection follows the second-order rule of Fan, Chen and Lin
(the LIBSVM solver): pick the maximal violator ``i`` from the "up" set,
then the ``j`` from the "low" set that gives the largest decrease of the
dual objective. Training stops when the maximal KKT violation
``m(alpha) - M(alpha)`` drops to ``tol``.
"""
from __future__ import annotations

import logging
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

from .base import Scaler, as_matrix, check_binary

log = logging.getLogger(__name__)

TAU = 1e-12


def rbf_kernel(A, B, gamma: float) -> np.ndarray:
    A = np.atleast_2d(A)
    B = np.atleast_2d(B)
    sq = np.sum(A ** 2, axis=1)[:, None] + np.sum(B ** 2, axis=1)[None, :] - 2.0 * A @ B.T
    return np.exp(-gamma * np.maximum(sq, 0.0))


@dataclass(frozen=True)
class SvmModel:
    support_vectors: np.ndarray
    dual_coef: np.ndarray       # alpha_i * y_i, y in {-1, +1}
    bias: float
    scaler: Scaler
    gamma: float = 0.5
    C: float = 1.0
    kkt_gap: float = 0.0
    converged: bool = True

    @property
    def n_features(self) -> int:
        return self.scaler.mean.size

    def decision(self, X) -> np.ndarray:
        Z = self.scaler.transform(as_matrix(X, self.n_features))
        if self.support_vectors.shape[0] == 0:
            return np.full(Z.shape[0], self.bias)
        return rbf_kernel(Z, self.support_vectors, self.gamma) @ self.dual_coef + self.bias

    def predict(self, X) -> np.ndarray:
        return (self.decision(X) > 0).astype(int)


class _KernelRows:
    def __init__(self, Z, gamma, capacity=2048):
        self.Z, self.gamma, self.capacity = Z, gamma, capacity
        self.sq = np.sum(Z ** 2, axis=1)
        self.cache: OrderedDict[int, np.ndarray] = OrderedDict()

    def __call__(self, i: int) -> np.ndarray:
        row = self.cache.get(i)
        if row is not None:
            self.cache.move_to_end(i)
            return row
        d = self.sq + self.sq[i] - 2.0 * self.Z @ self.Z[i]
        row = np.exp(-self.gamma * np.maximum(d, 0.0))
        self.cache[i] = row
        if len(self.cache) > self.capacity:
            self.cache.popitem(last=False)
        return row


def _violation_sets(alpha, s, C):
    up = ((s > 0) & (alpha < C)) | ((s < 0) & (alpha > 0))
    low = ((s < 0) & (alpha < C)) | ((s > 0) & (alpha > 0))
    return up, low


def kkt_gap(alpha, grad, s, C) -> float:
    """Maximal violation m(alpha) - M(alpha) given the dual gradient ``Q alpha - 1``."""
    up, low = _violation_sets(alpha, s, C)
    score = -s * grad
    if not up.any() or not low.any():
        return 0.0
    return float(max(score[up].max() - score[low].min(), 0.0))


def dual_gradient(Z, s, alpha, gamma) -> np.ndarray:
    K = rbf_kernel(Z, Z, gamma)
    return (s[:, None] * s[None, :] * K) @ alpha - 1.0


def solve_dual(Z, s, C: float, gamma: float, tol: float = 1e-3, max_iter: int | None = None):
    n = Z.shape[0]
    rows = _KernelRows(Z, gamma)
    alpha = np.zeros(n)
    grad = -np.ones(n)
    qd = np.ones(n)  # RBF kernel diagonal
    max_iter = max_iter or max(100_000, 100 * n)
    converged = False
    for _ in range(max_iter):
        up, low = _violation_sets(alpha, s, C)
        score = -s * grad
        if not up.any() or not low.any():
            converged = True
            break
        i = int(np.flatnonzero(up)[np.argmax(score[up])])
        m = score[i]
        if m - score[low].min() <= tol:
            converged = True
            break
        Ki = rows(i)
        cand = low & (score < m)
        b = m - score[cand]
        a = qd[i] + qd[cand] - 2.0 * Ki[cand]
        a = np.where(a > 0, a, TAU)
        j = int(np.flatnonzero(cand)[np.argmin(-(b * b) / a)])
        Kj = rows(j)
        ai_old, aj_old = alpha[i], alpha[j]
        if s[i] != s[j]:
            quad = max(qd[i] + qd[j] - 2.0 * Ki[j], TAU)
            delta = (-grad[i] - grad[j]) / quad
            diff = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j], alpha[i] = 0.0, diff
            elif alpha[i] < 0:
                alpha[i], alpha[j] = 0.0, -diff
            if diff > 0:
                if alpha[i] > C:
                    alpha[i], alpha[j] = C, C - diff
            elif alpha[j] > C:
                alpha[j], alpha[i] = C, C + diff
        else:
            quad = max(qd[i] + qd[j] - 2.0 * Ki[j], TAU)
            delta = (grad[i] - grad[j]) / quad
            total = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if total > C:
                if alpha[i] > C:
                    alpha[i], alpha[j] = C, total - C
            elif alpha[j] < 0:
                alpha[j], alpha[i] = 0.0, total
            if total > C:
                if alpha[j] > C:
                    alpha[j], alpha[i] = C, total - C
            elif alpha[i] < 0:
                alpha[i], alpha[j] = 0.0, total
        di, dj = alpha[i] - ai_old, alpha[j] - aj_old
        grad += s * (s[i] * di * Ki + s[j] * dj * Kj)
    else:
        log.warning("SMO hit the iteration cap (%d) before reaching tolerance %g", max_iter, tol)
    return alpha, grad, converged


def _bias(alpha, grad, s, C) -> float:
    free = (alpha > 0) & (alpha < C)
    if free.any():
        rho = float(np.mean(s[free] * grad[free]))
    else:
        up, low = _violation_sets(alpha, s, C)
        score = -s * grad
        ub = score[low].min() if low.any() else 0.0
        lb = score[up].max() if up.any() else 0.0
        rho = -0.5 * (ub + lb)
    return -rho


def train_svm_rbf(X, y, C: float = 1.0, gamma: float = 0.5, tol: float = 1e-3,
                  max_iter: int | None = None) -> SvmModel:
    y = check_binary(y)
    X = as_matrix(X)
    scaler = Scaler.fit(X)
    Z = scaler.transform(X)
    s = np.where(y == 1, 1.0, -1.0)
    alpha, grad, converged = solve_dual(Z, s, C, gamma, tol, max_iter)
    sv = alpha > 0
    return SvmModel(Z[sv].copy(), (alpha * s)[sv], _bias(alpha, grad, s, C), scaler, gamma, C,
                    kkt_gap(alpha, grad, s, C), converged)

