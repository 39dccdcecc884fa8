"""L2-regularised logistic regression with a tunable decision threshold."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .base import ModelError, Scaler, as_matrix, check_binary


@dataclass(frozen=True)
class LogisticModel:
    weights: np.ndarray
    bias: float
    scaler: Scaler
    threshold: float = 0.45
    C: float = 1.0

    @property
    def n_features(self) -> int:
        return self.weights.size

    def scores(self, X) -> np.ndarray:
        Z = self.scaler.transform(as_matrix(X, self.n_features))
        return expit(Z @ self.weights + self.bias)

    def predict(self, X) -> np.ndarray:
        return (self.scores(X) > self.threshold).astype(int)


def objective(params, Z, y, C):
    """Negative log-likelihood plus ``||w||^2 / (2C)``; the bias is unpenalised."""
    w, b = params[:-1], params[-1]
    t = Z @ w + b
    # log(1 + e^t) - y t, computed stably
    nll = np.sum(np.logaddexp(0.0, t) - y * t)
    return nll + 0.5 * np.dot(w, w) / C


def gradient(params, Z, y, C):
    w, b = params[:-1], params[-1]
    r = expit(Z @ w + b) - y
    return np.concatenate([Z.T @ r + w / C, [r.sum()]])


def hessian(params, Z, y, C):
    w, b = params[:-1], params[-1]
    p = expit(Z @ w + b)
    s = p * (1 - p)
    A = np.hstack([Z, np.ones((Z.shape[0], 1))])
    H = A.T @ (A * s[:, None])
    H[:-1, :-1] += np.eye(w.size) / C
    return H


def train_logistic(X, y, threshold: float = 0.45, C: float = 1.0, tol: float = 1e-6,
                   max_iter: int = 100) -> LogisticModel:
    """Damped Newton on the convex objective until the gradient norm is below ``tol``."""
    y = check_binary(y)
    X = as_matrix(X)
    if min(np.sum(y == 0), np.sum(y == 1)) < 2:
        raise ModelError("logistic regression needs at least 2 samples per class")
    scaler = Scaler.fit(X)
    Z = scaler.transform(X)
    params = np.zeros(Z.shape[1] + 1)
    f = objective(params, Z, y, C)
    for _ in range(max_iter):
        g = gradient(params, Z, y, C)
        if np.linalg.norm(g) <= tol:
            break
        step = np.linalg.solve(hessian(params, Z, y, C), g)
        t = 1.0
        while t > 1e-10:
            cand = params - t * step
            fc = objective(cand, Z, y, C)
            if fc <= f - 1e-4 * t * np.dot(g, step):
                break
            t *= 0.5
        params, f = cand, fc
    else:
        if np.linalg.norm(gradient(params, Z, y, C)) > tol:
            raise ModelError("logistic regression did not converge")
    return LogisticModel(params[:-1].copy(), float(params[-1]), scaler, threshold, C)
