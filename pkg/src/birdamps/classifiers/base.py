from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class Scaler:
    """Per-feature standardisation fit on training rows only."""
    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X) -> "Scaler":
        X = np.asarray(X, dtype=float)
        std = X.std(axis=0)
        return cls(X.mean(axis=0), np.where(std > 0, std, 1.0))

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.mean.size:
            raise ModelError(f"expected {self.mean.size} features, got {X.shape[-1]}")
        return (X - self.mean) / self.scale

    def to_dict(self):
        return {"mean": self.mean.tolist(), "scale": self.scale.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["mean"], dtype=float), np.array(d["scale"], dtype=float))


def check_binary(y) -> np.ndarray:
    y = np.asarray(y).astype(int).reshape(-1)
    if not np.all((y == 0) | (y == 1)):
        raise ModelError("labels must be 0/1")
    if np.unique(y).size < 2:
        raise ModelError("training labels contain a single class")
    return y


def as_matrix(X, n_features: int | None = None) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if n_features is not None and X.shape[1] != n_features:
        raise ModelError(f"expected {n_features} features, got {X.shape[1]}")
    return X
