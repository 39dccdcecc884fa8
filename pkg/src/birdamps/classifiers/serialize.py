"""Versioned JSON model documents.

Floats are written with ``repr`` precision by the json module, so a
round trip reproduces every parameter bit for bit.
"""
from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .base import ModelError, Scaler
from .forest import ForestModel, Tree
from .logistic import LogisticModel
from .stacking import StackingModel
from .svm import SvmModel

FORMAT = "birdamps-model"
VERSION = 1


def _logistic(m: LogisticModel):
    return {"weights": m.weights.tolist(), "bias": m.bias, "threshold": m.threshold, "C": m.C,
            "scaler": m.scaler.to_dict()}


def _svm(m: SvmModel):
    # support vectors live in standardised space; the flag stops a reader from scaling them again
    return {"support_vectors": m.support_vectors.tolist(), "support_vectors_scaled": True,
            "dual_coef": m.dual_coef.tolist(),
            "bias": m.bias, "gamma": m.gamma, "C": m.C, "kkt_gap": m.kkt_gap,
            "converged": m.converged, "n_features": m.n_features, "scaler": m.scaler.to_dict()}


def _tree(t: Tree):
    return {"feature": t.feature.tolist(), "threshold": t.threshold.tolist(), "left": t.left.tolist(),
            "right": t.right.tolist(), "value": t.value.tolist(), "n_samples": t.n_samples.tolist(),
            "depth": t.depth.tolist(), "candidates": [list(c) for c in t.candidates]}


def _forest(m: ForestModel):
    return {"n_features": m.n_features, "max_depth": m.max_depth, "min_samples": m.min_samples,
            "features_per_node": m.features_per_node, "criterion": m.criterion, "seed": m.seed,
            "trees": [_tree(t) for t in m.trees]}


def _stacking(m: StackingModel):
    return {"logistic": _logistic(m.logistic), "svm": _svm(m.svm), "forest": _forest(m.forest),
            "meta": _svm(m.meta), "hard_labels": m.hard_labels}


def _load_logistic(d):
    return LogisticModel(np.array(d["weights"], dtype=float), float(d["bias"]),
                         Scaler.from_dict(d["scaler"]), float(d["threshold"]), float(d["C"]))


def _load_svm(d):
    if d.get("support_vectors_scaled") is not True:
        raise ModelError("SVM record does not declare standardised support vectors")
    sv = np.array(d["support_vectors"], dtype=float).reshape(-1, int(d["n_features"]))
    return SvmModel(sv, np.array(d["dual_coef"], dtype=float), float(d["bias"]),
                    Scaler.from_dict(d["scaler"]), float(d["gamma"]), float(d["C"]),
                    float(d["kkt_gap"]), bool(d["converged"]))


def _load_tree(d):
    return Tree(np.array(d["feature"], dtype=int), np.array(d["threshold"], dtype=float),
                np.array(d["left"], dtype=int), np.array(d["right"], dtype=int),
                np.array(d["value"], dtype=float), np.array(d["n_samples"], dtype=int),
                np.array(d["depth"], dtype=int), tuple(tuple(c) for c in d["candidates"]))


def _load_forest(d):
    return ForestModel(tuple(_load_tree(t) for t in d["trees"]), int(d["n_features"]),
                       int(d["max_depth"]), int(d["min_samples"]), int(d["features_per_node"]),
                       d["criterion"], int(d["seed"]))


def _load_stacking(d):
    return StackingModel(_load_logistic(d["logistic"]), _load_svm(d["svm"]), _load_forest(d["forest"]),
                         _load_svm(d["meta"]), bool(d["hard_labels"]))


_WRITERS = {LogisticModel: ("logistic", _logistic), SvmModel: ("svm", _svm),
            ForestModel: ("forest", _forest), StackingModel: ("stacking", _stacking)}
_READERS = {"logistic": _load_logistic, "svm": _load_svm, "forest": _load_forest,
            "stacking": _load_stacking}


def model_to_dict(model, metadata: dict | None = None) -> dict:
    try:
        kind, writer = _WRITERS[type(model)]
    except KeyError:
        raise ModelError(f"cannot serialise {type(model).__name__}") from None
    return {"format": FORMAT, "version": VERSION, "kind": kind, "metadata": metadata or {},
            "model": writer(model)}


def model_from_dict(doc: dict):
    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise ModelError("not a birdamps model document")
    if doc.get("version") != VERSION:
        raise ModelError(f"unsupported model version {doc.get('version')!r} (expected {VERSION})")
    reader = _READERS.get(doc.get("kind"))
    if reader is None:
        raise ModelError(f"unknown model kind {doc.get('kind')!r}")
    try:
        return reader(doc["model"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelError(f"corrupt model document: {exc}") from exc


def serialize_model(model, path, metadata: dict | None = None) -> None:
    path = Path(path)
    text = json.dumps(model_to_dict(model, metadata))
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=path.name, suffix=".tmp")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def read_model_document(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelError(f"{path}: corrupt model file ({exc})") from exc


def deserialize_model(path):
    return model_from_dict(read_model_document(path))
