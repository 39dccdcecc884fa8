"""Per-recording feature extraction and feature-file I/O."""
from __future__ import annotations

import csv
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .dataset import AnalysisWindow
from .evaluation import FeatureTable
from .features import AMPS_NAMES, FeatureConfig, extract_amps, mfcc_for_window

FEATURE_SETS = ("amps", "mfcc")


def feature_names(feature_set: str, cfg: FeatureConfig | None = None) -> tuple[str, ...]:
    if feature_set == "amps":
        return AMPS_NAMES
    if feature_set == "mfcc":
        n = (cfg or FeatureConfig()).mfcc_coeffs
        return tuple([f"mfcc{i}_mean" for i in range(n)] + [f"mfcc{i}_var" for i in range(n)])
    raise ValueError(f"unknown feature set {feature_set!r}")


def window_features(window, feature_set: str, cfg: FeatureConfig) -> np.ndarray:
    if feature_set == "amps":
        return extract_amps(window, cfg).as_array()
    if feature_set == "mfcc":
        return mfcc_for_window(window, cfg)
    raise ValueError(f"unknown feature set {feature_set!r}")


def extract_windows(windows: Sequence[AnalysisWindow], feature_set: str, cfg: FeatureConfig) -> list[list]:
    """One row ``[recording_id, index, label, *features]`` per window."""
    return [[w.recording_id, w.index, w.label, *window_features(w, feature_set, cfg)] for w in windows]


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    with os.fdopen(fd, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def format_rows(rows: Iterable[list], header: Sequence[str] | None = None) -> str:
    lines = []
    if header is not None:
        lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(repr(float(v)) if isinstance(v, (float, np.floating)) else str(v) for v in row))
    return "\n".join(lines) + ("\n" if lines else "")


def write_feature_csv(rows: Iterable[list], names: Sequence[str], path) -> None:
    atomic_write_text(path, format_rows(rows, ("recording_id", "window_index", "label", *names)))


def read_feature_rows(path) -> list[list]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        return [row for row in reader if row]


def read_feature_csv(path, name: str | None = None) -> FeatureTable:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:3] != ["recording_id", "window_index", "label"]:
            raise ValueError(f"{path}: not a feature file")
        rows = [r for r in reader if r]
    if not rows:
        raise ValueError(f"{path}: feature file has no rows")
    groups = np.array([r[0] for r in rows])
    index = np.array([int(r[1]) for r in rows])
    labels = np.array([int(r[2]) for r in rows])
    X = np.array([[float(v) for v in r[3:]] for r in rows])
    return FeatureTable(name or Path(path).stem, X, labels, groups, index, tuple(header[3:]))
