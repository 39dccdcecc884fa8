"""Run configuration: one YAML document, defaults merged, dotted overrides."""
from __future__ import annotations

import copy
from pathlib import Path

import yaml

from .dataset import DEFAULT_NON_BIRD_PATTERNS
from .dsp import FrameSpec
from .evaluation import ClassifierConfig, SplitSpec
from .features import AmConfig, FeatureConfig, YinConfig
from .preprocess import PreprocessConfig


class ConfigError(ValueError):
    pass


DEFAULTS: dict = {
    "paths": {
        "audio_dir": "audio",
        "labels_dir": "labels",
        "manifest": "manifest.csv",
        "output_dir": "out",
        "audio_pattern": "{id}.wav",
        "labels_pattern": "{id}.csv",
    },
    "dataset": {
        "truncate": False,
        "non_bird_tags": list(DEFAULT_NON_BIRD_PATTERNS),
        "overlap_min": 0.0,
    },
    "preprocess": {
        "band": [800.0, 16000.0],
        "band_taps": 513,
        "gate_band": [2000.0, 8000.0],
        "gate_ratio_threshold": 1.0,
        "gate_window_length": 0.02,
        "gate_window_overlap": 0.01,
        "gate_median_block": 5,
        "nr_window_length": 0.02,
        "nr_window_overlap": 0.01,
        "nr_keep": 3,
        "nr_center": 2000.0,
        "nr_count": 20,
    },
    "features": {
        "am": {
            "min_modulation_freq": 1.0,
            "max_modulation_freq": 10.0,
            "prominence_cutoff": 3.0,
            "depth_threshold": 0.01,
            "strong_factor": 2.0,
            "band_taps": 513,
        },
        "pitch": {
            "window_length": 0.02,
            "window_overlap": 0.01,
            "threshold": 0.3,
            "f_min": 200.0,
            "f_max": 10000.0,
        },
        "spectral": {
            "window_length": 0.02,
            "window_overlap": 0.01,
            "rolloff_fraction": 0.85,
        },
        "mfcc": {
            "n_coeffs": 13,
            "n_filters": 26,
            "window_length": 0.02,
            "window_overlap": 0.01,
        },
    },
    "classifiers": {
        "logistic": {"threshold": 0.45, "C": 1.0},
        "svm": {"C": 1.0, "gamma": 0.5},
        "forest": {"trees": 500, "max_depth": 8, "min_samples": 8, "features_per_node": 4,
                   "criterion": "entropy"},
        "stacking": {"folds": 5, "hard_labels": False, "meta": {"C": 1.0, "gamma": 0.5}},
    },
    "eval": {
        "test_fraction": 0.2,
        "folds": 5,
        "seed": 42,
        "grouping": "by_recording",
        "classifiers": ["logistic", "svm", "forest", "stacking"],
        "feature_sets": ["amps", "mfcc"],
        "grids": {},
    },
    "feature_set": "amps",
    "workers": 1,
}

# keys whose values are free-form mappings rather than fixed schemas
_OPEN = {("eval", "grids")}


def _merge(base: dict, update: dict, path=()) -> dict:
    out = copy.deepcopy(base)
    for key, value in update.items():
        here = path + (key,)
        if key not in out:
            raise ConfigError(f"unknown config key {'.'.join(here)}")
        if isinstance(out[key], dict) and here not in _OPEN:
            if not isinstance(value, dict):
                raise ConfigError(f"{'.'.join(here)} must be a mapping")
            out[key] = _merge(out[key], value, here)
        else:
            out[key] = value
    return out


def parse_override(item: str) -> dict:
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not key=value")
    key, raw = item.split("=", 1)
    value = yaml.safe_load(raw)
    doc: dict = {}
    node = doc
    parts = key.strip().split(".")
    for part in parts[:-1]:
        node = node.setdefault(part, {})
    node[parts[-1]] = value
    return doc


def load_config(path=None, overrides=()) -> dict:
    cfg = copy.deepcopy(DEFAULTS)
    if path is not None:
        with open(path) as fh:
            loaded = yaml.safe_load(fh) or {}
        if not isinstance(loaded, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
        cfg = _merge(cfg, loaded)
        base = Path(path).parent
        for key in ("audio_dir", "labels_dir", "manifest", "output_dir"):
            p = Path(cfg["paths"][key])
            if not p.is_absolute():
                cfg["paths"][key] = str(base / p)
    for item in overrides:
        cfg = _merge(cfg, parse_override(item))
    return cfg


def dump_config(cfg: dict, path) -> None:
    Path(path).write_text(yaml.safe_dump(cfg, sort_keys=True))


def _frame(length, overlap) -> FrameSpec:
    return FrameSpec(float(length), float(length) - float(overlap))


def preprocess_config(cfg: dict) -> PreprocessConfig:
    p = cfg["preprocess"]
    return PreprocessConfig(
        band=tuple(map(float, p["band"])),
        band_taps=int(p["band_taps"]),
        gate_band=tuple(map(float, p["gate_band"])),
        gate_ratio_threshold=float(p["gate_ratio_threshold"]),
        gate_frame=_frame(p["gate_window_length"], p["gate_window_overlap"]),
        gate_median_block=int(p["gate_median_block"]),
        nr_frame=_frame(p["nr_window_length"], p["nr_window_overlap"]),
        nr_keep=int(p["nr_keep"]),
        nr_center=float(p["nr_center"]),
        nr_count=int(p["nr_count"]),
    )


def feature_config(cfg: dict) -> FeatureConfig:
    f = cfg["features"]
    am, pitch, spec, mfcc = f["am"], f["pitch"], f["spectral"], f["mfcc"]
    return FeatureConfig(
        preprocess=preprocess_config(cfg),
        yin=YinConfig(frame=_frame(pitch["window_length"], pitch["window_overlap"]),
                      threshold=float(pitch["threshold"]), f_min=float(pitch["f_min"]),
                      f_max=float(pitch["f_max"])),
        am=AmConfig(band_taps=int(am["band_taps"]), f_min=float(am["min_modulation_freq"]),
                    f_max=float(am["max_modulation_freq"]),
                    prominence_cutoff=float(am["prominence_cutoff"]),
                    depth_threshold=float(am["depth_threshold"]),
                    strong_factor=float(am["strong_factor"])),
        spectral_frame=_frame(spec["window_length"], spec["window_overlap"]),
        rolloff_fraction=float(spec["rolloff_fraction"]),
        mfcc_coeffs=int(mfcc["n_coeffs"]),
        mfcc_filters=int(mfcc["n_filters"]),
        mfcc_frame=_frame(mfcc["window_length"], mfcc["window_overlap"]),
    )


def classifier_config(cfg: dict) -> ClassifierConfig:
    c = cfg["classifiers"]
    return ClassifierConfig(logistic=dict(c["logistic"]), svm=dict(c["svm"]), forest=dict(c["forest"]),
                            stacking=copy.deepcopy(c["stacking"]))


def split_spec(cfg: dict) -> SplitSpec:
    e = cfg["eval"]
    return SplitSpec(float(e["test_fraction"]), int(e["folds"]), int(e["seed"]), str(e["grouping"]))
