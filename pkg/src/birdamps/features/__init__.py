"""AMPS (amplitude modulation, pitch, spectrum) and MFCC window features."""
from __future__ import annotations

from dataclasses import astuple, dataclass, field, fields

import numpy as np

from ..dsp import FrameSpec
from ..preprocess import PreprocessConfig, preprocess_for_am, preprocess_for_pitch_spectral
from .am import AM_BANDS, AmBandResult, AmConfig, am_band_analysis, am_envelope, am_features, select_am
from .mfcc import extract_mfcc
from .pitch import PitchTrack, YinConfig, pitch_moments, yin_pitch_track
from .spectral import spectral_features

__all__ = [
    "AM_BANDS", "AMPS_NAMES", "AmBandResult", "AmConfig", "AmpsFeatureVector", "FeatureConfig",
    "MFCC_NAMES", "PitchTrack", "YinConfig", "am_band_analysis", "am_envelope", "am_features",
    "assemble_amps", "extract_amps", "extract_mfcc", "mfcc_for_window", "pitch_moments",
    "spectral_features", "yin_pitch_track",
]


@dataclass(frozen=True)
class AmpsFeatureVector:
    pitch_mean: float
    pitch_variance: float
    pitch_skew: float
    pitch_kurtosis: float
    centroid_mean: float
    centroid_variance: float
    rolloff_mean: float
    rolloff_variance: float
    am_frequency: float
    am_prominence: float
    am_depth: float

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=float)


AMPS_NAMES = tuple(f.name for f in fields(AmpsFeatureVector))
MFCC_NAMES = tuple([f"mfcc{i}_mean" for i in range(13)] + [f"mfcc{i}_var" for i in range(13)])


@dataclass(frozen=True)
class FeatureConfig:
    preprocess: PreprocessConfig = field(default_factory=PreprocessConfig)
    yin: YinConfig = field(default_factory=YinConfig)
    am: AmConfig = field(default_factory=AmConfig)
    spectral_frame: FrameSpec = field(default_factory=lambda: FrameSpec(0.02, 0.01))
    rolloff_fraction: float = 0.85
    mfcc_coeffs: int = 13
    mfcc_filters: int = 26
    mfcc_frame: FrameSpec = field(default_factory=lambda: FrameSpec(0.02, 0.01))


def assemble_amps(pitch, spectral, band_results) -> AmpsFeatureVector:
    if len(band_results) != 4:
        raise ValueError(f"expected 4 AM band results, got {len(band_results)}")
    values = [float(v) for v in (*pitch, *spectral, *select_am(band_results))]
    values = [v if np.isfinite(v) else 0.0 for v in values]
    return AmpsFeatureVector(*values)


def extract_amps(samples, cfg: FeatureConfig | None = None) -> AmpsFeatureVector:
    """Full AMPS pipeline for one analysis window of raw samples."""
    cfg = cfg or FeatureConfig()
    x = getattr(samples, "samples", samples)
    rate = cfg.preprocess.sample_rate
    clean = preprocess_for_pitch_spectral(x, cfg.preprocess)
    am_path = preprocess_for_am(x, cfg.preprocess)
    pitch = pitch_moments(yin_pitch_track(clean, cfg.yin))
    spectral = spectral_features(clean, cfg.spectral_frame, rate, cfg.rolloff_fraction)
    bands = am_features(am_path, cfg.am)
    return assemble_amps(pitch, spectral, bands)


def mfcc_for_window(samples, cfg: FeatureConfig | None = None) -> np.ndarray:
    """MFCC baseline on the shared band-limit + normalise path."""
    cfg = cfg or FeatureConfig()
    x = getattr(samples, "samples", samples)
    y = preprocess_for_am(x, cfg.preprocess)
    return extract_mfcc(y, cfg.mfcc_coeffs, cfg.mfcc_frame, cfg.preprocess.sample_rate, cfg.mfcc_filters)
