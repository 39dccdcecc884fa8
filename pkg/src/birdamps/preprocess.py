"""The two preprocessing paths.

Band-limiting and peak normalisation are shared by every feature. The
pitch and spectral extractors additionally see an energy-ratio activity
gate and a sixth-octave filterbank noise reducer; the AM extractor does
not, because both steps reshape the envelope it measures.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .dsp import (
    FilterBank,
    FrameSpec,
    apply_fir,
    design_bandpass,
    frame_signal,
    median_filter_bool,
    sixth_octave_bank,
)

SAMPLE_RATE = 44100


@dataclass(frozen=True)
class PreprocessConfig:
    band: tuple[float, float] = (800.0, 16000.0)
    band_taps: int = 513
    gate_band: tuple[float, float] = (2000.0, 8000.0)
    gate_ratio_threshold: float = 1.0
    gate_frame: FrameSpec = field(default_factory=lambda: FrameSpec(0.02, 0.01))
    gate_median_block: int = 5
    nr_frame: FrameSpec = field(default_factory=lambda: FrameSpec(0.02, 0.01))
    nr_keep: int = 3
    nr_center: float = 2000.0
    nr_count: int = 20
    sample_rate: float = SAMPLE_RATE

    def __post_init__(self):
        lo, hi = self.band
        glo, ghi = self.gate_band
        if not (lo <= glo < ghi <= hi):
            raise ValueError(f"gate band {self.gate_band} must lie within {self.band}")
        if not 1 <= self.nr_keep <= self.nr_count:
            raise ValueError("nr_keep must be between 1 and the filterbank size")
        if self.gate_median_block < 1 or self.gate_median_block % 2 == 0:
            raise ValueError("gate_median_block must be a positive odd integer")


@lru_cache(maxsize=16)
def _band_filter(low, high, sample_rate, taps):
    return design_bandpass(low, high, sample_rate, taps)


@lru_cache(maxsize=8)
def _noise_bank(center, count, band, sample_rate):
    return sixth_octave_bank(center, count, band, sample_rate)


def noise_bank(cfg: PreprocessConfig) -> FilterBank:
    return _noise_bank(cfg.nr_center, cfg.nr_count, tuple(cfg.band), cfg.sample_rate)


def bandlimit_normalize(x, cfg: PreprocessConfig | None = None) -> np.ndarray:
    """Bandpass to ``cfg.band`` then scale so the peak magnitude is exactly 1.

    All-zero input is returned unchanged.
    """
    cfg = cfg or PreprocessConfig()
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        raise ValueError("cannot preprocess an empty signal")
    fir = _band_filter(cfg.band[0], cfg.band[1], cfg.sample_rate, cfg.band_taps)
    y = apply_fir(fir, x)
    peak = np.max(np.abs(y))
    if peak <= 0.0:
        return np.zeros_like(y)
    return y / peak


def _hann(n: int) -> np.ndarray:
    # periodic Hann: overlap-adds to a constant at hop n/2
    return 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(n) / n)


def overlap_add(frames: np.ndarray, hop: int) -> np.ndarray:
    """Hann-tapered overlap-add of consecutive ``frames``, normalised by the summed taper."""
    if frames.shape[0] == 0:
        return np.zeros(0)
    count, length = frames.shape
    window = _hann(length)
    out = np.zeros((count - 1) * hop + length)
    weight = np.zeros_like(out)
    for k in range(count):
        out[k * hop:k * hop + length] += window * frames[k]
        weight[k * hop:k * hop + length] += window
    nz = weight > 1e-12
    out[nz] /= weight[nz]
    # the first sample has zero taper weight; take it from the frame directly
    out[~nz] = 0.0
    if not nz[0]:
        out[0] = frames[0][0]
    return out


def gate_ratios(x, cfg: PreprocessConfig) -> np.ndarray:
    """Per-frame energy in the gate band over energy in the rest of the signal band."""
    frames = frame_signal(x, cfg.gate_frame, cfg.sample_rate)
    spec = np.abs(np.fft.rfft(frames, axis=1)) ** 2
    freqs = np.fft.rfftfreq(frames.shape[1], 1.0 / cfg.sample_rate)
    lo, hi = cfg.band
    glo, ghi = cfg.gate_band
    in_gate = (freqs >= glo) & (freqs <= ghi)
    rest = (freqs >= lo) & (freqs <= hi) & ~in_gate
    gate_e = spec[:, in_gate].sum(axis=1)
    rest_e = spec[:, rest].sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(rest_e > 0, gate_e / np.where(rest_e > 0, rest_e, 1.0), np.inf)
    ratio[gate_e <= 0] = 0.0
    return ratio


def energy_activity_gate(x, cfg: PreprocessConfig | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Keep only frames whose gate-band energy ratio exceeds the threshold.

    Returns ``(kept_signal, flags)``. Active frames are stitched back
    together by overlap-add in their original order; inactive frames are
    dropped, so the kept signal is time-compressed.
    """
    cfg = cfg or PreprocessConfig()
    x = np.asarray(x, dtype=float)
    length, hop = cfg.gate_frame.samples(cfg.sample_rate)
    if x.size < length:
        return np.zeros(0), np.zeros(0, dtype=bool)
    raw = gate_ratios(x, cfg) > cfg.gate_ratio_threshold
    flags = median_filter_bool(raw, cfg.gate_median_block)
    frames = frame_signal(x, cfg.gate_frame, cfg.sample_rate)
    if not flags.any():
        return np.zeros(0), flags
    return overlap_add(frames[flags], hop), flags


def noise_reduce(x, bank: FilterBank | None = None, cfg: PreprocessConfig | None = None) -> np.ndarray:
    """Per frame, keep the ``nr_keep`` filterbank bands with most normalised energy.

    Band energy is normalised by total frame energy. The kept band signals
    are summed, the frames overlap-added, and any frame whose kept energy
    would exceed its input energy is scaled back to it.
    """
    cfg = cfg or PreprocessConfig()
    bank = bank or noise_bank(cfg)
    x = np.asarray(x, dtype=float)
    length, hop = cfg.nr_frame.samples(cfg.sample_rate)
    if x.size < length:
        return np.zeros(0)
    bands = np.stack([apply_fir(f, x) for f in bank.filters])
    frames_in = frame_signal(x, cfg.nr_frame, cfg.sample_rate)
    count = frames_in.shape[0]
    band_frames = np.lib.stride_tricks.sliding_window_view(bands, length, axis=1)[:, ::hop][:, :count]
    total = np.sum(frames_in ** 2, axis=1)
    energy = np.sum(band_frames ** 2, axis=2)
    with np.errstate(divide="ignore", invalid="ignore"):
        normalised = np.where(total > 0, energy / np.where(total > 0, total, 1.0), 0.0)
    keep = np.argsort(-normalised, axis=0, kind="stable")[:cfg.nr_keep]
    kept = np.zeros_like(frames_in)
    for k in range(count):
        kept[k] = band_frames[keep[:, k], k].sum(axis=0)
    kept_e = np.sum(kept ** 2, axis=1)
    over = kept_e > total
    kept[over] *= np.sqrt(total[over] / kept_e[over])[:, None]
    return overlap_add(kept, hop)[:x.size]


def preprocess_for_am(x, cfg: PreprocessConfig | None = None) -> np.ndarray:
    return bandlimit_normalize(x, cfg)


def preprocess_for_pitch_spectral(x, cfg: PreprocessConfig | None = None,
                                  bank: FilterBank | None = None) -> np.ndarray:
    cfg = cfg or PreprocessConfig()
    y = bandlimit_normalize(x, cfg)
    gated, _ = energy_activity_gate(y, cfg)
    if gated.size == 0:
        return gated
    return noise_reduce(gated, bank, cfg)
