"""Amplitude-modulation features in two-octave bands.

The window is band-filtered, reduced to a 100-point RMS envelope (10 ms
blocks), and the envelope spectrum is searched for a prominent peak
between 1 and 10 Hz. A detected peak, plus any prominent 2nd/3rd
harmonics when the peak is strong, is resynthesised and its 95th-5th
percentile span taken as the modulation depth.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ..dsp import FirFilter, apply_fir, design_bandpass, power_spectrum

AM_BANDS = ((500.0, 2000.0), (1000.0, 4000.0), (2000.0, 8000.0), (4000.0, 16000.0))

# harmonic bins must carry at least this fraction of the fundamental's power
_HARMONIC_FLOOR = 1e-6


@dataclass(frozen=True)
class AmConfig:
    bands: tuple[tuple[float, float], ...] = AM_BANDS
    band_taps: int = 513
    n_blocks: int = 100
    block_size: int = 441
    f_min: float = 1.0
    f_max: float = 10.0
    prominence_cutoff: float = 3.0
    depth_threshold: float = 0.01
    strong_factor: float = 2.0
    neighbourhood: int = 3
    sample_rate: float = 44100.0


@dataclass(frozen=True)
class AmBandResult:
    band_index: int
    detected: bool
    frequency: float = 0.0
    prominence: float = 0.0
    depth: float = 0.0
    kept_harmonics: tuple[int, ...] = field(default_factory=tuple)

    @property
    def triple(self) -> tuple[float, float, float]:
        return self.frequency, self.prominence, self.depth


@lru_cache(maxsize=16)
def band_filter(low: float, high: float, sample_rate: float = 44100.0, taps: int = 513) -> FirFilter:
    return design_bandpass(low, high, sample_rate, taps)


def am_envelope(x, fir: FirFilter, n_blocks: int = 100, block_size: int = 441) -> np.ndarray:
    """RMS of the band-filtered signal over ``n_blocks`` consecutive blocks."""
    x = np.asarray(x, dtype=float)
    need = n_blocks * block_size
    if x.size < need:
        raise ValueError(f"AM envelope needs {need} samples, got {x.size}")
    y = apply_fir(fir, x[:need])
    return np.sqrt(np.mean(y.reshape(n_blocks, block_size) ** 2, axis=1))


def prominence(power: np.ndarray, k: int, half_width: int = 3) -> float:
    """Peak power over the mean power of bins k-half_width..k+half_width (peak included)."""
    lo, hi = max(0, k - half_width), min(power.size, k + half_width + 1)
    local = power[lo:hi].mean()
    if local <= 0:
        return 0.0
    return float(power[k] / local)


def am_band_analysis(envelope, cfg: AmConfig | None = None, band_index: int = 0) -> AmBandResult:
    cfg = cfg or AmConfig()
    env = np.asarray(envelope, dtype=float)
    n = env.size
    if n != cfg.n_blocks:
        raise ValueError(f"envelope must have {cfg.n_blocks} samples, got {n}")
    missing = AmBandResult(band_index, False)
    centred = env - env.mean()
    power = power_spectrum(centred)
    # envelope spans one second, so bin k sits at k Hz scaled by block duration
    bin_hz = cfg.sample_rate / (cfg.block_size * n)
    lo = int(np.ceil(cfg.f_min / bin_hz - 1e-9))
    hi = min(int(np.floor(cfg.f_max / bin_hz + 1e-9)), power.size - 1)
    if hi < lo or not np.any(power[lo:hi + 1] > 0):
        return missing
    k_peak = lo + int(np.argmax(power[lo:hi + 1]))
    q = prominence(power, k_peak, cfg.neighbourhood)
    if q < cfg.prominence_cutoff:
        return missing
    kept = [k_peak]
    harmonics = []
    if q >= cfg.strong_factor * cfg.prominence_cutoff:
        for h in (2, 3):
            centre = h * k_peak
            cands = [c for c in (centre - 1, centre, centre + 1) if 0 < c < power.size]
            if not cands:
                continue
            k_h = max(cands, key=lambda c: power[c])
            if power[k_h] < _HARMONIC_FLOOR * power[k_peak]:
                continue
            if prominence(power, k_h, cfg.neighbourhood) >= cfg.prominence_cutoff:
                kept.append(k_h)
                harmonics.append(h)
    spectrum = np.fft.fft(centred)
    mask = np.zeros(n, dtype=bool)
    for k in kept:
        mask[k] = True
        mask[(n - k) % n] = True
    y = np.real(np.fft.ifft(np.where(mask, spectrum, 0.0)))
    depth = float(np.percentile(y, 95) - np.percentile(y, 5))
    if depth < cfg.depth_threshold:
        return missing
    return AmBandResult(band_index, True, float(k_peak * bin_hz), q, depth,
                        tuple([1] + harmonics))


def am_features(x, cfg: AmConfig | None = None) -> list[AmBandResult]:
    """Analyse every configured band of an AM-path window."""
    cfg = cfg or AmConfig()
    results = []
    for i, (low, high) in enumerate(cfg.bands):
        fir = band_filter(low, high, cfg.sample_rate, cfg.band_taps)
        env = am_envelope(x, fir, cfg.n_blocks, cfg.block_size)
        results.append(am_band_analysis(env, cfg, i))
    return results


def select_am(results) -> tuple[float, float, float]:
    """AM triple of the detected band with the highest prominence; lowest index wins ties."""
    best = None
    for r in results:
        if r.detected and (best is None or r.prominence > best.prominence):
            best = r
    return (0.0, 0.0, 0.0) if best is None else best.triple
