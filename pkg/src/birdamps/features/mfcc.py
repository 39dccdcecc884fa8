"""MFCC baseline: mean and variance of the first 13 coefficients per window."""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.fft import dct

from ..dsp import FrameSpec, frame_signal

LOG_FLOOR = 1e-10


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=float) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=float) / 2595.0) - 1.0)


@lru_cache(maxsize=8)
def mel_filterbank(n_filters: int, n_fft: int, sample_rate: float) -> np.ndarray:
    """Triangular filters evenly spaced on the mel scale from 0 to Nyquist."""
    edges_hz = mel_to_hz(np.linspace(0.0, hz_to_mel(sample_rate / 2.0), n_filters + 2))
    freqs = np.fft.rfftfreq(n_fft, 1.0 / sample_rate)
    bank = np.zeros((n_filters, freqs.size))
    for m in range(n_filters):
        lo, mid, hi = edges_hz[m], edges_hz[m + 1], edges_hz[m + 2]
        rise = (freqs - lo) / (mid - lo)
        fall = (hi - freqs) / (hi - mid)
        bank[m] = np.clip(np.minimum(rise, fall), 0.0, None)
    bank.setflags(write=False)
    return bank


def mfcc_frames(x, n_coeffs: int = 13, spec: FrameSpec = FrameSpec(0.02, 0.01),
                sample_rate: float = 44100.0, n_filters: int = 26) -> np.ndarray:
    frames = frame_signal(x, spec, sample_rate)
    magnitude = np.abs(np.fft.rfft(frames * np.hamming(frames.shape[1]), axis=1))
    energies = magnitude @ mel_filterbank(n_filters, frames.shape[1], sample_rate).T
    logs = np.log(np.maximum(energies, LOG_FLOOR))
    return dct(logs, type=2, norm="ortho", axis=1)[:, :n_coeffs]


def extract_mfcc(x, n_coeffs: int = 13, spec: FrameSpec = FrameSpec(0.02, 0.01),
                 sample_rate: float = 44100.0, n_filters: int = 26) -> np.ndarray:
    """Coefficient means followed by coefficient variances (``2 * n_coeffs`` values).

    ``x`` is expected to be band-limited and normalised already.
    """
    coeffs = mfcc_frames(x, n_coeffs, spec, sample_rate, n_filters)
    return np.concatenate([coeffs.mean(axis=0), coeffs.var(axis=0)])
