"""Frame-wise spectral centroid and rolloff, summarised by mean and variance."""
from __future__ import annotations

import numpy as np

from ..dsp import FrameSpec, frame_signal

DEFAULT_FRAME = FrameSpec(0.02, 0.01)


def frame_spectra(x, spec: FrameSpec, sample_rate: float) -> tuple[np.ndarray, np.ndarray]:
    frames = frame_signal(x, spec, sample_rate)
    window = np.hanning(frames.shape[1])
    power = np.abs(np.fft.rfft(frames * window, axis=1)) ** 2
    freqs = np.fft.rfftfreq(frames.shape[1], 1.0 / sample_rate)
    return power, freqs


def centroid_rolloff(power: np.ndarray, freqs: np.ndarray, fraction: float = 0.85):
    """Centroid and rolloff per row of ``power``; rows with no energy are dropped.

    Each bin's power is taken as spread evenly over its width, so the
    rolloff is the point inside the crossing bin where the cumulative
    energy reaches ``fraction`` rather than the bin centre.
    """
    total = power.sum(axis=1)
    live = total > 0
    power, total = power[live], total[live]
    centroid = power @ freqs / total
    cum = np.cumsum(power, axis=1)
    target = fraction * total
    rows = np.arange(power.shape[0])
    idx = np.argmax(cum >= target[:, None], axis=1)
    before = cum[rows, idx] - power[rows, idx]
    width = freqs[1] - freqs[0]
    rolloff = freqs[idx] - width / 2 + width * (target - before) / power[rows, idx]
    return centroid, np.clip(rolloff, freqs[0], freqs[-1])


def spectral_features(x, spec: FrameSpec = DEFAULT_FRAME, sample_rate: float = 44100.0,
                      rolloff_fraction: float = 0.85) -> tuple[float, float, float, float]:
    """``(centroid_mean, centroid_var, rolloff_mean, rolloff_var)`` in Hz and Hz^2."""
    x = np.asarray(x, dtype=float)
    length, _ = spec.samples(sample_rate)
    if x.size < length or not np.any(x):
        return 0.0, 0.0, 0.0, 0.0
    power, freqs = frame_spectra(x, spec, sample_rate)
    centroid, rolloff = centroid_rolloff(power, freqs, rolloff_fraction)
    if centroid.size == 0:
        return 0.0, 0.0, 0.0, 0.0
    return (float(centroid.mean()), float(centroid.var()),
            float(rolloff.mean()), float(rolloff.var()))
