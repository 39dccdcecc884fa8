"""Yin pitch tracking and pitch-moment features."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..dsp import FrameSpec, frame_signal

PITCH_SAMPLES = 50


@dataclass(frozen=True)
class YinConfig:
    frame: FrameSpec = field(default_factory=lambda: FrameSpec(0.02, 0.01))
    threshold: float = 0.3
    f_min: float = 200.0
    f_max: float = 10000.0
    samples: int = PITCH_SAMPLES
    sample_rate: float = 44100.0


@dataclass(frozen=True)
class PitchTrack:
    values: np.ndarray
    frame: FrameSpec
    threshold: float

    @property
    def voiced(self) -> np.ndarray:
        return self.values[~np.isnan(self.values)]


def difference_function(frame: np.ndarray, tau_max: int) -> np.ndarray:
    """Squared difference d(tau) over an integration window of ``len(frame) - tau_max``."""
    w = frame.size - tau_max
    ref = frame[:w]
    lagged = np.lib.stride_tricks.sliding_window_view(frame, w)[:tau_max + 1]
    return np.sum((lagged - ref) ** 2, axis=1)


def cmnd(d: np.ndarray) -> np.ndarray:
    """Cumulative-mean-normalised difference; d'(0) = 1."""
    out = np.ones_like(d)
    csum = np.cumsum(d[1:])
    tau = np.arange(1, d.size)
    with np.errstate(divide="ignore", invalid="ignore"):
        out[1:] = np.where(csum > 0, d[1:] * tau / np.where(csum > 0, csum, 1.0), 1.0)
    return out


def _parabolic(y: np.ndarray, i: int) -> float:
    if i <= 0 or i >= y.size - 1:
        return float(i)
    a, b, c = y[i - 1], y[i], y[i + 1]
    denom = a - 2 * b + c
    if denom <= 0:
        return float(i)
    return i + 0.5 * (a - c) / denom


def yin_frame(frame: np.ndarray, cfg: YinConfig) -> float:
    """Fundamental frequency of one frame in Hz, or NaN when unvoiced."""
    tau_min = max(2, int(np.floor(cfg.sample_rate / cfg.f_max)))
    tau_max = int(np.ceil(cfg.sample_rate / cfg.f_min))
    if frame.size <= tau_max + 1 or not np.any(frame):
        return np.nan
    d = difference_function(frame, min(tau_max + 1, frame.size - 2))
    dn = cmnd(d)
    below = np.nonzero(dn[tau_min:tau_max + 1] < cfg.threshold)[0]
    if below.size == 0:
        return np.nan
    tau = tau_min + below[0]
    while tau + 1 < dn.size and dn[tau + 1] < dn[tau]:
        tau += 1
    refined = _parabolic(d, tau)
    if refined <= 0:
        return np.nan
    # one lag of slack at either end of the search range, then clip into it
    if not (tau_min - 1 <= refined <= tau_max + 1):
        return np.nan
    return float(np.clip(cfg.sample_rate / refined, cfg.f_min, cfg.f_max))


def yin_pitch_track(x, cfg: YinConfig | None = None) -> PitchTrack:
    """Sample the fundamental ``cfg.samples`` times across the window.

    Frames are laid out with ``cfg.frame`` and every other frame is kept,
    giving one estimate per 20 ms for the default framing. Missing entries
    (short or empty input) are NaN.
    """
    cfg = cfg or YinConfig()
    x = np.asarray(x, dtype=float)
    values = np.full(cfg.samples, np.nan)
    length, hop = cfg.frame.samples(cfg.sample_rate)
    if x.size >= length:
        frames = frame_signal(x, cfg.frame, cfg.sample_rate)
        stride = max(1, int(round(length / hop)))
        picked = frames[::stride][:cfg.samples]
        for k, frame in enumerate(picked):
            values[k] = yin_frame(frame, cfg)
    return PitchTrack(values=values, frame=cfg.frame, threshold=cfg.threshold)


def pitch_moments(track) -> tuple[float, float, float, float]:
    """Mean, population variance, skew and kurtosis of the voiced entries.

    NaN entries are ignored. No voiced entries gives all zeros; a
    variance below 1e-12 zeroes skew and kurtosis. Kurtosis is the plain
    standardised fourth moment (not excess).
    """
    values = track.values if isinstance(track, PitchTrack) else np.asarray(track, dtype=float)
    v = values[~np.isnan(values)]
    if v.size == 0:
        return 0.0, 0.0, 0.0, 0.0
    mean = float(np.mean(v))
    dev = v - mean
    var = float(np.mean(dev ** 2))
    if var < 1e-12:
        return mean, var, 0.0, 0.0
    skew = float(np.mean(dev ** 3) / var ** 1.5)
    kurt = float(np.mean(dev ** 4) / var ** 2)
    return mean, var, skew, kurt
