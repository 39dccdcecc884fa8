"""Signal-processing primitives shared by preprocessing and feature extraction.

Everything here is a pure function of its inputs. Filters are immutable
records holding their taps and design parameters; filtering is done by
zero-padded linear convolution with the group delay removed so that the
output lines up sample-for-sample with the input.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

SIXTH_OCTAVE_RATIO = 2.0 ** (1.0 / 6.0)


@dataclass(frozen=True)
class FirFilter:
    taps: np.ndarray
    band: tuple[float, float]
    sample_rate: float
    kind: str = "bandpass"

    @property
    def num_taps(self) -> int:
        return int(self.taps.size)

    @property
    def center(self) -> float:
        low, high = self.band
        return float(np.sqrt(low * high))

    def response(self, freqs) -> np.ndarray:
        """Complex frequency response evaluated at ``freqs`` (Hz), zero-phase."""
        freqs = np.atleast_1d(np.asarray(freqs, dtype=float))
        n = np.arange(self.num_taps) - (self.num_taps - 1) / 2
        phase = np.exp(-2j * np.pi * np.outer(freqs, n) / self.sample_rate)
        return phase @ self.taps


@dataclass(frozen=True)
class FilterBank:
    filters: tuple[FirFilter, ...]
    center_frequencies: np.ndarray

    @property
    def count(self) -> int:
        return len(self.filters)


@dataclass(frozen=True)
class FrameSpec:
    length: float
    hop: float

    def __post_init__(self):
        if not (0 < self.hop <= self.length):
            raise ValueError(f"frame spec needs 0 < hop <= length, got {self}")

    def samples(self, sample_rate: float) -> tuple[int, int]:
        return int(round(self.length * sample_rate)), int(round(self.hop * sample_rate))


def _sinc_lowpass(cutoff: float, n: np.ndarray) -> np.ndarray:
    # cutoff as a fraction of the sample rate
    return 2.0 * cutoff * np.sinc(2.0 * cutoff * n)


def design_bandpass(low: float, high: float, sample_rate: float, num_taps: int = 513) -> FirFilter:
    """Hamming-windowed sinc bandpass with unit gain at the geometric band centre."""
    nyquist = sample_rate / 2.0
    if not (0 < low < high < nyquist):
        raise ValueError(f"invalid band edges ({low}, {high}) for sample rate {sample_rate}")
    if num_taps < 3 or num_taps % 2 == 0:
        raise ValueError(f"num_taps must be odd and >= 3, got {num_taps}")
    n = np.arange(num_taps) - (num_taps - 1) / 2
    ideal = _sinc_lowpass(high / sample_rate, n) - _sinc_lowpass(low / sample_rate, n)
    taps = ideal * np.hamming(num_taps)
    fir = FirFilter(taps=taps, band=(float(low), float(high)), sample_rate=float(sample_rate))
    gain = np.abs(fir.response(fir.center)[0])
    taps = taps / gain
    taps.setflags(write=False)
    return FirFilter(taps=taps, band=fir.band, sample_rate=fir.sample_rate)


def apply_fir(fir: FirFilter, x, sample_rate: float | None = None) -> np.ndarray:
    """Filter ``x`` with group-delay compensation; output length equals input length."""
    if sample_rate is not None and not np.isclose(sample_rate, fir.sample_rate):
        raise ValueError(f"signal rate {sample_rate} does not match filter rate {fir.sample_rate}")
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        return x.copy()
    delay = (fir.num_taps - 1) // 2
    full = fftconvolve(x, fir.taps, mode="full")
    out = full[delay:delay + x.size]
    # fftconvolve leaves ~1e-17 residue on silent input
    if not np.any(x):
        out = np.zeros_like(x)
    return out


def frame_signal(x, spec: FrameSpec, sample_rate: float) -> np.ndarray:
    """Frames of ``x`` as rows; trailing partial frame is dropped."""
    x = np.asarray(x, dtype=float)
    length, hop = spec.samples(sample_rate)
    if x.size < length:
        raise ValueError(f"signal of {x.size} samples is shorter than one frame ({length})")
    count = (x.size - length) // hop + 1
    return np.lib.stride_tricks.sliding_window_view(x, length)[::hop][:count]


def frame_count(n_samples: int, spec: FrameSpec, sample_rate: float) -> int:
    length, hop = spec.samples(sample_rate)
    if n_samples < length:
        return 0
    return (n_samples - length) // hop + 1


def power_spectrum(x) -> np.ndarray:
    """One-sided ``|X[k]|^2 / N^2`` for k = 0..N//2."""
    x = np.asarray(x, dtype=float)
    if x.size < 2:
        raise ValueError("power spectrum needs at least two samples")
    return np.abs(np.fft.rfft(x)) ** 2 / x.size ** 2


def parseval_weights(n: int) -> np.ndarray:
    """Weights turning the one-sided power spectrum into mean signal power."""
    w = np.full(n // 2 + 1, 2.0)
    w[0] = 1.0
    if n % 2 == 0:
        w[-1] = 1.0
    return w


def _bank_taps(low: float, high: float, sample_rate: float) -> int:
    # Hamming transition band is roughly 3.3 fs / N wide; keep it under the passband width
    n = int(np.ceil(4.0 * sample_rate / (high - low)))
    return max(513, n + (1 - n % 2))


def sixth_octave_bank(center: float = 2000.0, count: int = 20,
                      band: tuple[float, float] = (800.0, 16000.0),
                      sample_rate: float = 44100.0) -> FilterBank:
    """Bank of sixth-octave bandpass filters at ``center * 2**((k - count/2)/6)``.

    Each filter spans one sixth of an octave around its centre
    (edges at ``fc * 2**(+-1/12)``). The tap count grows as the passband
    narrows so the low bands keep their selectivity.
    """
    if count < 1:
        raise ValueError("filterbank needs at least one filter")
    if not (band[0] <= center <= band[1]):
        raise ValueError(f"centre {center} Hz lies outside band {band}")
    offset = count // 2
    exponents = (np.arange(count) - offset) / 6.0
    centers = center * 2.0 ** exponents
    edge = 2.0 ** (1.0 / 12.0)
    nyquist = sample_rate / 2.0
    filters = []
    for fc in centers:
        low, high = fc / edge, min(fc * edge, 0.999 * nyquist)
        filters.append(design_bandpass(low, high, sample_rate, _bank_taps(low, high, sample_rate)))
    centers.setflags(write=False)
    return FilterBank(filters=tuple(filters), center_frequencies=centers)


def median_filter_bool(flags, block: int) -> np.ndarray:
    """Majority vote over a centred window of ``block`` flags; windows shrink at the edges.

    A tie inside a shrunken edge window keeps the flag at the centre.
    """
    if block < 1 or block % 2 == 0:
        raise ValueError(f"median block must be a positive odd integer, got {block}")
    flags = np.asarray(flags, dtype=bool)
    n = flags.size
    if n == 0 or block == 1:
        return flags.copy()
    half = block // 2
    csum = np.concatenate(([0], np.cumsum(flags, dtype=int)))
    idx = np.arange(n)
    lo = np.maximum(idx - half, 0)
    hi = np.minimum(idx + half + 1, n)
    ones = csum[hi] - csum[lo]
    size = hi - lo
    out = 2 * ones > size
    tie = 2 * ones == size
    out[tie] = flags[tie]
    return out
