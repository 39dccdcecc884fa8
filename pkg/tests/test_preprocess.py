import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from birdamps.dsp import FrameSpec, apply_fir, design_bandpass, frame_signal
from birdamps.preprocess import (
    PreprocessConfig,
    bandlimit_normalize,
    energy_activity_gate,
    gate_ratios,
    noise_bank,
    noise_reduce,
    overlap_add,
    preprocess_for_am,
    preprocess_for_pitch_spectral,
)

from conftest import FS, tone

CFG = PreprocessConfig()


def band_energy(x, lo, hi):
    spec = np.abs(np.fft.rfft(x)) ** 2
    freqs = np.fft.rfftfreq(x.size, 1 / FS)
    return spec[(freqs >= lo) & (freqs <= hi)].sum()


def test_bandlimit_peak_is_one():
    y = bandlimit_normalize(tone(4000, amp=0.1))
    assert np.max(np.abs(y)) == pytest.approx(1.0, abs=1e-15)


def test_bandlimit_low_tone_stays_small():
    x = tone(100, amp=1.0)
    fir = design_bandpass(*CFG.band, FS, CFG.band_taps)
    raw = apply_fir(fir, x)
    # pre-normalisation the stopband leaves almost nothing
    assert np.max(np.abs(raw[2000:-2000])) < 0.01
    y = bandlimit_normalize(x)
    assert np.all(np.isfinite(y))


def test_bandlimit_silence():
    y = bandlimit_normalize(np.zeros(FS))
    assert y.shape == (FS,) and not np.any(y)


def test_bandlimit_empty_raises():
    with pytest.raises(ValueError):
        bandlimit_normalize(np.zeros(0))


@settings(max_examples=25, deadline=None)
@given(st.floats(min_value=1e-3, max_value=1e3), st.integers(min_value=0, max_value=10_000))
def test_bandlimit_scale_invariant(c, seed):
    x = np.random.default_rng(seed).standard_normal(4000)
    np.testing.assert_allclose(bandlimit_normalize(c * x), bandlimit_normalize(x), atol=1e-12)


def test_gate_in_band_tone_passes_through():
    x = bandlimit_normalize(tone(4000, amp=0.5))
    kept, flags = energy_activity_gate(x)
    assert flags.all()
    assert kept.size == x.size
    np.testing.assert_allclose(kept, x, atol=1e-12)


def test_gate_out_of_band_noise_dropped():
    rng = np.random.default_rng(4)
    # noise confined to 900-1700 Hz: the gate ratio is ~0 by construction
    shaped = apply_fir(design_bandpass(900, 1700, FS, 1025), rng.standard_normal(FS))
    x = bandlimit_normalize(shaped)
    ratios = gate_ratios(x, CFG)
    assert np.all(ratios < CFG.gate_ratio_threshold)
    kept, flags = energy_activity_gate(x)
    assert kept.size == 0 and not flags.any()


def test_gate_isolated_frame_removed():
    cfg = PreprocessConfig(gate_median_block=3)
    length, hop = cfg.gate_frame.samples(FS)
    rng = np.random.default_rng(5)
    low = apply_fir(design_bandpass(900, 1700, FS, 1025), rng.standard_normal(FS))
    # a 4 kHz burst wholly inside frame 40; its neighbours see about half of it
    start = 40 * hop
    burst = np.zeros_like(low)
    burst[start + 300:start + 600] = tone(4000, 300 / FS)
    # gate energy grows with the burst power, so pick the gain that puts frame 40 at ratio 1.3
    unit = gate_ratios(low + burst, cfg)[40]
    x = low + np.sqrt(1.3 / unit) * burst
    raw = gate_ratios(x, cfg) > cfg.gate_ratio_threshold
    assert raw.sum() == 1 and raw[40]
    _, flags = energy_activity_gate(x, cfg)
    assert not flags.any()


@settings(max_examples=20, deadline=None)
@given(st.floats(min_value=1e-3, max_value=1e3), st.integers(min_value=0, max_value=10_000))
def test_gate_flags_scale_invariant(c, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(FS // 4) * np.repeat(rng.uniform(0, 1, 25), FS // 100)
    _, a = energy_activity_gate(x)
    _, b = energy_activity_gate(c * x)
    np.testing.assert_array_equal(a, b)


def test_gate_output_is_input_frames_for_contiguous_runs():
    # a tone in the first half, out-of-band noise in the second
    rng = np.random.default_rng(6)
    x = np.concatenate([tone(4000, 0.5), 0.01 * apply_fir(design_bandpass(900, 1700, FS, 1025),
                                                           rng.standard_normal(FS // 2))])
    kept, flags = energy_activity_gate(x)
    length, hop = CFG.gate_frame.samples(FS)
    run = np.nonzero(flags)[0]
    assert run.size and np.all(np.diff(run) == 1)
    a = run[0] * hop
    np.testing.assert_allclose(kept, x[a:a + kept.size], atol=1e-12)


def test_overlap_add_reproduces_contiguous_frames():
    x = np.random.default_rng(7).standard_normal(1000)
    frames = frame_signal(x, FrameSpec(0.1, 0.05), 1000)
    np.testing.assert_allclose(overlap_add(frames, 50), x, atol=1e-12)


def test_noise_reduce_keeps_tone():
    rng = np.random.default_rng(8)
    hiss = 0.01 * apply_fir(design_bandpass(9000, 11000, FS, 1025), rng.standard_normal(FS))
    x = tone(2000) + hiss
    y = noise_reduce(x)
    ratio = band_energy(y, 1950, 2050) / band_energy(x, 1950, 2050)
    assert ratio >= 0.8


def test_noise_reduce_tone_at_centre_matches_band():
    bank = noise_bank(CFG)
    k = int(np.argmin(np.abs(bank.center_frequencies - 2000)))
    x = tone(bank.center_frequencies[k])
    y = noise_reduce(x, bank)
    ref = apply_fir(bank.filters[k], x)
    core = slice(2000, -2000)
    err = np.linalg.norm(y[core] - ref[core]) / np.linalg.norm(ref[core])
    assert err < 0.1


def test_noise_reduce_white_noise_loses_energy():
    x = np.random.default_rng(9).standard_normal(FS)
    y = noise_reduce(x)
    assert np.sum(y ** 2) < np.sum(x ** 2)


def test_noise_reduce_empty():
    assert noise_reduce(np.zeros(0)).size == 0


@settings(max_examples=10, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_noise_reduce_energy_bound(seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(FS // 4) * np.repeat(rng.uniform(0, 1, 25), FS // 100)
    y = noise_reduce(x)
    assert y.size == x.size
    assert np.sum(y ** 2) <= np.sum(x ** 2) * (1 + 1e-9)


def test_am_path_preserves_length():
    x = np.random.default_rng(10).standard_normal(12345)
    assert preprocess_for_am(x).size == x.size


def test_path_asymmetry_on_inactive_input():
    rng = np.random.default_rng(11)
    x = apply_fir(design_bandpass(900, 1700, FS, 1025), rng.standard_normal(FS))
    assert preprocess_for_pitch_spectral(x).size == 0
    assert preprocess_for_am(x).size == FS


def test_both_paths_nonempty_on_chirp():
    t = np.arange(FS) / FS
    x = np.sin(2 * np.pi * (3000 * t + 800 * t ** 2)) * (0.6 + 0.4 * np.sin(2 * np.pi * 6 * t))
    assert preprocess_for_pitch_spectral(x).size > 0
    assert preprocess_for_am(x).size == FS


def test_config_validation():
    with pytest.raises(ValueError):
        PreprocessConfig(gate_median_block=4)
    with pytest.raises(ValueError):
        PreprocessConfig(nr_keep=0)
