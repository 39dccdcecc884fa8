import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from birdamps.dsp import design_bandpass, power_spectrum
from birdamps.features import (
    AMPS_NAMES,
    AmBandResult,
    AmConfig,
    FeatureConfig,
    YinConfig,
    am_band_analysis,
    am_envelope,
    am_features,
    assemble_amps,
    extract_amps,
    extract_mfcc,
    mfcc_for_window,
    pitch_moments,
    spectral_features,
    yin_pitch_track,
)
from birdamps.features.am import prominence, select_am
from birdamps.features.mfcc import LOG_FLOOR, hz_to_mel, mel_filterbank, mel_to_hz
from birdamps.features.pitch import cmnd, difference_function

from conftest import FS, am_tone, tone

N = np.arange(100)


# ---- pitch -------------------------------------------------------------

def test_yin_440_every_frame():
    track = yin_pitch_track(tone(440))
    assert track.values.shape == (50,)
    assert np.all(np.abs(track.values - 440) <= 1.0)


def test_yin_silence_and_empty():
    assert np.isnan(yin_pitch_track(np.zeros(FS)).values).all()
    assert np.isnan(yin_pitch_track(np.zeros(0)).values).all()


def test_yin_white_noise_mostly_unvoiced():
    x = np.random.default_rng(0).standard_normal(FS)
    track = yin_pitch_track(x)
    assert np.mean(np.isnan(track.values)) >= 0.9


def test_difference_function_bruteforce():
    rng = np.random.default_rng(1)
    frame = rng.standard_normal(300)
    tau_max = 120
    d = difference_function(frame, tau_max)
    w = frame.size - tau_max
    ref = [sum((frame[j] - frame[j + tau]) ** 2 for j in range(w)) for tau in range(tau_max + 1)]
    np.testing.assert_allclose(d, ref, rtol=1e-10, atol=1e-10)
    dn = cmnd(d)
    assert dn[0] == 1.0
    for tau in (1, 17, 120):
        assert dn[tau] == pytest.approx(d[tau] / (np.sum(d[1:tau + 1]) / tau))


def test_pitch_moments_examples():
    assert pitch_moments(np.full(50, 500.0)) == (500.0, 0.0, 0.0, 0.0)
    vals = np.full(50, np.nan)
    vals[3], vals[20] = 400.0, 600.0
    mean, var, skew, _ = pitch_moments(vals)
    assert (mean, var, skew) == (500.0, 10000.0, 0.0)
    assert pitch_moments(np.full(50, np.nan)) == (0.0, 0.0, 0.0, 0.0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(min_value=200, max_value=10000), min_size=2, max_size=50), st.randoms())
def test_pitch_moments_order_invariant(values, rnd):
    shuffled = list(values)
    rnd.shuffle(shuffled)
    np.testing.assert_allclose(pitch_moments(np.array(values)), pitch_moments(np.array(shuffled)),
                               rtol=1e-9, atol=1e-6)


# ---- spectral ----------------------------------------------------------

def test_spectral_tone():
    cm, cv, rm, _ = spectral_features(tone(4000))
    bin_hz = FS / 882
    assert abs(cm - 4000) <= bin_hz
    assert abs(rm - 4000) <= bin_hz
    assert cv < 1.0


def test_rolloff_interpolates_within_bin():
    from birdamps.features.spectral import centroid_rolloff
    power = np.array([[0.0, 1.0, 1.0, 0.0], [0.0, 0.0, 4.0, 0.0]])
    freqs = np.array([0.0, 1.0, 2.0, 3.0])
    centroid, rolloff = centroid_rolloff(power, freqs, 0.5)
    # half the energy sits below the top edge of bin 1; bin 2 alone crosses half-way through
    np.testing.assert_allclose(centroid, [1.5, 2.0])
    np.testing.assert_allclose(rolloff, [1.5, 2.0])
    _, r85 = centroid_rolloff(power, freqs, 0.85)
    np.testing.assert_allclose(r85, [1.5 + 0.7, 1.5 + 0.85])


def test_spectral_silence_and_short():
    assert spectral_features(np.zeros(FS)) == (0.0, 0.0, 0.0, 0.0)
    assert spectral_features(np.zeros(0)) == (0.0, 0.0, 0.0, 0.0)


def test_spectral_white_noise_centroid_matches_filter_response():
    fir = design_bandpass(800, 16000, FS, 513)
    from birdamps.dsp import apply_fir
    x = apply_fir(fir, np.random.default_rng(2).standard_normal(4 * FS))
    cm, _, _, _ = spectral_features(x)
    # oracle: power-weighted mean frequency of |H(f)|^2 on a dense grid
    f = np.linspace(0, FS / 2, 20001)
    h2 = np.abs(fir.response(f)) ** 2
    expected = np.sum(f * h2) / np.sum(h2)
    assert cm == pytest.approx(expected, rel=0.03)


# ---- AM ----------------------------------------------------------------

def test_envelope_of_steady_tone():
    fir = design_bandpass(2000, 8000, FS, 513)
    env = am_envelope(tone(4000, amp=0.7), fir)
    assert env.shape == (100,)
    np.testing.assert_allclose(env[2:-2], 0.7 / np.sqrt(2), rtol=0.01)


def test_envelope_silence_and_short():
    fir = design_bandpass(2000, 8000, FS, 513)
    assert not np.any(am_envelope(np.zeros(FS), fir))
    with pytest.raises(ValueError):
        am_envelope(np.zeros(FS - 1), fir)


def test_envelope_follows_modulation():
    fir = design_bandpass(2000, 8000, FS, 513)
    env = am_envelope(am_tone(4000, 4), fir)
    p = power_spectrum(env - env.mean())
    assert int(np.argmax(p)) == 4


def test_band_analysis_constant_envelope():
    r = am_band_analysis(np.full(100, 0.3))
    assert not r.detected and r.triple == (0.0, 0.0, 0.0)


def test_band_analysis_flat_random_spectrum():
    rng = np.random.default_rng(3)
    # unit magnitude in every non-DC bin, random phases
    spec = np.exp(2j * np.pi * rng.uniform(size=51))
    spec[0] = 0.0
    spec[50] = 1.0
    env = 0.5 + 0.01 * np.fft.irfft(spec, 100)
    p = power_spectrum(env - env.mean())
    for k in range(4, 11):
        assert prominence(p, k) == pytest.approx(1.0)
    assert not am_band_analysis(env).detected


def test_prominence_of_noise_averages_near_one():
    rng = np.random.default_rng(4)
    qs = []
    for _ in range(500):
        env = rng.uniform(0, 1, 100)
        qs.append(prominence(power_spectrum(env - env.mean()), 6))
    assert np.mean(qs) == pytest.approx(1.0, abs=0.1)


def test_band_analysis_pure_sinusoid():
    r = am_band_analysis(0.5 + 0.4 * np.sin(2 * np.pi * 4 * N / 100))
    assert r.detected and r.frequency == 4.0
    # all power in one bin: peak over the 7-bin mean is exactly 7
    assert r.prominence == pytest.approx(7.0)
    assert r.kept_harmonics == (1,)


def test_band_analysis_strong_harmonic_kept():
    a, b = 0.3 * np.sin(2 * np.pi * 4 * N / 100), 0.1 * np.sin(2 * np.pi * 8 * N / 100)
    r = am_band_analysis(0.5 + a + b)
    assert r.detected and r.frequency == 4.0
    assert r.kept_harmonics == (1, 2)
    span = np.percentile(a + b, 95) - np.percentile(a + b, 5)
    assert r.depth == pytest.approx(span, abs=1e-12)


def test_band_analysis_weak_fundamental_skips_harmonics():
    env = (0.5 + 0.3 * np.sin(2 * np.pi * 4 * N / 100) + 0.2 * np.sin(2 * np.pi * 5 * N / 100)
           + 0.1 * np.sin(2 * np.pi * 8 * N / 100))
    r = am_band_analysis(env)
    assert r.detected and 3 <= r.prominence < 6
    assert r.kept_harmonics == (1,)


def test_band_analysis_depth_threshold():
    r = am_band_analysis(0.5 + 0.004 * np.sin(2 * np.pi * 4 * N / 100))
    assert not r.detected


def test_band_analysis_wrong_length():
    with pytest.raises(ValueError):
        am_band_analysis(np.ones(99))


@settings(max_examples=40, deadline=None)
@given(st.floats(min_value=1e-3, max_value=1e3), st.integers(min_value=0, max_value=10_000))
def test_prominence_scale_invariant_depth_linear(c, seed):
    rng = np.random.default_rng(seed)
    rate = int(rng.integers(1, 11))
    env = 0.5 + 0.3 * np.sin(2 * np.pi * rate * N / 100) + 0.05 * rng.standard_normal(100)
    a, b = am_band_analysis(env), am_band_analysis(c * env, AmConfig(depth_threshold=0.0))
    if a.detected:
        assert b.prominence == pytest.approx(a.prominence, rel=1e-9)
        assert b.depth == pytest.approx(c * a.depth, rel=1e-9)


def test_unmodulated_carriers_not_detected():
    for carrier in (1000, 2000, 4000, 8000):
        assert not any(r.detected for r in am_features(tone(carrier)))


def test_select_am_rules():
    none = [AmBandResult(i, False) for i in range(4)]
    assert select_am(none) == (0.0, 0.0, 0.0)
    one = list(none)
    one[2] = AmBandResult(2, True, 5.0, 4.2, 0.3)
    assert select_am(one) == (5.0, 4.2, 0.3)
    two = list(none)
    two[1] = AmBandResult(1, True, 3.0, 3.5, 0.2)
    two[3] = AmBandResult(3, True, 7.0, 6.0, 0.4)
    assert select_am(two) == (7.0, 6.0, 0.4)
    tie = list(none)
    tie[0] = AmBandResult(0, True, 2.0, 5.0, 0.1)
    tie[3] = AmBandResult(3, True, 9.0, 5.0, 0.9)
    assert select_am(tie) == (2.0, 5.0, 0.1)


def test_assemble_requires_four_bands():
    with pytest.raises(ValueError):
        assemble_amps((0,) * 4, (0,) * 4, [AmBandResult(0, False)])


def test_assemble_sanitises_non_finite():
    v = assemble_amps((np.nan, 1.0, np.inf, 0.0), (1, 2, 3, 4), [AmBandResult(i, False) for i in range(4)])
    assert np.all(np.isfinite(v.as_array()))


# ---- whole window ------------------------------------------------------

def test_extract_amps_silence():
    v = extract_amps(np.zeros(FS))
    assert np.array_equal(v.as_array(), np.zeros(11))


def test_extract_amps_am_tone():
    v = extract_amps(am_tone(3000, 4))
    assert len(AMPS_NAMES) == 11
    assert v.pitch_mean == pytest.approx(3000, rel=0.01)
    assert v.am_frequency == 4.0
    assert v.am_depth > 0


@settings(max_examples=8, deadline=None)
@given(st.integers(min_value=0, max_value=10_000), st.floats(min_value=0.0, max_value=2.0))
def test_extract_amps_finite_and_deterministic(seed, gain):
    rng = np.random.default_rng(seed)
    x = gain * rng.standard_normal(FS) * (rng.uniform() < 0.8)
    a, b = extract_amps(x).as_array(), extract_amps(x).as_array()
    assert a.shape == (11,) and np.all(np.isfinite(a))
    assert np.array_equal(a, b)


# ---- MFCC --------------------------------------------------------------

def test_mel_round_trip_and_bank():
    f = np.array([0.0, 700.0, 4000.0, 22050.0])
    np.testing.assert_allclose(mel_to_hz(hz_to_mel(f)), f, atol=1e-9)
    bank = mel_filterbank(26, 882, FS)
    assert bank.shape == (26, 442)
    assert np.all(bank.max(axis=1) > 0) and np.all(bank <= 1.0)


def test_mfcc_silence():
    v = extract_mfcc(np.zeros(FS))
    assert v.shape == (26,)
    assert v[0] == pytest.approx(np.log(LOG_FLOOR) * np.sqrt(26))
    np.testing.assert_allclose(v[1:13], 0.0, atol=1e-9)
    np.testing.assert_allclose(v[13:], 0.0, atol=1e-12)


def test_mfcc_gain_shifts_only_c0():
    x = np.random.default_rng(4).standard_normal(FS) * 0.1
    a, b = extract_mfcc(x), extract_mfcc(2 * x)
    # a gain g adds log(g) to every log energy; the orthonormal DCT maps that onto c0 only
    assert b[0] - a[0] == pytest.approx(np.log(2) * np.sqrt(26), rel=1e-9)
    np.testing.assert_allclose(b[1:13], a[1:13], atol=1e-9)
    np.testing.assert_allclose(b[13:], a[13:], rtol=1e-9, atol=1e-9)


def test_mfcc_for_window_shape():
    v = mfcc_for_window(tone(3000))
    assert v.shape == (26,) and np.all(np.isfinite(v))


def test_feature_config_defaults():
    cfg = FeatureConfig()
    assert cfg.yin == YinConfig() and cfg.am.prominence_cutoff == 3.0
