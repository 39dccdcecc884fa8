import csv
from pathlib import Path

import numpy as np
import pytest
from scipy.io import wavfile

FS = 44100

_ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, passed, detail: str) -> None:
    """``passed`` is True, False or None (skipped)."""
    status = "SKIP" if passed is None else ("PASS" if passed else "FAIL")
    _ACCEPTANCE_LINES.append(f"criterion {number:>2}: {status}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split(":")[0].split()[1])):
        terminalreporter.write_line(line)


def tone(freq, seconds=1.0, amp=1.0, phase=0.0, fs=FS):
    t = np.arange(int(round(seconds * fs))) / fs
    return amp * np.sin(2 * np.pi * freq * t + phase)


def am_tone(carrier, rate, depth=1.0, seconds=1.0, fs=FS):
    t = np.arange(int(round(seconds * fs))) / fs
    return (1.0 + depth * np.sin(2 * np.pi * rate * t)) * np.sin(2 * np.pi * carrier * t) / (1.0 + depth)


def write_wav(path, samples, fs=FS):
    pcm = np.clip(np.round(np.asarray(samples) * 32767), -32768, 32767).astype(np.int16)
    wavfile.write(path, fs, pcm)


def synth_recording(rng, bird: bool, seconds=5.0):
    """Background noise plus, for bird clips, a few trilled chirps. Returns (samples, events)."""
    n = int(seconds * FS)
    noise = rng.standard_normal(n) * 0.02
    events = []
    x = noise
    if bird:
        for _ in range(int(rng.integers(1, 3))):
            start = float(np.round(rng.uniform(0.0, seconds - 1.2), 2))
            dur = float(np.round(rng.uniform(0.6, 1.1), 2))
            carrier = rng.uniform(2500, 5000)
            rate = int(rng.integers(3, 9))
            a, b = int(start * FS), int((start + dur) * FS)
            t = np.arange(b - a) / FS
            x[a:b] += 0.4 * (1 + np.sin(2 * np.pi * rate * t)) / 2 * np.sin(2 * np.pi * carrier * t)
            events.append((start, dur, "Sylatr_song"))
    return np.clip(x, -1, 1), sorted(events)


def make_corpus(root: Path, n_bird=8, n_empty=4, seed=0):
    rng = np.random.default_rng(seed)
    audio, labels = root / "audio", root / "labels"
    audio.mkdir(parents=True, exist_ok=True)
    labels.mkdir(parents=True, exist_ok=True)
    rows = []
    for k in range(n_bird + n_empty):
        rid = f"rec{k:03d}"
        bird = k < n_bird
        x, events = synth_recording(rng, bird)
        write_wav(audio / f"{rid}.wav", x)
        if bird:
            with open(labels / f"{rid}.csv", "w", newline="") as fh:
                w = csv.writer(fh)
                for ev in events:
                    w.writerow(ev)
        rows.append((rid, 0 if bird else 1))
    with open(root / "manifest.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["recording_id", "no_bird"])
        w.writerows(rows)
    return root


@pytest.fixture(scope="session")
def corpus(tmp_path_factory):
    return make_corpus(tmp_path_factory.mktemp("corpus"))
