"""Recording ingest, annotation parsing and 1-second window labelling."""
from __future__ import annotations

import csv
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np
from scipy.io import wavfile

log = logging.getLogger(__name__)

SAMPLE_RATE = 44100
CLIP_SECONDS = 5.0

BIRD_PRESENT = 1
BIRD_ABSENT = 0

# NIPS4Bplus tags use Genus+species abbreviations; anything matching these is not a bird
DEFAULT_NON_BIRD_PATTERNS = (r"human", r"noise", r"insect", r"wind", r"rain", r"unknown", r"^empty$")


class DatasetError(ValueError):
    """Raised for unreadable audio, malformed annotations or manifest problems."""


@dataclass(frozen=True)
class Recording:
    id: str
    samples: np.ndarray
    sample_rate: int = SAMPLE_RATE

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass(frozen=True)
class AnnotationEvent:
    start: float
    duration: float
    tag: str

    @property
    def end(self) -> float:
        return self.start + self.duration


@dataclass(frozen=True)
class AnalysisWindow:
    recording_id: str
    index: int
    start: float
    samples: np.ndarray = field(repr=False)
    label: int | None = None

    @property
    def end(self) -> float:
        return self.start + self.samples.size / SAMPLE_RATE


@dataclass(frozen=True)
class LabeledDataset:
    windows: tuple[AnalysisWindow, ...]

    @property
    def positive_fraction(self) -> float:
        if not self.windows:
            return 0.0
        return sum(w.label == BIRD_PRESENT for w in self.windows) / len(self.windows)

    @property
    def labels(self) -> np.ndarray:
        return np.array([w.label for w in self.windows], dtype=int)

    @property
    def groups(self) -> list[str]:
        return [w.recording_id for w in self.windows]

    def __len__(self):
        return len(self.windows)


def load_recording(path, recording_id: str | None = None, expected_rate: int = SAMPLE_RATE) -> Recording:
    path = Path(path)
    try:
        rate, data = wavfile.read(path)
    except Exception as exc:
        raise DatasetError(f"{path}: unreadable WAV file ({exc})") from exc
    if data.ndim > 1 and data.shape[1] > 1:
        raise DatasetError(f"{path}: multichannel unsupported ({data.shape[1]} channels)")
    data = data.reshape(-1)
    if data.dtype == np.int16:
        samples = data.astype(float) / 32768.0
    elif data.dtype == np.int32:
        samples = data.astype(float) / 2147483648.0
    elif data.dtype in (np.float32, np.float64):
        samples = data.astype(float)
        if samples.size and np.max(np.abs(samples)) > 1.0:
            raise DatasetError(f"{path}: float samples exceed [-1, 1]")
    else:
        raise DatasetError(f"{path}: unsupported encoding {data.dtype}")
    if rate != expected_rate:
        raise DatasetError(f"{path}: sample rate {rate} Hz, expected {expected_rate} Hz")
    if samples.size == 0:
        raise DatasetError(f"{path}: no samples")
    return Recording(recording_id or path.stem, samples, int(rate))


def parse_annotations(path) -> list[AnnotationEvent]:
    """Read ``start,duration,tag`` rows; blank lines are skipped."""
    events = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), 1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < 3:
                raise DatasetError(f"{path}:{lineno}: expected start,duration,tag")
            try:
                start, duration = float(row[0]), float(row[1])
            except ValueError as exc:
                raise DatasetError(f"{path}:{lineno}: non-numeric start/duration {row[:2]}") from exc
            if duration <= 0:
                raise DatasetError(f"{path}:{lineno}: duration must be positive, got {duration}")
            if start < 0:
                raise DatasetError(f"{path}:{lineno}: negative start {start}")
            events.append(AnnotationEvent(start, duration, ",".join(row[2:]).strip()))
    events.sort(key=lambda e: e.start)
    return events


def window_recording(rec: Recording, window_len: float = 1.0, hop: float = 0.5,
                     target_windows: int = 9, truncate: bool = False) -> list[AnalysisWindow]:
    """Fixed ``target_windows`` windows starting at ``k * hop``; short clips are zero-padded."""
    if not (window_len > hop > 0):
        raise ValueError(f"need window_len > hop > 0, got {window_len}, {hop}")
    rate = rec.sample_rate
    win = int(round(window_len * rate))
    step = int(round(hop * rate))
    total = (target_windows - 1) * step + win
    x = rec.samples
    if x.size > total + 1:
        if not truncate:
            raise DatasetError(
                f"{rec.id}: {rec.duration:.3f} s exceeds the {total / rate:.1f} s clip length")
        x = x[:total]
    elif x.size < total:
        x = np.concatenate([x, np.zeros(total - x.size)])
    x = x[:total]
    return [AnalysisWindow(rec.id, k, k * step / rate, x[k * step:k * step + win])
            for k in range(target_windows)]


def tile_windows(rec: Recording, window_len: float = 1.0, hop: float = 0.5) -> list[AnalysisWindow]:
    """Windows over an arbitrary-length recording: ``floor((T - window_len) / hop) + 1`` of them."""
    rate = rec.sample_rate
    win = int(round(window_len * rate))
    step = int(round(hop * rate))
    x = rec.samples
    if x.size < win:
        x = np.concatenate([x, np.zeros(win - x.size)])
    count = (x.size - win) // step + 1
    return [AnalysisWindow(rec.id, k, k * step / rate, x[k * step:k * step + win]) for k in range(count)]


def make_tag_predicate(non_bird: Iterable[str] = DEFAULT_NON_BIRD_PATTERNS) -> Callable[[str], bool]:
    patterns = [re.compile(p, re.IGNORECASE) for p in non_bird]

    def is_bird(tag: str) -> bool:
        return bool(tag.strip()) and not any(p.search(tag) for p in patterns)
    return is_bird


def label_windows(windows: Sequence[AnalysisWindow], events: Sequence[AnnotationEvent],
                  bird_tags: Callable[[str], bool] | None = None,
                  overlap_min: float = 0.0) -> list[AnalysisWindow]:
    """Mark a window present when a bird event overlaps it by more than ``overlap_min`` seconds."""
    bird_tags = bird_tags or make_tag_predicate()
    birds = [e for e in events if bird_tags(e.tag)]
    out = []
    for w in windows:
        present = any(min(w.end, e.end) - max(w.start, e.start) > overlap_min for e in birds)
        out.append(AnalysisWindow(w.recording_id, w.index, w.start, w.samples,
                                  BIRD_PRESENT if present else BIRD_ABSENT))
    return out


@dataclass(frozen=True)
class ManifestEntry:
    id: str
    no_bird: bool = False


def read_manifest(path) -> list[ManifestEntry]:
    """CSV with a ``recording_id`` column and an optional ``no_bird`` column (1/true/yes)."""
    entries = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "recording_id" not in reader.fieldnames:
            raise DatasetError(f"{path}: manifest needs a recording_id column")
        for row in reader:
            rid = (row["recording_id"] or "").strip()
            if not rid:
                continue
            flag = str(row.get("no_bird") or "").strip().lower() in ("1", "true", "yes", "y")
            entries.append(ManifestEntry(rid, flag))
    return sorted(entries, key=lambda e: e.id)


@dataclass(frozen=True)
class DatasetLayout:
    audio_dir: Path
    labels_dir: Path
    manifest: Path
    audio_pattern: str = "{id}.wav"
    labels_pattern: str = "{id}.csv"

    def audio_path(self, rid: str) -> Path:
        return Path(self.audio_dir) / self.audio_pattern.format(id=rid)

    def labels_path(self, rid: str) -> Path:
        return Path(self.labels_dir) / self.labels_pattern.format(id=rid)


def load_events(layout: DatasetLayout, entry: ManifestEntry) -> list[AnnotationEvent]:
    path = layout.labels_path(entry.id)
    if path.exists():
        return parse_annotations(path)
    if entry.no_bird:
        return []
    raise DatasetError(f"{entry.id}: missing annotation file {path}")


def iter_recording_windows(layout: DatasetLayout, bird_tags=None, truncate: bool = False,
                           entries: Sequence[ManifestEntry] | None = None
                           ) -> Iterator[tuple[ManifestEntry, list[AnalysisWindow]]]:
    """Yield labelled windows one recording at a time, in manifest id order."""
    entries = read_manifest(layout.manifest) if entries is None else entries
    for entry in entries:
        audio = layout.audio_path(entry.id)
        if not audio.exists():
            raise DatasetError(f"{entry.id}: missing audio file {audio}")
        rec = load_recording(audio, entry.id)
        events = load_events(layout, entry)
        yield entry, label_windows(window_recording(rec, truncate=truncate), events, bird_tags)


def build_dataset(audio_dir, labels_dir, manifest, bird_tags=None, truncate: bool = False,
                  audio_pattern: str = "{id}.wav", labels_pattern: str = "{id}.csv") -> LabeledDataset:
    layout = DatasetLayout(Path(audio_dir), Path(labels_dir), Path(manifest), audio_pattern, labels_pattern)
    windows: list[AnalysisWindow] = []
    for _, ws in iter_recording_windows(layout, bird_tags, truncate):
        windows.extend(ws)
    return LabeledDataset(tuple(windows))


WINDOW_COLUMNS = ("recording_id", "window_index", "start_sec", "label")


def _write_windows(windows, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(WINDOW_COLUMNS)
    for w in windows:
        writer.writerow([w.recording_id, w.index, f"{w.start:.3f}", w.label])


def write_windows_csv(windows: Iterable[AnalysisWindow], path) -> None:
    """Write the window index to a path or an open text stream."""
    if hasattr(path, "write"):
        _write_windows(windows, path)
        return
    with open(path, "w", newline="") as fh:
        _write_windows(windows, fh)


def read_windows_csv(path) -> list[tuple[str, int, float, int]]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return [(r["recording_id"], int(r["window_index"]), float(r["start_sec"]), int(r["label"]))
                for r in reader]
