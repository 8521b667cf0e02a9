"""Dataset manifests and ingestion of WAV files into labeled 5-second clips."""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .audio import CLIP_LENGTH, read_wav, resample_to_8k, segment, to_mono
from .errors import ConfigError, GenreDreamError, ManifestError
from .genre_net import GENRES

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ManifestRecord:
    path: Path
    label: int

    @property
    def genre(self) -> str:
        return GENRES[self.label]


def parse_manifest(text: str, base_dir: Path | str = ".") -> list:
    """Parse ``path,genre`` CSV text. Relative paths resolve against ``base_dir``."""
    base = Path(base_dir)
    rows = csv.reader(text.splitlines())
    header = next(rows, None)
    if header is None or [h.strip() for h in header] != ["path", "genre"]:
        raise ManifestError(f"line 1: expected header 'path,genre', got {header!r}")
    records, seen = [], set()
    for lineno, row in enumerate(rows, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != 2:
            raise ManifestError(f"line {lineno}: expected 2 fields, got {len(row)}")
        raw_path, genre = row[0].strip(), row[1].strip().lower()
        if genre not in GENRES:
            raise ManifestError(f"line {lineno}: unknown genre {row[1].strip()!r}")
        path = Path(raw_path)
        if not path.is_absolute():
            path = base / path
        if path in seen:
            raise ManifestError(f"line {lineno}: duplicate path {raw_path!r}")
        seen.add(path)
        records.append(ManifestRecord(path, GENRES.index(genre)))
    return records


def read_manifest(path) -> list:
    path = Path(path)
    return parse_manifest(path.read_text(encoding="utf-8"), path.parent)


def file_clips(path) -> list:
    """decode -> mono -> 8 kHz -> 40,000-sample clips."""
    return segment(resample_to_8k(to_mono(read_wav(path))))


@dataclass
class Dataset:
    clips: np.ndarray  # [count, CLIP_LENGTH]
    labels: np.ndarray
    per_genre: dict = field(default_factory=dict)
    skipped: list = field(default_factory=list)  # (path, reason)

    def __len__(self) -> int:
        return len(self.labels)

    def summary(self) -> str:
        lines = [f"{g}: {self.per_genre.get(g, 0)} clips" for g in GENRES]
        lines.append(f"total: {len(self)} clips, {len(self.skipped)} files skipped")
        return "\n".join(lines)


def _load(record: ManifestRecord):
    try:
        return record, file_clips(record.path), None
    except (OSError, GenreDreamError) as exc:
        return record, [], f"{type(exc).__name__}: {exc}"


def ingest(manifest, workers: int = 4) -> Dataset:
    """Turn every manifest entry into labeled clips.

    Per-file failures and files shorter than one clip are collected in
    ``Dataset.skipped``; only a run that yields no clips at all raises.
    """
    records = read_manifest(manifest) if not isinstance(manifest, list) else manifest
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        results = list(pool.map(_load, records))

    clips, labels, skipped = [], [], []
    per_genre = {g: 0 for g in GENRES}
    for record, file_clips_, error in results:
        if error is not None:
            skipped.append((str(record.path), error))
            logger.warning("skipping %s: %s", record.path, error)
            continue
        if not file_clips_:
            skipped.append((str(record.path), f"shorter than {CLIP_LENGTH} samples at 8 kHz"))
            continue
        clips.extend(c.samples for c in file_clips_)
        labels.extend([record.label] * len(file_clips_))
        per_genre[record.genre] += len(file_clips_)
    if not clips:
        reasons = "; ".join(f"{p}: {r}" for p, r in skipped) or "manifest is empty"
        raise ConfigError(f"ingest produced no clips ({reasons})")
    return Dataset(np.stack(clips), np.array(labels, dtype=np.int64), per_genre, skipped)
