"""WAV ingestion/writing and corpus manifests."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from ..exceptions import FormatError, SampleRateError

log = logging.getLogger(__name__)

WORKING_RATE = 16000


@dataclass
class Waveform:
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise ValueError(f"waveform must be mono 1-D, got shape {self.samples.shape}")
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


def _pcm_to_float(data: np.ndarray) -> np.ndarray:
    if data.dtype == np.uint8:
        return (data.astype(np.float64) - 128.0) / 128.0
    if data.dtype == np.int16:
        return data.astype(np.float64) / 32768.0
    if data.dtype == np.int32:
        # 24-bit PCM arrives left-justified in int32
        return data.astype(np.float64) / 2147483648.0
    if data.dtype in (np.float32, np.float64):
        return data.astype(np.float64)
    raise FormatError(f"unsupported PCM sample type {data.dtype}")


def load_audio(path, min_rate: int = WORKING_RATE) -> Waveform:
    """Read a PCM WAV file as mono float samples.

    Channels are averaged.  Float files whose peak exceeds 1 are
    peak-normalized.  Files sampled below ``min_rate`` are rejected since
    they would need upsampling.
    """
    path = Path(path)
    try:
        rate, data = wavfile.read(path)
    except (ValueError, EOFError) as exc:
        raise FormatError(f"{path}: {exc}") from exc
    if rate < min_rate:
        raise SampleRateError(f"{path}: sample rate {rate} Hz is below {min_rate} Hz")
    x = _pcm_to_float(data)
    if x.ndim == 2:
        x = x.mean(axis=1)
    peak = np.abs(x).max() if x.size else 0.0
    if peak > 1.0:
        x = x / peak
    return Waveform(x, int(rate))


def save_wav(path, w: Waveform) -> None:
    """Write 16-bit PCM."""
    pcm = np.clip(np.round(w.samples * 32768.0), -32768, 32767).astype(np.int16)
    wavfile.write(Path(path), int(w.sample_rate), pcm)


@dataclass
class Manifest:
    train: list[Path]
    test: list[Path]

    def __len__(self) -> int:
        return len(self.train) + len(self.test)


def read_manifest(path) -> Manifest:
    """Parse a split manifest.

    One entry per line: ``train <path>``, ``test <path>``, or a bare path
    (counted as train).  ``#`` starts a comment.  Relative paths resolve
    against the manifest's directory.
    """
    path = Path(path)
    base = path.parent
    train, test = [], []
    for lineno, raw in enumerate(path.read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split(None, 1)
        if len(parts) == 2 and parts[0].lower() in ("train", "test"):
            split, p = parts[0].lower(), parts[1].strip()
        else:
            split, p = "train", line
        fp = Path(p)
        if not fp.is_absolute():
            fp = base / fp
        (train if split == "train" else test).append(fp)
    return Manifest(train, test)


def write_manifest(path, train, test=()) -> None:
    lines = [f"train {p}" for p in train] + [f"test {p}" for p in test]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))
