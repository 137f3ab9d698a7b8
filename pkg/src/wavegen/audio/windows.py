"""Training windows, augmentation and the on-disk window shard format."""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from ..exceptions import FormatError
from .io import Waveform

CONTEXT = 1600
PAST = 4000
STRIDE = 800


@dataclass
class TrainingWindow:
    input: np.ndarray
    target: np.ndarray
    past: np.ndarray | None = None


def make_windows(q, T_ctx: int = CONTEXT, stride: int = STRIDE, with_past: bool = False,
                 past_len: int = PAST) -> Iterator[TrainingWindow]:
    """Yield (context, next-sample target) pairs from a level sequence.

    Window starts are ``s = k * stride`` (offset by ``past_len`` when the
    preceding ``past_len`` levels are requested).  Sequences too short for
    one window yield nothing.
    """
    q = np.asarray(q)
    first = past_len if with_past else 0
    s = first
    while s + T_ctx + 1 <= len(q):
        yield TrainingWindow(
            q[s:s + T_ctx],
            q[s + 1:s + T_ctx + 1],
            q[s - past_len:s] if with_past else None,
        )
        s += stride


def window_starts(n: int, T_ctx: int = CONTEXT, stride: int = STRIDE, with_past: bool = False,
                  past_len: int = PAST) -> np.ndarray:
    first = past_len if with_past else 0
    last = n - T_ctx - 1
    if last < first:
        return np.zeros(0, dtype=np.int64)
    return np.arange(first, last + 1, stride)


@dataclass
class WindowSet:
    """Windows stored as contiguous level spans.

    Each row of ``spans`` holds ``past_len + context + 1`` levels; inputs,
    targets and the optional past are views into it.
    """

    spans: np.ndarray
    context: int
    past_len: int = 0
    scheme: str = "linear"

    def __post_init__(self):
        self.spans = np.asarray(self.spans, dtype=np.uint8)
        if self.spans.ndim != 2:
            self.spans = self.spans.reshape(-1, self.past_len + self.context + 1)
        if self.spans.shape[1] != self.past_len + self.context + 1:
            raise ValueError(
                f"span width {self.spans.shape[1]} != past {self.past_len} + context {self.context} + 1"
            )

    def __len__(self) -> int:
        return self.spans.shape[0]

    @property
    def inputs(self) -> np.ndarray:
        return self.spans[:, self.past_len:self.past_len + self.context]

    @property
    def targets(self) -> np.ndarray:
        return self.spans[:, self.past_len + 1:]

    @property
    def past(self) -> np.ndarray | None:
        return self.spans[:, :self.past_len] if self.past_len else None

    def subset(self, idx) -> "WindowSet":
        return WindowSet(self.spans[idx], self.context, self.past_len, self.scheme)

    def without_past(self) -> "WindowSet":
        return WindowSet(self.spans[:, self.past_len:], self.context, 0, self.scheme)

    @classmethod
    def from_sequences(cls, seqs: Iterable[np.ndarray], context: int = CONTEXT, stride: int = STRIDE,
                       past_len: int = 0, scheme: str = "linear") -> "WindowSet":
        width = past_len + context + 1
        rows = []
        for q in seqs:
            q = np.asarray(q, dtype=np.uint8)
            for s in window_starts(len(q), context, stride, past_len > 0, past_len):
                rows.append(q[s - past_len:s + context + 1])
        spans = np.stack(rows) if rows else np.zeros((0, width), dtype=np.uint8)
        return cls(spans, context, past_len, scheme)

    def split(self, fraction: float, rng: np.random.Generator) -> tuple["WindowSet", "WindowSet"]:
        """Hold out ``fraction`` of the windows (at least one when possible)."""
        n = len(self)
        n_val = int(round(n * fraction))
        if fraction > 0 and n > 1:
            n_val = min(max(n_val, 1), n - 1)
        perm = rng.permutation(n)
        val, tr = np.sort(perm[:n_val]), np.sort(perm[n_val:])
        return self.subset(tr), self.subset(val)


def augment(w: Waveform, rng: np.random.Generator, gain: float | None = None,
            shift: int | None = None) -> Waveform:
    """Random attenuation and head-trimming time shift.

    ``gain`` ~ U[0.5, 1.0]; ``shift`` ~ U{0..sample_rate/10} samples dropped
    from the start.  Explicit values bypass the draws.
    """
    if gain is None:
        gain = float(rng.uniform(0.5, 1.0))
    if shift is None:
        shift = int(rng.integers(0, w.sample_rate // 10 + 1))
    return Waveform(w.samples[shift:] * gain, w.sample_rate)


_LEN = struct.Struct("<I")


def write_shard(path, spans: Iterable[np.ndarray]) -> int:
    """Write records of ``u32 length`` + raw u8 levels; returns the record count."""
    n = 0
    with open(path, "wb") as f:
        for rec in spans:
            rec = np.asarray(rec, dtype=np.uint8)
            f.write(_LEN.pack(len(rec)))
            f.write(rec.tobytes())
            n += 1
    return n


def read_shard(path) -> list[np.ndarray]:
    buf = Path(path).read_bytes()
    out, pos = [], 0
    while pos < len(buf):
        if pos + 4 > len(buf):
            raise FormatError(f"{path}: truncated record header at byte {pos}")
        (n,) = _LEN.unpack_from(buf, pos)
        pos += 4
        if pos + n > len(buf):
            raise FormatError(f"{path}: record at byte {pos - 4} claims {n} bytes, file ends early")
        out.append(np.frombuffer(buf, dtype=np.uint8, count=n, offset=pos).copy())
        pos += n
    return out
