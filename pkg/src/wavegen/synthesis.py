"""Autoregressive sampling: feed each drawn level back in as the newest input."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .audio import WORKING_RATE, Waveform, dequantize, load_levels, save_wav
from .audio.quantize import LEVELS, SILENCE
from .exceptions import ConfigurationError, ShapeError
from .models.conditioner import pad_past
from .numerics import log_softmax


def sample_next(logits, temperature: float | None, rng: np.random.Generator | None = None) -> int:
    """Draw one level from ``softmax(logits / temperature)``.

    ``temperature=None`` is argmax mode (ties go to the lowest level).
    """
    z = np.asarray(logits, dtype=np.float64)
    if z.shape != (LEVELS,):
        raise ShapeError(f"expected {LEVELS} logits, got shape {z.shape}")
    if not np.all(np.isfinite(z)):
        raise ValueError("logits must be finite")
    if temperature is None:
        return int(np.argmax(z))
    if not temperature > 0:
        raise ConfigurationError(f"temperature must be > 0 (or None for argmax), got {temperature}")
    if rng is None:
        raise ConfigurationError("probabilistic sampling needs an rng")
    p = np.exp(log_softmax(z / temperature))
    # inverse-CDF draw; the final bin absorbs rounding in the cumulative sum
    u = rng.random()
    return int(min(np.searchsorted(np.cumsum(p), u, side="right"), LEVELS - 1))


@dataclass
class GenerationSpec:
    """Seed material and sampling settings.

    ``seed_source`` is ``"noise"`` (uniform random levels), ``"silence"``,
    a path to an audio snippet, or an array of levels.  ``seed_length`` is
    the number of seed levels drawn for noise/silence.
    """

    n_samples: int
    seed_source: object = "noise"
    temperature: float | None = 1.0
    rng_seed: int = 0
    seed_length: int = 1600
    include_seed: bool = True

    def __post_init__(self):
        if self.n_samples < 0:
            raise ConfigurationError(f"n_samples must be >= 0, got {self.n_samples}")
        if self.temperature is not None and not self.temperature > 0:
            raise ConfigurationError(f"temperature must be > 0, got {self.temperature}")
        if self.seed_length < 1:
            raise ConfigurationError("seed_length must be >= 1")


@dataclass
class Generation:
    levels: np.ndarray
    waveform: Waveform
    seed_len: int


def seed_levels(spec: GenerationSpec, scheme: str, rng: np.random.Generator) -> np.ndarray:
    src = spec.seed_source
    if isinstance(src, str) and src == "noise":
        return rng.integers(0, LEVELS, size=spec.seed_length).astype(np.uint8)
    if isinstance(src, str) and src == "silence":
        return np.full(spec.seed_length, SILENCE, dtype=np.uint8)
    if isinstance(src, (str, Path)):
        lv = load_levels(src, scheme)
    else:
        lv = np.asarray(src)
        if lv.size and (not np.issubdtype(lv.dtype, np.integer) or lv.min() < 0 or lv.max() >= LEVELS):
            raise ShapeError("seed levels must be integers in 0..255")
    lv = np.asarray(lv, dtype=np.uint8).reshape(-1)
    if lv.size < 1:
        raise ShapeError("seed snippet must contain at least one sample")
    return lv


def generate(net, spec: GenerationSpec,
             progress: Callable[[int, int], None] | None = None) -> Generation:
    """Run the sampling loop for ``spec.n_samples`` steps.

    The model sees the last ``context`` levels, left-padded with the
    silence level; a conditioned model additionally sees the
    ``past_len`` levels preceding that window, which slide along with
    generation.  The full window is recomputed at every step.
    """
    rng = np.random.default_rng(spec.rng_seed)
    seed = seed_levels(spec, net.scheme, rng)
    T, P = net.context, net.past_len
    buf = np.empty(len(seed) + spec.n_samples, dtype=np.uint8)
    buf[:len(seed)] = seed
    n = len(seed)
    for i in range(spec.n_samples):
        window = pad_past(buf[max(0, n - T):n], T, SILENCE)
        past = None
        if P:
            past = pad_past(buf[max(0, n - T - P):max(0, n - T)], P, SILENCE)
        z = net.logits(window, past)[-1]
        buf[n] = sample_next(z, spec.temperature, rng)
        n += 1
        if progress is not None:
            progress(i + 1, spec.n_samples)
    out = buf if spec.include_seed else buf[len(seed):]
    return Generation(out.copy(), Waveform(dequantize(out, net.scheme), WORKING_RATE), len(seed))


def write_generation(gen: Generation, wav_path) -> tuple[Path, Path]:
    """16-bit WAV plus a text file of the emitted levels, one per line."""
    wav_path = Path(wav_path)
    save_wav(wav_path, gen.waveform)
    levels_path = wav_path.with_suffix(".levels.txt")
    levels_path.write_text("".join(f"{int(v)}\n" for v in gen.levels))
    return wav_path, levels_path
