"""8-bit amplitude quantization (linear or mu-law companded)."""
from __future__ import annotations

import numpy as np

from ..exceptions import ConfigurationError

LEVELS = 256
MU = 255.0
SILENCE = 128
SCHEMES = ("linear", "mu_law")


def _check_scheme(scheme: str) -> None:
    if scheme not in SCHEMES:
        raise ConfigurationError(f"unknown quantization scheme {scheme!r}; expected one of {SCHEMES}")


def compress(x):
    return np.sign(x) * np.log1p(MU * np.abs(x)) / np.log1p(MU)


def expand(y):
    return np.sign(y) * np.expm1(np.abs(y) * np.log1p(MU)) / MU


def quantize(x, scheme: str = "linear"):
    """Map amplitudes in [-1, 1] to levels 0..255 (values outside are clamped)."""
    _check_scheme(scheme)
    x = np.clip(np.asarray(x, dtype=np.float64), -1.0, 1.0)
    if scheme == "mu_law":
        x = compress(x)
    q = np.floor((x + 1.0) / 2.0 * LEVELS)
    q = np.clip(q, 0, LEVELS - 1).astype(np.uint8)
    return q if q.ndim else int(q)


def bin_edges(scheme: str = "linear") -> np.ndarray:
    """Amplitude-domain edges of the 256 bins, shape [257]."""
    _check_scheme(scheme)
    e = np.arange(LEVELS + 1) / LEVELS * 2.0 - 1.0
    return expand(e) if scheme == "mu_law" else e


_CENTERS = {s: None for s in SCHEMES}


def _centers(scheme: str) -> np.ndarray:
    c = _CENTERS[scheme]
    if c is None:
        e = bin_edges(scheme)
        c = _CENTERS[scheme] = 0.5 * (e[:-1] + e[1:])
    return c


def dequantize(levels, scheme: str = "linear"):
    """Levels back to amplitudes at the midpoint of each bin."""
    _check_scheme(scheme)
    lv = np.asarray(levels)
    if lv.size and (lv.min() < 0 or lv.max() > LEVELS - 1):
        raise ValueError("levels must lie in 0..255")
    out = _centers(scheme)[lv.astype(np.intp)]
    return out if out.ndim else float(out)
