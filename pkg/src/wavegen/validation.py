"""Input checks shared by the estimator front-end."""
from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array

from .audio.quantize import LEVELS, SCHEMES, quantize
from .exceptions import ConfigurationError, ShapeError


def check_scheme(scheme: str) -> str:
    if scheme not in SCHEMES:
        raise ConfigurationError(f"unknown quantization scheme {scheme!r}; choose from {SCHEMES}")
    return scheme


def check_waveform(x) -> np.ndarray:
    """1-D finite float samples in [-1, 1]."""
    a = np.asarray(x, dtype=np.float64)
    if a.ndim != 1:
        raise ShapeError(f"a waveform is 1-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("waveform contains NaN or infinite samples")
    if a.size and np.max(np.abs(a)) > 1.0:
        raise ValueError("waveform samples must lie in [-1, 1]")
    return a


def check_level_array(x, ndim: int | None = None) -> np.ndarray:
    """Integer levels in 0..255, returned as uint8."""
    a = np.asarray(x)
    if ndim is not None and a.ndim != ndim:
        raise ShapeError(f"expected a {ndim}-D level array, got shape {a.shape}")
    if a.size == 0:
        return a.astype(np.uint8)
    if not np.issubdtype(a.dtype, np.integer):
        if np.issubdtype(a.dtype, np.floating) and np.all(a == np.round(a)):
            a = a.astype(np.int64)
        else:
            raise ShapeError(f"levels must be integers, got dtype {a.dtype}")
    if a.min() < 0 or a.max() >= LEVELS:
        raise ShapeError(f"levels must lie in 0..{LEVELS - 1}")
    return a.astype(np.uint8)


def check_sequences(X, scheme: str) -> list[np.ndarray]:
    """Training material as a list of level sequences.

    Accepts a single 1-D array or a sequence of 1-D arrays.  Float arrays
    are treated as waveforms and quantized; integer arrays as levels.
    """
    if isinstance(X, np.ndarray) and X.ndim == 1:
        X = [X]
    elif isinstance(X, np.ndarray) and X.ndim == 2:
        X = list(X)
    out = []
    for x in X:
        a = np.asarray(x)
        if np.issubdtype(a.dtype, np.floating):
            out.append(quantize(check_waveform(a), scheme).astype(np.uint8))
        else:
            out.append(check_level_array(a, ndim=1))
    if not out:
        raise ShapeError("no sequences given")
    return out


def check_contexts(X, width: int) -> np.ndarray:
    """2-D batch of level rows, each ``width`` wide."""
    a = check_array(X, dtype=None, ensure_2d=True, ensure_min_samples=1)
    if a.shape[1] != width:
        raise ShapeError(f"each row must hold {width} levels, got {a.shape[1]}")
    return check_level_array(a, ndim=2)
