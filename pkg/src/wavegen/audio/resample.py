from __future__ import annotations

from fractions import Fraction

import numpy as np
from scipy.signal import resample_poly

from ..exceptions import SampleRateError
from .io import WORKING_RATE, Waveform

KAISER_BETA = 8.6


def resample(w: Waveform, target_rate: int = WORKING_RATE) -> Waveform:
    """Downsample with a Kaiser-windowed sinc polyphase filter.

    The output has ``round(len * target / source)`` samples.  Upsampling is
    refused; a matching rate returns the samples unchanged.
    """
    if w.sample_rate == target_rate:
        return Waveform(w.samples.copy(), target_rate)
    if w.sample_rate < target_rate:
        raise SampleRateError(
            f"cannot upsample {w.sample_rate} Hz to {target_rate} Hz; lower-rate audio is discarded"
        )
    ratio = Fraction(target_rate, w.sample_rate)
    y = resample_poly(w.samples, ratio.numerator, ratio.denominator, window=("kaiser", KAISER_BETA))
    n_out = int(round(len(w.samples) * target_rate / w.sample_rate))
    if len(y) > n_out:
        y = y[:n_out]
    elif len(y) < n_out:
        y = np.concatenate([y, np.zeros(n_out - len(y))])
    return Waveform(np.clip(y, -1.0, 1.0), target_rate)
