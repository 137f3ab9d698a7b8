from __future__ import annotations

import numpy as np

from ..audio.quantize import LEVELS
from ..exceptions import ShapeError
from ..numerics import cross_entropy, log_softmax

__all__ = ["cross_entropy", "nll_sum", "top_k_hits", "top_k_accuracy"]


def _check(logits, targets):
    z = np.asarray(logits, dtype=np.float64)
    y = np.asarray(targets)
    if z.shape[:-1] != y.shape:
        raise ShapeError(f"logits {z.shape} do not match targets {y.shape}")
    return z, y.astype(np.intp)


def top_k_hits(logits, targets, k: int = 5) -> np.ndarray:
    """Boolean mask: is the target among the ``k`` best levels at each position.

    Ties are broken by ascending level index, so with equal logits levels
    ``0..k-1`` are the ones selected.  A target is selected exactly when
    fewer than ``k`` levels outrank it: strictly larger logits, or equal
    logits at a lower index.
    """
    if not 1 <= k <= LEVELS:
        raise ValueError(f"k must be in 1..{LEVELS}, got {k}")
    z, y = _check(logits, targets)
    zt = np.take_along_axis(z, y[..., None], axis=-1)
    above = (z > zt).sum(-1)
    tied_before = ((z == zt) & (np.arange(z.shape[-1]) < y[..., None])).sum(-1)
    return above + tied_before < k


def top_k_accuracy(logits, targets, k: int = 5) -> float:
    hits = top_k_hits(logits, targets, k)
    return float(hits.mean()) if hits.size else 0.0


def nll_sum(logits, targets) -> float:
    """Summed negative log-likelihood in nats."""
    z, y = _check(logits, targets)
    lp = log_softmax(z)
    return float(-np.take_along_axis(lp, y[..., None], axis=-1).sum())
