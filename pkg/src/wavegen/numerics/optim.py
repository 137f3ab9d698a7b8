from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .params import ParameterStore

log = logging.getLogger(__name__)


@dataclass
class AdamState:
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: ParameterStore, **hyper) -> "AdamState":
        st = cls(**hyper)
        for name, t in params.items():
            st.m[name] = np.zeros_like(t.data)
            st.v[name] = np.zeros_like(t.data)
        return st


def adam_step(params: ParameterStore, grads: dict[str, np.ndarray], state: AdamState,
              lr: float) -> bool:
    """Apply one bias-corrected Adam update in place.

    Returns False (and leaves params and state untouched) if any gradient
    is non-finite.
    """
    bad = [k for k, g in grads.items() if not np.all(np.isfinite(g))]
    if bad:
        log.warning("skipping Adam step %d: non-finite gradient in %s", state.step + 1, bad)
        return False
    for name in params:
        if params[name].shape != grads[name].shape or state.m[name].shape != grads[name].shape:
            raise ValueError(f"adam_step: shape mismatch for block {name!r}")
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** t
    c2 = 1.0 - b2 ** t
    for name, p in params.items():
        g = grads[name]
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p.data = p.data - lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return True
