from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..exceptions import GradientCheckError
from .params import ParameterStore
from .tape import Tape, Tensor


@dataclass
class GradCheckResult:
    max_relative_error: float
    worst_block: str
    worst_index: tuple[int, ...]
    analytic: float
    numeric: float
    checked: int


def grad_check(loss_fn: Callable[[], Tensor], params: ParameterStore, eps: float = 1e-5,
               n_coords: int = 100, tol: float | None = 1e-4, abs_floor: float = 1e-7,
               rng: np.random.Generator | None = None, details: bool = False):
    """Compare tape gradients against central differences.

    ``loss_fn`` takes no arguments and reads ``params`` directly.  Up to
    ``n_coords`` coordinates per block are probed (all of them for small
    blocks).  The relative error is ``|a - n| / max(|a|, |n|, abs_floor)``;
    the floor keeps coordinates whose true gradient is below the
    finite-difference noise from dominating the maximum.

    Raises ``GradientCheckError`` naming the worst coordinate when the
    maximum exceeds ``tol`` (pass ``tol=None`` to only measure).
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    with Tape() as tape:
        loss = loss_fn()
    tape.backward(loss)
    analytic = {name: tape.grad(t).copy() for name, t in params.items()}

    worst = GradCheckResult(0.0, "", (), 0.0, 0.0, 0)
    checked = 0
    for name, t in params.items():
        flat = t.data.reshape(-1)
        n = flat.size
        coords = np.arange(n) if n <= n_coords else rng.choice(n, size=n_coords, replace=False)
        ga = analytic[name].reshape(-1)
        for c in coords:
            orig = flat[c]
            flat[c] = orig + eps
            fp = float(loss_fn().data)
            flat[c] = orig - eps
            fm = float(loss_fn().data)
            flat[c] = orig
            num = (fp - fm) / (2.0 * eps)
            a = float(ga[c])
            rel = abs(a - num) / max(abs(a), abs(num), abs_floor)
            checked += 1
            if rel > worst.max_relative_error or not worst.worst_block:
                worst = GradCheckResult(rel, name, tuple(int(i) for i in np.unravel_index(c, t.shape)), a, num, 0)
    worst.checked = checked
    if tol is not None and worst.max_relative_error > tol:
        raise GradientCheckError(
            f"gradient mismatch: rel err {worst.max_relative_error:.3e} > {tol:g} at "
            f"{worst.worst_block}{list(worst.worst_index)} "
            f"(analytic {worst.analytic:.6e}, numeric {worst.numeric:.6e})"
        )
    return worst if details else worst.max_relative_error
