"""Reverse-mode differentiation over dense float64 arrays.

Operations append themselves to the tape that is active on the current
thread.  Because ops are recorded in execution order, the record list is
already a topological order, and the backward pass is a single reversed
sweep.  Gradients live on the tape rather than on the tensors, so several
threads can differentiate through the same (read-only) parameters at once.
"""
from __future__ import annotations

import threading
from typing import Callable, Sequence

import numpy as np

_local = threading.local()


class Tensor:
    __slots__ = ("data", "requires_grad")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag})"


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


Backward = Callable[[np.ndarray], Sequence["np.ndarray | None"]]


class Tape:
    """Ordered record of primitive operations for one backward pass.

    Use as a context manager::

        with Tape() as tape:
            loss = f(params)
        tape.backward(loss)
        g = tape.grad(params["w"])
    """

    def __init__(self):
        self._ops: list[tuple[Tensor, tuple[Tensor, ...], Backward]] = []
        self._grads: dict[int, np.ndarray] = {}
        self._leaves: dict[int, Tensor] = {}

    def __enter__(self) -> "Tape":
        stack = _stack()
        stack.append(self)
        return self

    def __exit__(self, *exc) -> None:
        stack = _stack()
        stack.pop()

    def __len__(self) -> int:
        return len(self._ops)

    def record(self, out: Tensor, inputs: tuple[Tensor, ...], backward: Backward) -> None:
        self._ops.append((out, inputs, backward))

    def backward(self, loss: Tensor) -> None:
        if loss.data.size != 1:
            raise ValueError(f"backward needs a scalar loss, got shape {loss.shape}")
        grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
        leaves: dict[int, Tensor] = {}
        for out, inputs, fn in reversed(self._ops):
            g = grads.pop(id(out), None)
            if g is None:
                continue
            for t, gi in zip(inputs, fn(g)):
                if gi is None or not t.requires_grad:
                    continue
                key = id(t)
                prev = grads.get(key)
                # never accumulate in place: gi may alias an upstream gradient
                grads[key] = gi if prev is None else prev + gi
                leaves[key] = t
        self._grads = grads
        self._leaves = {k: leaves[k] for k in grads if k in leaves}
        # the record is single-use; drop saved activations
        self._ops = []

    def grad(self, t: Tensor) -> np.ndarray:
        """Gradient of the last backward loss w.r.t. ``t`` (zeros if unreached)."""
        g = self._grads.get(id(t))
        if g is None:
            return np.zeros_like(t.data)
        return g


def _stack() -> list[Tape]:
    stack = getattr(_local, "stack", None)
    if stack is None:
        stack = _local.stack = []
    return stack


def current_tape() -> Tape | None:
    stack = _stack()
    return stack[-1] if stack else None


def make_result(data: np.ndarray, inputs: tuple[Tensor, ...], backward: Backward) -> Tensor:
    """Wrap ``data`` as the output of an op; record it if any input needs grad."""
    out = Tensor(data)
    tape = current_tape()
    if tape is not None and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        tape.record(out, inputs, backward)
    return out
