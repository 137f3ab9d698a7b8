from __future__ import annotations

from collections import OrderedDict
from typing import Iterator

import numpy as np

from .tape import Tensor


class ParameterStore:
    """Named float64 parameter blocks kept in insertion order.

    The order is part of the contract: checkpoints, Adam state and gradient
    checks all iterate blocks in this order.
    """

    def __init__(self):
        self._blocks: OrderedDict[str, Tensor] = OrderedDict()

    def add(self, name: str, value) -> Tensor:
        if name in self._blocks:
            raise KeyError(f"duplicate parameter block {name!r}")
        t = Tensor(np.array(value, dtype=np.float64), requires_grad=True)
        self._blocks[name] = t
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self._blocks[name]

    def __contains__(self, name: str) -> bool:
        return name in self._blocks

    def __iter__(self) -> Iterator[str]:
        return iter(self._blocks)

    def __len__(self) -> int:
        return len(self._blocks)

    def names(self) -> list[str]:
        return list(self._blocks)

    def items(self):
        return self._blocks.items()

    def shapes(self) -> dict[str, tuple[int, ...]]:
        return {k: v.shape for k, v in self._blocks.items()}

    @property
    def size(self) -> int:
        """Total number of scalar parameters."""
        return sum(v.data.size for v in self._blocks.values())

    def arrays(self) -> dict[str, np.ndarray]:
        return {k: v.data for k, v in self._blocks.items()}

    def copy(self) -> "ParameterStore":
        out = ParameterStore()
        for k, v in self._blocks.items():
            out.add(k, v.data.copy())
        return out

    def load_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        """Overwrite block values in place; names and shapes must match exactly."""
        if list(arrays) != list(self._blocks):
            unknown = sorted(set(arrays) - set(self._blocks))
            missing = sorted(set(self._blocks) - set(arrays))
            raise KeyError(f"block names differ: unknown={unknown} missing={missing}")
        for k, v in arrays.items():
            if v.shape != self._blocks[k].shape:
                raise ValueError(f"block {k!r}: shape {v.shape} != {self._blocks[k].shape}")
            self._blocks[k].data = np.array(v, dtype=np.float64)

    def equal(self, other: "ParameterStore") -> bool:
        """Bitwise equality of names, shapes and values."""
        if self.names() != other.names():
            return False
        return all(
            a.data.shape == b.data.shape and a.data.tobytes() == b.data.tobytes()
            for a, b in zip(self._blocks.values(), other._blocks.values())
        )
