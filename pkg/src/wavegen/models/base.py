from __future__ import annotations

import dataclasses
from typing import Any

import numpy as np

from ..audio.quantize import LEVELS
from ..exceptions import ConfigurationError, ShapeError
from ..numerics import ParameterStore, Tensor


def fan_in_uniform(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def check_levels(levels) -> np.ndarray:
    lv = np.asarray(levels)
    if lv.ndim == 0 or lv.shape[-1] < 1:
        raise ShapeError(f"need at least one level, got shape {lv.shape}")
    if not np.issubdtype(lv.dtype, np.integer):
        raise ShapeError(f"levels must be integers, got dtype {lv.dtype}")
    if lv.min() < 0 or lv.max() >= LEVELS:
        raise ShapeError("levels must lie in 0..255")
    return lv.astype(np.intp, copy=False)


def _parse(value: str, typ):
    if typ in (bool, "bool"):
        if value not in ("true", "false"):
            raise ConfigurationError(f"expected true/false, got {value!r}")
        return value == "true"
    if typ in (int, "int"):
        return int(value)
    if typ in (float, "float"):
        return float(value)
    return value


def _format(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def config_to_dict(cfg, prefix: str) -> dict[str, str]:
    return {f"{prefix}.{f.name}": _format(getattr(cfg, f.name)) for f in dataclasses.fields(cfg)}


def config_from_dict(cls, d: dict[str, str], prefix: str):
    kwargs = {}
    for f in dataclasses.fields(cls):
        key = f"{prefix}.{f.name}"
        if key in d:
            kwargs[f.name] = _parse(d[key], f.type)
    return cls(**kwargs)


class Network:
    """A parameterized next-sample model producing ``[..., T, 256]`` logits.

    Subclasses set ``kind``, build ``params`` and implement ``forward``.
    ``past_len`` is non-zero only for models that consume a conditioning
    window preceding the context.
    """

    kind = ""
    label = ""
    past_len = 0

    def __init__(self, params: ParameterStore, scheme: str = "linear"):
        self.params = params
        self.scheme = scheme

    @property
    def context(self) -> int:
        raise NotImplementedError

    def forward(self, levels, past=None, train: bool = False,
                rng: np.random.Generator | None = None) -> Tensor:
        raise NotImplementedError

    def logits(self, levels, past=None) -> np.ndarray:
        """Eval-mode logits as a plain array."""
        return self.forward(levels, past, train=False).data

    def config_dict(self) -> dict[str, str]:
        raise NotImplementedError

    @classmethod
    def from_config(cls, d: dict[str, str], seed: int = 0) -> "Network":
        raise NotImplementedError

    def describe(self) -> str:
        return self.kind

    def clone(self) -> "Network":
        net = self.from_config(self.config_dict())
        net.params.load_arrays({k: v.copy() for k, v in self.params.arrays().items()})
        net.label = self.label
        return net
