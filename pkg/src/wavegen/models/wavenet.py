"""Dilated causal convolution baseline with gated residual/skip layers."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..audio.quantize import LEVELS
from ..exceptions import ConfigurationError, ShapeError
from ..numerics import (
    ParameterStore,
    Tensor,
    add,
    causal_dilated_conv1d,
    causal_embedding,
    matmul,
    mul,
    relu,
    sigmoid,
    tanh,
)
from .base import Network, check_levels, config_from_dict, config_to_dict, fan_in_uniform


@dataclass(frozen=True)
class WavenetConfig:
    layers_per_stack: int = 10
    stacks: int = 1
    filters: int = 128
    filter_width: int = 2
    dilation_base: int = 2
    gated: bool = True
    head: str = "cited"
    context: int = 1600

    def __post_init__(self):
        if self.layers_per_stack < 1 or self.stacks < 1 or self.filters < 1:
            raise ConfigurationError(f"invalid wavenet size: {self}")
        if self.filter_width != 2:
            raise ConfigurationError("only filter width 2 is supported")
        if self.dilation_base < 1:
            raise ConfigurationError("dilation base must be >= 1")
        if self.head not in ("cited", "dense"):
            raise ConfigurationError(f"head must be 'cited' or 'dense', got {self.head!r}")

    def dilations(self) -> list[int]:
        per = [self.dilation_base ** l for l in range(self.layers_per_stack)]
        return per * self.stacks


def receptive_field(cfg: WavenetConfig) -> int:
    """``1 + stacks * sum(d**l) * (width - 1)``; also the largest lag that
    can influence the current output (the one-hot input tap adds one lag)."""
    per_stack = sum(cfg.dilation_base ** l for l in range(cfg.layers_per_stack))
    return 1 + cfg.stacks * per_stack * (cfg.filter_width - 1)


def _layers(cfg: WavenetConfig):
    n = cfg.layers_per_stack
    for i, d in enumerate(cfg.dilations()):
        last = i == len(cfg.dilations()) - 1
        yield f"wavenet/stack{i // n}/layer{i % n}", d, last


def wavenet_init(cfg: WavenetConfig, seed: int) -> ParameterStore:
    rng = np.random.default_rng(seed)
    F = cfg.filters
    p = ParameterStore()
    p.add("wavenet/embed/w", fan_in_uniform(rng, (2, LEVELS, F), 2))
    p.add("wavenet/embed/b", np.zeros(F))
    for pre, _, last in _layers(cfg):
        p.add(f"{pre}/filter/w", fan_in_uniform(rng, (2, F, F), 2 * F))
        p.add(f"{pre}/filter/b", np.zeros(F))
        if cfg.gated:
            p.add(f"{pre}/gate/w", fan_in_uniform(rng, (2, F, F), 2 * F))
            p.add(f"{pre}/gate/b", np.zeros(F))
        if not last:
            # the final layer only feeds the skip path
            p.add(f"{pre}/res/w", fan_in_uniform(rng, (F, F), F))
            p.add(f"{pre}/res/b", np.zeros(F))
        p.add(f"{pre}/skip/w", fan_in_uniform(rng, (F, F), F))
        p.add(f"{pre}/skip/b", np.zeros(F))
    if cfg.head == "cited":
        p.add("wavenet/head1/w", fan_in_uniform(rng, (F, F), F))
        p.add("wavenet/head1/b", np.zeros(F))
        p.add("wavenet/head2/w", fan_in_uniform(rng, (F, LEVELS), F))
        p.add("wavenet/head2/b", np.zeros(LEVELS))
    else:
        p.add("wavenet/head1/w", fan_in_uniform(rng, (F, LEVELS), F))
        p.add("wavenet/head1/b", np.zeros(LEVELS))
    return p


def wavenet_forward(levels, cfg: WavenetConfig, params: ParameterStore, train: bool = False) -> Tensor:
    """Logits ``[..., T, 256]``; ``logits[t]`` sees ``levels[t - receptive_field .. t]``."""
    lv = check_levels(levels)
    P = params
    try:
        h = add(causal_embedding(lv, P["wavenet/embed/w"]), P["wavenet/embed/b"])
        skip = None
        for pre, d, last in _layers(cfg):
            f = add(causal_dilated_conv1d(h, P[f"{pre}/filter/w"], d), P[f"{pre}/filter/b"])
            if cfg.gated:
                g = add(causal_dilated_conv1d(h, P[f"{pre}/gate/w"], d), P[f"{pre}/gate/b"])
                z = mul(tanh(f), sigmoid(g))
            else:
                z = relu(f)
            s = add(matmul(z, P[f"{pre}/skip/w"]), P[f"{pre}/skip/b"])
            skip = s if skip is None else add(skip, s)
            if not last:
                h = add(h, add(matmul(z, P[f"{pre}/res/w"]), P[f"{pre}/res/b"]))
        out = relu(skip)
        out = add(matmul(out, P["wavenet/head1/w"]), P["wavenet/head1/b"])
        if cfg.head == "cited":
            out = add(matmul(relu(out), P["wavenet/head2/w"]), P["wavenet/head2/b"])
    except KeyError as exc:
        raise ShapeError(f"parameters do not match config: missing block {exc}") from None
    return out


class WavenetNetwork(Network):
    kind = "wavenet"

    def __init__(self, cfg: WavenetConfig, params: ParameterStore | None = None, seed: int = 0,
                 scheme: str = "linear"):
        super().__init__(params if params is not None else wavenet_init(cfg, seed), scheme)
        self.cfg = cfg

    @property
    def context(self) -> int:
        return self.cfg.context

    @property
    def receptive_field(self) -> int:
        return receptive_field(self.cfg)

    def forward(self, levels, past=None, train=False, rng=None) -> Tensor:
        return wavenet_forward(levels, self.cfg, self.params, train)

    def config_dict(self) -> dict[str, str]:
        return {"kind": self.kind, "scheme": self.scheme, **config_to_dict(self.cfg, "wavenet")}

    @classmethod
    def from_config(cls, d, seed=0):
        return cls(config_from_dict(WavenetConfig, d, "wavenet"), seed=seed,
                   scheme=d.get("scheme", "linear"))

    def describe(self) -> str:
        c = self.cfg
        return f"Wavenet: d = {c.dilation_base}, N = {c.layers_per_stack * c.stacks}, F = {c.filters}"
