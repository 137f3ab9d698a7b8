"""Convolutional encoder over the preceding window, late-fused with the logits."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..audio.quantize import LEVELS
from ..exceptions import ConfigurationError, ShapeError
from ..numerics import (
    ParameterStore,
    Tensor,
    add,
    concat,
    conv1d,
    embedding,
    matmul,
    mean_time,
    relu,
    repeat_time,
    reshape,
)
from .base import Network, check_levels, config_from_dict, config_to_dict, fan_in_uniform
from .transformer import TransformerConfig, transformer_forward, transformer_init


@dataclass(frozen=True)
class ConditionerConfig:
    conv_layers: int = 6
    filters: int = 128
    kernel_width: int = 3
    downsample: int = 2
    latent_dim: int = 128
    past_len: int = 4000

    def __post_init__(self):
        if min(self.conv_layers, self.filters, self.kernel_width, self.downsample,
               self.latent_dim, self.past_len) < 1:
            raise ConfigurationError(f"invalid conditioner config: {self}")

    @property
    def padding(self) -> tuple[int, int]:
        total = self.kernel_width - 1
        return total // 2, total - total // 2


def conv_lengths(cfg: ConditionerConfig) -> list[int]:
    """Temporal length after each strided conv layer."""
    out, L = [], cfg.past_len
    left, right = cfg.padding
    for _ in range(cfg.conv_layers):
        L = (L + left + right - cfg.kernel_width) // cfg.downsample + 1
        out.append(L)
    return out


def conditioner_init(cfg: ConditionerConfig, rng: np.random.Generator,
                     params: ParameterStore | None = None, n_logits: int = LEVELS) -> ParameterStore:
    """Add conditioner blocks to ``params``.

    The fusion layer starts at the identity-embedding point for the logits
    (``[I | *]``) with a small random latent part, so an untrained
    conditioned model reproduces the unconditioned logits plus a small
    latent-dependent offset.
    """
    p = params if params is not None else ParameterStore()
    F, W = cfg.filters, cfg.kernel_width
    p.add("cond/embed", fan_in_uniform(rng, (LEVELS, F), 1))
    for i in range(1, cfg.conv_layers + 1):
        p.add(f"cond/conv{i}/w", fan_in_uniform(rng, (W, F, F), W * F))
        p.add(f"cond/conv{i}/b", np.zeros(F))
    p.add("cond/dense/w", fan_in_uniform(rng, (F, cfg.latent_dim), F))
    p.add("cond/dense/b", np.zeros(cfg.latent_dim))
    fuse = np.zeros((n_logits + cfg.latent_dim, n_logits))
    fuse[:n_logits] = np.eye(n_logits)
    fuse[n_logits:] = fan_in_uniform(rng, (cfg.latent_dim, n_logits), n_logits + cfg.latent_dim)
    p.add("cond/fuse/w", fuse)
    p.add("cond/fuse/b", np.zeros(n_logits))
    return p


def encode_context(past, cfg: ConditionerConfig, params: ParameterStore, train: bool = False,
                   trace: list | None = None) -> Tensor:
    """Latent code ``[..., latent_dim]`` for a ``[..., past_len]`` level window."""
    lv = check_levels(past)
    if lv.shape[-1] != cfg.past_len:
        raise ShapeError(f"conditioning window must have {cfg.past_len} levels, got {lv.shape[-1]}")
    single = lv.ndim == 1
    h = embedding(lv[None] if single else lv, params["cond/embed"])
    for i in range(1, cfg.conv_layers + 1):
        h = conv1d(h, params[f"cond/conv{i}/w"], stride=cfg.downsample, pad=cfg.padding)
        h = relu(add(h, params[f"cond/conv{i}/b"]))
        if trace is not None:
            trace.append(h.shape[-2])
    z = add(matmul(mean_time(h), params["cond/dense/w"]), params["cond/dense/b"])
    return reshape(z, (cfg.latent_dim,)) if single else z


def fuse(logits: Tensor, latent: Tensor, params: ParameterStore) -> Tensor:
    """Dense layer over ``concat(logits[t], latent)`` at every position."""
    if logits.shape[:-2] != latent.shape[:-1]:
        raise ShapeError(f"fuse: logits {logits.shape} and latent {latent.shape} disagree")
    W = params["cond/fuse/w"]
    if W.shape[0] != logits.shape[-1] + latent.shape[-1]:
        raise ShapeError(f"fuse: weight {W.shape} vs inputs {logits.shape[-1]}+{latent.shape[-1]}")
    joined = concat(logits, repeat_time(latent, logits.shape[-2]))
    return add(matmul(joined, W), params["cond/fuse/b"])


def pad_past(levels, past_len: int, fill: int = 128) -> np.ndarray:
    """Left-pad (or trim) a history to exactly ``past_len`` levels."""
    lv = np.asarray(levels)
    if lv.shape[-1] >= past_len:
        return lv[..., lv.shape[-1] - past_len:]
    pad = np.full(lv.shape[:-1] + (past_len - lv.shape[-1],), fill, dtype=lv.dtype)
    return np.concatenate([pad, lv], axis=-1)


class ConditionedTransformerNetwork(Network):
    kind = "conditioned"

    def __init__(self, cfg: TransformerConfig, cond: ConditionerConfig,
                 params: ParameterStore | None = None, seed: int = 0, scheme: str = "linear"):
        if params is None:
            # transformer blocks draw from the same stream as an unconditioned model
            params = transformer_init(cfg, seed)
            conditioner_init(cond, np.random.default_rng([seed, 1]), params)
        super().__init__(params, scheme)
        self.cfg = cfg
        self.cond = cond

    @property
    def context(self) -> int:
        return self.cfg.context

    @property
    def past_len(self) -> int:
        return self.cond.past_len

    def forward(self, levels, past=None, train=False, rng=None) -> Tensor:
        if past is None:
            raise ShapeError("the conditioned model needs the preceding window")
        logits = transformer_forward(levels, self.cfg, self.params, train, rng)
        latent = encode_context(past, self.cond, self.params, train)
        return fuse(logits, latent, self.params)

    def config_dict(self) -> dict[str, str]:
        return {"kind": self.kind, "scheme": self.scheme,
                **config_to_dict(self.cfg, "transformer"), **config_to_dict(self.cond, "conditioner")}

    @classmethod
    def from_config(cls, d, seed=0):
        return cls(config_from_dict(TransformerConfig, d, "transformer"),
                   config_from_dict(ConditionerConfig, d, "conditioner"),
                   seed=seed, scheme=d.get("scheme", "linear"))

    def describe(self) -> str:
        return (f"Conditioned {self.cfg.layers}-Layer Transformer: "
                f"H = {self.cfg.heads}, E = {self.cfg.embed_dim}")
