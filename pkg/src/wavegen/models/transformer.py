"""Causal Transformer over 8-bit waveform levels."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..audio.quantize import LEVELS
from ..exceptions import ConfigurationError, ContextOverflowError, ShapeError
from ..numerics import (
    MASK_VALUE,
    ParameterStore,
    Tensor,
    add,
    causal_self_attention,
    dropout,
    embedding,
    layer_norm,
    matmul,
    relu,
    reshape,
    scale,
    transpose,
)
from .base import Network, check_levels, config_from_dict, config_to_dict, fan_in_uniform


@dataclass(frozen=True)
class TransformerConfig:
    layers: int = 3
    heads: int = 4
    embed_dim: int = 128
    ff_width: int = 256
    dropout: float = 0.1
    context: int = 1600
    pre_norm: bool = False
    ln_eps: float = 1e-5

    def __post_init__(self):
        if self.layers < 0 or self.heads < 1 or self.ff_width < 1 or self.context < 1:
            raise ConfigurationError(f"invalid transformer size: {self}")
        if self.embed_dim % self.heads:
            raise ConfigurationError(
                f"embedding width {self.embed_dim} is not divisible by {self.heads} heads"
            )
        if self.embed_dim % 2:
            raise ConfigurationError("embedding width must be even for sinusoidal encoding")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigurationError(f"dropout must be in [0, 1), got {self.dropout}")

    @property
    def head_dim(self) -> int:
        return self.embed_dim // self.heads


@lru_cache(maxsize=16)
def _pe(T: int, E: int) -> np.ndarray:
    pos = np.arange(T)[:, None]
    i = np.arange(E // 2)[None, :]
    angle = pos / np.power(10000.0, 2 * i / E)
    pe = np.empty((T, E))
    pe[:, 0::2] = np.sin(angle)
    pe[:, 1::2] = np.cos(angle)
    pe.flags.writeable = False
    return pe


def positional_encoding(T: int, E: int) -> np.ndarray:
    """``pe[pos, 2i] = sin(pos / 10000**(2i/E))``, ``pe[pos, 2i+1] = cos(...)``."""
    if E % 2:
        raise ConfigurationError(f"positional encoding needs an even width, got {E}")
    return _pe(T, E)


@lru_cache(maxsize=16)
def _mask(T: int) -> np.ndarray:
    m = np.triu(np.full((T, T), MASK_VALUE), k=1)
    m.flags.writeable = False
    return m


def causal_mask(T: int) -> np.ndarray:
    """Additive ``[T, T]`` mask: 0 where ``j <= i``, a huge negative value above."""
    return _mask(T)


def _heads_axes(nlead: int) -> tuple[int, ...]:
    # [..., T, H, dk] <-> [..., H, T, dk]
    return (*range(nlead), nlead + 1, nlead, nlead + 2)


def causal_attention(X: Tensor, params: ParameterStore, prefix: str, cfg: TransformerConfig,
                     return_weights: bool = False):
    """Multi-head scaled dot-product self-attention under a causal mask.

    With ``return_weights`` the per-head ``[..., H, T, T]`` attention
    distributions are returned alongside the output.
    """
    if X.shape[-1] != cfg.embed_dim:
        raise ShapeError(f"attention input width {X.shape[-1]} != {cfg.embed_dim}")
    T = X.shape[-2]
    H, dk = cfg.heads, cfg.head_dim
    lead = X.shape[:-2]
    axes = _heads_axes(len(lead))

    def split(t):
        return transpose(reshape(t, lead + (T, H, dk)), axes)

    q = split(scale(matmul(X, params[f"{prefix}/wq"]), 1.0 / np.sqrt(dk)))
    k = split(matmul(X, params[f"{prefix}/wk"]))
    v = split(matmul(X, params[f"{prefix}/wv"]))
    heads = causal_self_attention(q, k, v, return_weights=return_weights)
    if return_weights:
        heads, weights = heads
    heads = transpose(heads, axes)
    out = matmul(reshape(heads, lead + (T, H * dk)), params[f"{prefix}/wo"])
    return (out, weights) if return_weights else out


def feed_forward(X: Tensor, params: ParameterStore, prefix: str, rate: float = 0.0,
                 rng: np.random.Generator | None = None) -> Tensor:
    """``max(0, X W1 + b1) W2 + b2`` applied to every position; dropout after the ReLU."""
    h = relu(add(matmul(X, params[f"{prefix}/ff1/w"]), params[f"{prefix}/ff1/b"]))
    if rate > 0.0 and rng is not None:
        h = dropout(h, rate, rng)
    return add(matmul(h, params[f"{prefix}/ff2/w"]), params[f"{prefix}/ff2/b"])


def transformer_block(X: Tensor, params: ParameterStore, j: int, cfg: TransformerConfig,
                      train: bool = False, rng: np.random.Generator | None = None) -> Tensor:
    pre = f"xf/layer{j}"
    eps = cfg.ln_eps

    def ln(t, name):
        return layer_norm(t, params[f"{pre}/{name}/gain"], params[f"{pre}/{name}/bias"], eps)

    rate = cfg.dropout if train else 0.0
    if cfg.pre_norm:
        X = add(X, causal_attention(ln(X, "ln1"), params, pre, cfg))
        return add(X, feed_forward(ln(X, "ln2"), params, pre, rate, rng))
    X = ln(add(X, causal_attention(X, params, pre, cfg)), "ln1")
    return ln(add(X, feed_forward(X, params, pre, rate, rng)), "ln2")


def transformer_init(cfg: TransformerConfig, seed: int) -> ParameterStore:
    rng = np.random.default_rng(seed)
    E, Fw = cfg.embed_dim, cfg.ff_width
    p = ParameterStore()
    p.add("xf/embed", fan_in_uniform(rng, (LEVELS, E), 1))
    for j in range(cfg.layers):
        pre = f"xf/layer{j}"
        for name in ("wq", "wk", "wv", "wo"):
            p.add(f"{pre}/{name}", fan_in_uniform(rng, (E, E), E))
        p.add(f"{pre}/ln1/gain", np.ones(E))
        p.add(f"{pre}/ln1/bias", np.zeros(E))
        p.add(f"{pre}/ff1/w", fan_in_uniform(rng, (E, Fw), E))
        p.add(f"{pre}/ff1/b", np.zeros(Fw))
        p.add(f"{pre}/ff2/w", fan_in_uniform(rng, (Fw, E), Fw))
        p.add(f"{pre}/ff2/b", np.zeros(E))
        p.add(f"{pre}/ln2/gain", np.ones(E))
        p.add(f"{pre}/ln2/bias", np.zeros(E))
    p.add("xf/head/w", fan_in_uniform(rng, (E, LEVELS), E))
    p.add("xf/head/b", np.zeros(LEVELS))
    return p


def transformer_forward(levels, cfg: TransformerConfig, params: ParameterStore, train: bool = False,
                        rng: np.random.Generator | None = None) -> Tensor:
    lv = check_levels(levels)
    T = lv.shape[-1]
    if T > cfg.context:
        raise ContextOverflowError(f"sequence of {T} levels exceeds the {cfg.context}-sample context")
    if train and cfg.dropout > 0 and rng is None:
        raise ConfigurationError("training mode with dropout needs an rng")
    pe = np.broadcast_to(positional_encoding(T, cfg.embed_dim), lv.shape + (cfg.embed_dim,))
    X = add(embedding(lv, params["xf/embed"]), Tensor(pe))
    for j in range(cfg.layers):
        X = transformer_block(X, params, j, cfg, train, rng)
    return add(matmul(X, params["xf/head/w"]), params["xf/head/b"])


class TransformerNetwork(Network):
    kind = "transformer"

    def __init__(self, cfg: TransformerConfig, params: ParameterStore | None = None, seed: int = 0,
                 scheme: str = "linear"):
        super().__init__(params if params is not None else transformer_init(cfg, seed), scheme)
        self.cfg = cfg

    @property
    def context(self) -> int:
        return self.cfg.context

    def forward(self, levels, past=None, train=False, rng=None) -> Tensor:
        return transformer_forward(levels, self.cfg, self.params, train, rng)

    def config_dict(self) -> dict[str, str]:
        return {"kind": self.kind, "scheme": self.scheme, **config_to_dict(self.cfg, "transformer")}

    @classmethod
    def from_config(cls, d, seed=0):
        return cls(config_from_dict(TransformerConfig, d, "transformer"), seed=seed,
                   scheme=d.get("scheme", "linear"))

    def describe(self) -> str:
        return f"{self.cfg.layers}-Layer Transformer: H = {self.cfg.heads}, E = {self.cfg.embed_dim}"
