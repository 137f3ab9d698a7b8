from __future__ import annotations

import dataclasses

from ..exceptions import ConfigurationError
from .base import Network
from .conditioner import ConditionedTransformerNetwork, ConditionerConfig
from .transformer import TransformerConfig, TransformerNetwork
from .wavenet import WavenetConfig, WavenetNetwork

# preset name -> (report row label, network kind, config overrides)
PRESETS: dict[str, tuple[str, str, dict]] = {
    "wavenet-vanilla": ("Vanilla Wavenet: d = 2, N = 10, F = 128", "wavenet",
                        dict(layers_per_stack=10, stacks=1, filters=128, dilation_base=2)),
    "wavenet-stacked": ("Stacked Wavenet: d = 2, N = 30, F = 128", "wavenet",
                        dict(layers_per_stack=10, stacks=3, filters=128, dilation_base=2)),
    "xf-3": ("3-Layer Transformer: H = 4, E = 128", "transformer",
             dict(layers=3, heads=4, embed_dim=128, ff_width=256)),
    "xf-3-cond": ("Conditioned 3-Layer Transformer: H = 4, E = 128", "conditioned",
                  dict(layers=3, heads=4, embed_dim=128, ff_width=256)),
    "xf-6": ("Large 6-Layer Transformer: H = 8, E = 128", "transformer",
             dict(layers=6, heads=8, embed_dim=128, ff_width=256)),
    "xf-8": ("Large 8-Layer Transformer: H = 8, E = 128", "transformer",
             dict(layers=8, heads=8, embed_dim=128, ff_width=256)),
}

MODEL_KINDS = tuple(PRESETS) + ("custom",)
LABEL_NEUTRAL = {"context", "dropout", "ln_eps"}
NETWORKS = {cls.kind: cls for cls in (WavenetNetwork, TransformerNetwork, ConditionedTransformerNetwork)}


def preset_label(name: str) -> str:
    return PRESETS[name][0]


def _split(cls, options: dict) -> tuple[dict, dict]:
    names = {f.name for f in dataclasses.fields(cls)}
    return {k: v for k, v in options.items() if k in names}, {k: v for k, v in options.items() if k not in names}


def build_network(model: str, seed: int = 0, scheme: str = "linear", **options) -> Network:
    """Instantiate a preset (or ``custom`` with ``arch=...``) with overrides.

    ``options`` may override any config field, e.g. ``context=400``,
    ``dropout=0.0`` or ``past_len=2000`` for the conditioner.
    """
    if model in PRESETS:
        _, kind, base = PRESETS[model]
        opts = {**base, **options}
    elif model == "custom":
        opts = dict(options)
        kind = opts.pop("arch", None)
        if kind not in NETWORKS:
            raise ConfigurationError(f"custom model needs arch in {sorted(NETWORKS)}, got {kind!r}")
    else:
        raise ConfigurationError(f"unknown model kind {model!r}; valid kinds: {', '.join(MODEL_KINDS)}")
    if kind == "wavenet":
        cfg, rest = _split(WavenetConfig, opts)
        net = WavenetNetwork(WavenetConfig(**cfg), seed=seed, scheme=scheme)
    elif kind == "transformer":
        cfg, rest = _split(TransformerConfig, opts)
        net = TransformerNetwork(TransformerConfig(**cfg), seed=seed, scheme=scheme)
    else:
        cfg, rest = _split(TransformerConfig, opts)
        ccfg, rest = _split(ConditionerConfig, rest)
        net = ConditionedTransformerNetwork(TransformerConfig(**cfg), ConditionerConfig(**ccfg),
                                            seed=seed, scheme=scheme)
    if rest:
        raise ConfigurationError(f"unknown options for {model}: {sorted(rest)}")
    # overriding the architecture itself means the preset row label no longer applies
    keeps_row = model in PRESETS and set(options) <= LABEL_NEUTRAL
    net.label = preset_label(model) if keeps_row else net.describe()
    return net


def network_from_config(d: dict[str, str]) -> Network:
    kind = d.get("kind")
    if kind not in NETWORKS:
        raise ConfigurationError(f"unknown network kind {kind!r} in config")
    net = NETWORKS[kind].from_config(d)
    net.label = d.get("label", net.describe())
    return net
