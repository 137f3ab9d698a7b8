from .base import Network, check_levels
from .conditioner import (
    ConditionedTransformerNetwork,
    ConditionerConfig,
    conditioner_init,
    conv_lengths,
    encode_context,
    fuse,
    pad_past,
)
from .presets import MODEL_KINDS, PRESETS, build_network, network_from_config, preset_label
from .transformer import (
    TransformerConfig,
    TransformerNetwork,
    causal_attention,
    causal_mask,
    feed_forward,
    positional_encoding,
    transformer_block,
    transformer_forward,
    transformer_init,
)
from .wavenet import WavenetConfig, WavenetNetwork, receptive_field, wavenet_forward, wavenet_init

__all__ = [
    "MODEL_KINDS", "PRESETS", "ConditionedTransformerNetwork", "ConditionerConfig", "Network",
    "TransformerConfig", "TransformerNetwork", "WavenetConfig", "WavenetNetwork", "build_network",
    "causal_attention", "causal_mask", "check_levels", "conditioner_init", "conv_lengths",
    "encode_context", "feed_forward", "fuse", "network_from_config", "pad_past",
    "positional_encoding", "preset_label", "receptive_field", "transformer_block",
    "transformer_forward", "transformer_init", "wavenet_forward", "wavenet_init",
]
