"""Dense float64 arrays with tape-based reverse-mode differentiation."""
from .gradcheck import GradCheckResult, grad_check
from .ops import (
    MASK_VALUE,
    add,
    causal_dilated_conv1d,
    causal_embedding,
    causal_self_attention,
    concat,
    conv1d,
    cross_entropy,
    dropout,
    embedding,
    layer_norm,
    log_softmax,
    matmul,
    mean_time,
    mul,
    relu,
    repeat_time,
    reshape,
    scale,
    sigmoid,
    softmax,
    sub,
    swap_last,
    tanh,
    total,
    transpose,
)
from .optim import AdamState, adam_step
from .params import ParameterStore
from .tape import Tape, Tensor, as_tensor, current_tape

__all__ = [
    "MASK_VALUE", "AdamState", "GradCheckResult", "ParameterStore", "Tape", "Tensor",
    "adam_step", "add", "as_tensor", "causal_dilated_conv1d", "causal_embedding", "causal_self_attention", "concat",
    "conv1d", "cross_entropy", "current_tape", "dropout", "embedding", "grad_check",
    "layer_norm", "log_softmax", "matmul", "mean_time", "mul", "relu", "repeat_time",
    "reshape", "scale", "sigmoid", "softmax", "sub", "swap_last", "tanh", "total", "transpose",
]
