"""Loss, metrics, the training loop, evaluation reports and checkpoints."""
from .checkpoint import (
    MAGIC,
    VERSION,
    format_config,
    load_checkpoint,
    load_network,
    parse_config,
    read_checkpoint,
    save_checkpoint,
    save_network,
)
from .evaluate import EvalReport, evaluate, format_table, model_inputs
from .losses import cross_entropy, nll_sum, top_k_accuracy, top_k_hits
from .trainer import (
    CurveRecord,
    PlateauSchedule,
    StepInfo,
    TrainPlan,
    TrainResult,
    read_curve,
    train,
)

__all__ = [
    "MAGIC", "VERSION", "CurveRecord", "EvalReport", "PlateauSchedule", "StepInfo", "TrainPlan",
    "TrainResult", "cross_entropy", "evaluate", "format_config", "format_table", "load_checkpoint",
    "load_network", "model_inputs", "nll_sum", "parse_config", "read_checkpoint", "read_curve",
    "save_checkpoint", "save_network", "top_k_accuracy", "top_k_hits", "train",
]
