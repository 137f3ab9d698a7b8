"""Autoregressive 8-bit raw-audio models: wavenet baseline and causal Transformers."""
from .estimators import Quantizer, WaveformGenerator
from .exceptions import (
    CheckpointError,
    ConfigurationError,
    ContextOverflowError,
    FormatError,
    GradientCheckError,
    SampleRateError,
    SchemeMismatchError,
    ShapeError,
    TrainingError,
    WavegenError,
)
from .models import MODEL_KINDS, PRESETS, build_network
from .synthesis import GenerationSpec, generate, sample_next
from .training import EvalReport, TrainPlan, evaluate, load_network, save_network, train

__version__ = "0.1.0"

__all__ = [
    "MODEL_KINDS", "PRESETS", "CheckpointError", "ConfigurationError", "ContextOverflowError",
    "EvalReport", "FormatError", "GenerationSpec", "GradientCheckError", "Quantizer",
    "SampleRateError", "SchemeMismatchError", "ShapeError", "TrainPlan", "TrainingError",
    "WaveformGenerator", "WavegenError", "build_network", "evaluate", "generate", "load_network",
    "sample_next", "save_network", "train",
]
