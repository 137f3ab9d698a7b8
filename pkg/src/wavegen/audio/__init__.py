from .io import WORKING_RATE, Manifest, Waveform, load_audio, read_manifest, save_wav, write_manifest
from .quantize import LEVELS, SCHEMES, SILENCE, bin_edges, dequantize, quantize
from .resample import resample
from .windows import (
    CONTEXT,
    PAST,
    STRIDE,
    TrainingWindow,
    WindowSet,
    augment,
    make_windows,
    read_shard,
    window_starts,
    write_shard,
)


def load_levels(path, scheme: str = "linear", rate: int = WORKING_RATE):
    """Load, resample to the working rate and quantize one file."""
    return quantize(resample(load_audio(path, min_rate=rate), rate).samples, scheme)


__all__ = [
    "CONTEXT", "LEVELS", "PAST", "SCHEMES", "SILENCE", "STRIDE", "WORKING_RATE", "Manifest",
    "TrainingWindow", "WindowSet", "Waveform", "augment", "bin_edges", "dequantize",
    "load_audio", "load_levels", "make_windows", "quantize", "read_manifest", "read_shard",
    "resample", "save_wav", "window_starts", "write_manifest", "write_shard",
]
