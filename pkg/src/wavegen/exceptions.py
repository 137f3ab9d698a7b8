"""Exception hierarchy shared across the package."""


class WavegenError(Exception):
    pass


class ConfigurationError(WavegenError, ValueError):
    """Invalid hyperparameter or option value."""


class ShapeError(WavegenError, ValueError):
    """Array shapes do not agree with what an operation requires."""


class FormatError(WavegenError, ValueError):
    """Unsupported or malformed audio/shard file."""


class SampleRateError(FormatError):
    """Audio sample rate below the working rate (cannot upsample)."""


class ContextOverflowError(WavegenError, ValueError):
    pass


class CheckpointError(WavegenError, ValueError):
    """Checkpoint file is corrupt, truncated, or does not match its config."""


class SchemeMismatchError(WavegenError, ValueError):
    pass


class GradientCheckError(WavegenError, AssertionError):
    pass


class TrainingError(WavegenError, RuntimeError):
    pass
