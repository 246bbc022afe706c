"""
Exception types shared across the package
Each one derives from the built-in error the code would otherwise raise
"""


class ShapeMismatchError(ValueError):
    """Dimensions of two operands disagree"""


class NonFiniteError(FloatingPointError):
    """A NaN or Inf reached a place that requires finite numbers"""


class SizeLimitError(ValueError):
    """A requested dense tensor exceeds the configured entry cap"""

    def __init__(self, requested: int, cap: int):
        self.requested = requested
        self.cap = cap
        super().__init__(f"Refusing to build {requested:,} entries (cap is {cap:,})")


class CheckpointError(ValueError):
    """Checkpoint file is malformed or does not match the expected model"""


class DatasetFormatError(ValueError):
    """Dataset directory is inconsistent or truncated"""


class VariantError(ValueError):
    """Features were supplied for a branch the model variant does not have"""
