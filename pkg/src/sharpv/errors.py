"""Exception types and the process exit codes shared across the package."""

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_INVARIANT = 4


class SharpVError(Exception):
    """Base class for package-specific failures."""


class ShapeMismatchError(SharpVError, ValueError):
    """Operands have incompatible dimensions."""


class ConfigError(SharpVError):
    """Invalid or contradictory configuration."""


class PositionOverflowError(SharpVError):
    """Sequence grew past the decoder's configured position budget."""


class InvariantViolation(SharpVError):
    """A run produced output that breaks a documented invariant."""


class TensorFormatError(SharpVError):
    """Base class for tensor-file decode failures."""


class BadMagicError(TensorFormatError):
    """File does not start with the expected magic bytes."""


class TruncatedFileError(TensorFormatError):
    """File is shorter than its header claims."""


class DimensionError(TensorFormatError):
    """Header dimensions are zero or exceed the supported element budget."""
