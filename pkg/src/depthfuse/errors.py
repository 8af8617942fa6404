"""Exception types raised across the package."""


class DepthFuseError(Exception):
    """Base class for all package-specific errors."""


class ArgumentError(DepthFuseError, ValueError):
    """An argument violates a documented precondition."""


class CodecError(DepthFuseError):
    """A file could not be decoded or encoded.

    ``offset`` is the byte position in the file where decoding failed,
    when that position is known.
    """

    def __init__(self, message, offset=None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)


class ProviderError(DepthFuseError):
    """An external provider (edge, depth or flow source) failed."""


class ConfigurationError(DepthFuseError):
    """A configuration value or weight container does not match its spec."""


class AlignmentError(DepthFuseError):
    """Least-squares alignment is undefined for the given inputs."""


class LossError(DepthFuseError):
    """A loss term is undefined for the given sample."""


class TrainingError(DepthFuseError):
    """Training produced a non-finite loss or otherwise failed.

    ``iteration`` records the training iteration at which it happened.
    """

    def __init__(self, message, iteration=None):
        self.iteration = iteration
        if iteration is not None:
            message = f"{message} (iteration {iteration})"
        super().__init__(message)
