"""Exception hierarchy shared by every module."""


class FreqAdaptError(Exception):
    """Base class for package errors."""


class ArgumentError(FreqAdaptError, ValueError):
    """An argument violates an operation's precondition."""


class FormatError(FreqAdaptError, ValueError):
    """A file or serialized payload is malformed or unsupported."""


class DegenerateInputError(FreqAdaptError, ValueError):
    """Input carries no usable signal (e.g. an all-zero profile)."""


class TrainingError(FreqAdaptError, RuntimeError):
    """Optimization produced non-finite values or diverged.

    ``batch_index`` names the offending batch element when known and
    ``partial`` carries whatever result was accumulated before the failure.
    """

    def __init__(self, message, batch_index=None, partial=None):
        super().__init__(message)
        self.batch_index = batch_index
        self.partial = partial


class EstimationError(FreqAdaptError, RuntimeError):
    """Kernel estimation could not run on the given corpus."""
