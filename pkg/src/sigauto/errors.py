"""Exception types shared across the package."""


class SigautoError(Exception):
    """Base class for every error raised by this package."""


class RejectedInputError(SigautoError, ValueError):
    """An observation or argument was malformed (non-finite, wrong arity)."""


class EmptyInputError(SigautoError, ValueError):
    """An operation that needs at least one observation got none."""


class StalenessError(SigautoError):
    """An incremental update was attempted against an out-of-sync structure."""


class TemporalOrderError(SigautoError):
    """An instant lies in the future of the accumulator or evaluation time."""


class ConfigError(SigautoError, ValueError):
    """Invalid parameter value or inconsistent plugin configuration."""


class UnknownStateError(SigautoError, KeyError):
    """A state id was queried that the model does not contain."""


class InsufficientHistoryError(SigautoError):
    """Not enough observations to anchor a lookahead frontier."""


class SnapshotError(SigautoError):
    """A persisted snapshot is unreadable, truncated or of a wrong version."""
