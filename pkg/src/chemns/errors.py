"""Exception hierarchy shared across the package."""


class ChemNSError(Exception):
    """Base class for all package errors."""


class ConfigurationError(ChemNSError, ValueError):
    """Invalid grid, array shape or configuration value."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DomainError(ChemNSError, ValueError):
    """An operator argument lies outside its mathematical domain."""


class HypothesisError(ChemNSError, ValueError):
    """Model functions violate the structural assumptions on chi, f or grad(phi)."""


class EvaluationError(ChemNSError, ValueError):
    """A response function was evaluated outside its tabulated range."""


class TheoremOutOfRange(ChemNSError, ValueError):
    """The dissipation exponent is outside the range where a criterion applies."""


class SuspectedSingularity(ChemNSError, RuntimeError):
    """Step rejected more than ``max_dt_halvings`` times in a row.

    ``record`` holds the diagnostics of the last accepted state and ``state``
    the state itself, so the caller can inspect what was going on.
    """

    def __init__(self, message, record=None, state=None):
        super().__init__(message)
        self.record = record
        self.state = state


class SnapshotError(ChemNSError, IOError):
    pass


class BadMagic(SnapshotError):
    pass


class VersionMismatch(SnapshotError):
    pass


class TruncatedSnapshot(SnapshotError):
    pass
