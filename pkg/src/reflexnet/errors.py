"""Exception hierarchy.

Every error raised by this package derives from :class:`ReflexnetError`, so
callers (the CLI in particular) can distinguish package failures from
programming errors. Validation errors carry a ``path`` locating the offending
entry in document notation, e.g. ``"ownership.equity[1][1]"``.
"""

from __future__ import annotations


class ReflexnetError(Exception):
    """Base class for all errors raised by reflexnet."""


class NetworkValidationError(ReflexnetError):
    """A network component violates a structural invariant."""

    def __init__(self, message: str, path: str | None = None):
        self.path = path
        if path is not None:
            message = f"{path}: {message}"
        super().__init__(message)


class DuplicateIdError(NetworkValidationError):
    """A firm or asset name appears more than once."""


class UnknownReferenceError(NetworkValidationError):
    """A holding, tranche, ownership entry, or price refers to a missing id."""


class InvalidFractionError(NetworkValidationError):
    """An ownership entry lies outside [0, 1] or sits on the diagonal."""


class ColumnSumExceededError(NetworkValidationError):
    """Insider holdings of one claim add up to more than the whole claim."""


class DimensionMismatchError(ReflexnetError):
    """A state or price vector does not match the network's dimensions."""


class NoConvergenceError(ReflexnetError):
    """Picard iteration exhausted its budget above tolerance.

    Attributes ``state`` and ``diagnostics`` hold the best iterate and the
    solve diagnostics gathered up to the failure.
    """

    def __init__(self, message: str, state=None, diagnostics=None):
        super().__init__(message)
        self.state = state
        self.diagnostics = diagnostics


class SingularSystemError(ReflexnetError):
    """The solvent-regime linear system is singular or ill-conditioned."""


class RegimeViolationError(ReflexnetError):
    """The linear solution has a negative equity: some firm is insolvent.

    Attribute ``equity`` holds the offending raw solution vector.
    """

    def __init__(self, message: str, equity=None):
        super().__init__(message)
        self.equity = equity


class InsufficientHistoryError(ReflexnetError):
    """The published-state history is shorter than the largest lag."""


class InsufficientDataError(ReflexnetError):
    """Too few post-shock residuals to classify the feedback loop."""


class ScenarioInvalidError(ReflexnetError):
    """A scenario violates its invariants (lags, horizon, prices, state)."""

    def __init__(self, message: str, path: str | None = None):
        self.path = path
        if path is not None:
            message = f"{path}: {message}"
        super().__init__(message)


class ParseError(ReflexnetError):
    """A document is not syntactically valid JSON."""


class SchemaError(ReflexnetError):
    """A document is valid JSON but does not match the schema."""

    def __init__(self, message: str, path: str | None = None):
        self.path = path
        if path is not None:
            message = f"{path}: {message}"
        super().__init__(message)
