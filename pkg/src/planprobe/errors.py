"""Exception types shared across the package."""

from __future__ import annotations


class PlanProbeError(Exception):
    """Base class for all errors raised by this package."""


class LibraryError(PlanProbeError):
    """Problem with a plan library definition."""


class LibrarySyntaxError(LibraryError):
    """Malformed library file. Carries the position when known."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column


class LibraryValidationError(LibraryError):
    """Structurally well-formed library that violates a semantic invariant."""


class PlanError(PlanProbeError):
    """Invalid plan structure or illegal plan operation."""


class UnexplainableObservationError(PlanProbeError):
    """No hypothesis can explain an observation."""

    def __init__(self, index: int, action: str):
        super().__init__(f"observation {index} ({action!r}) cannot be explained by any hypothesis")
        self.index = index
        self.action = action


class OracleInconsistencyError(PlanProbeError):
    """An update emptied the hypothesis set, which a truthful oracle over a
    complete hypothesis set can never do."""


class PolicyError(PlanProbeError):
    """A query policy violated its contract (no candidates, or a closed/absent plan)."""


class GenerationError(PlanProbeError):
    """Instance generation failed for the given parameters."""
