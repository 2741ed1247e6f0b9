"""
Exception hierarchy.

Every library error is a ValueError subclass so callers that only guard
against bad input keep working.
"""

from typing import Optional


class KnowbalError(ValueError):
    """Base class for all knowbal errors."""


class ShapeMismatchError(KnowbalError):
    """Operands live on different system shapes."""


class OnticIndexError(KnowbalError):
    """Ontic index or label outside the configuration space."""


class EmptyStateError(KnowbalError):
    """An epistemic state must contain at least one ontic state."""


class UnsupportedShapeError(KnowbalError):
    """Operation is only implemented for a limited number of systems."""


class InvalidStateError(KnowbalError):
    """A state that must be valid is not."""


class CoherentOperationError(KnowbalError):
    """Coherent combination needs two disjoint pure single-system states."""


class TransformationError(KnowbalError):
    """Malformed or disallowed permutation."""


class MeasurementError(KnowbalError):
    """Outcome set is not a partition into valid states."""


class OutcomeImpossibleError(KnowbalError):
    """The requested outcome has zero probability for the given state."""


class CatalogFormatError(KnowbalError):
    """Artifact file could not be parsed or is truncated."""


class CatalogVersionError(KnowbalError):
    """Artifact file has an unsupported format version."""


class CatalogChecksumError(KnowbalError):
    """Artifact body does not match its checksum line."""


class CacheMissError(KnowbalError):
    """Offline mode requested an artifact that is not cached."""


class SimulationInvariantError(KnowbalError):
    """Ontic state escaped the tracked epistemic state."""


class DslError(KnowbalError):
    """Error raised while parsing or resolving a toy program."""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.message = message
        self.line = line
        self.column = column
        if line is not None:
            message = f"line {line}, column {column}: {message}"
        super().__init__(message)


class DslSyntaxError(DslError):
    """Lexing or parsing failure."""


class DslResolutionError(DslError):
    """Program is well formed but refers to something inconsistent."""
