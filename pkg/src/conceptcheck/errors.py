"""Exception types raised across the package.

Every error callers are expected to handle derives from ConceptCheckError,
so CLI code can map the whole family to a single exit code.
"""

from __future__ import annotations


class ConceptCheckError(Exception):
    """Base class for all errors raised by this package."""


class CycleDetected(ConceptCheckError):
    """The subconcept relation contains a cycle.

    Carries one offending cycle as a list of concept ids in `cycle`.
    """

    def __init__(self, cycle: list[str]):
        self.cycle = list(cycle)
        super().__init__(f"subconcept cycle: {' -> '.join(self.cycle)}")


class DanglingReference(ConceptCheckError):
    """An edge, property, or same-as entry names an unknown concept id."""


class DuplicateLabel(ConceptCheckError):
    """Two concepts share a label after normalization."""


class UnknownConcept(ConceptCheckError):
    """A query names a concept id absent from the graph."""


class UnknownTemplate(ConceptCheckError):
    """A question does not match any registered template."""


class SchemaViolation(ConceptCheckError):
    """A file fails structural validation against its documented format."""


class SeedNotFound(ConceptCheckError):
    """The extraction seed concept is absent from the parsed entities."""


class EmptyFragment(ConceptCheckError):
    """Extraction produced a graph with no subconcept edges."""


class UnreadableSource(ConceptCheckError):
    """An input source could not be read at all."""


class NetworkError(ConceptCheckError):
    """A remote call failed after exhausting retries."""


class MalformedResponse(ConceptCheckError):
    """A remote endpoint returned a payload outside its documented shape."""


class AuthMissing(ConceptCheckError):
    """A required authentication environment variable is unset."""


class FingerprintMismatch(ConceptCheckError):
    """An artifact is bound to a different graph or dataset fingerprint."""


class MismatchedDataset(ConceptCheckError):
    """Result sets under comparison come from different datasets."""


class DenominatorMismatch(ConceptCheckError):
    """Report rows under comparison have different cluster denominators."""


class ConfigError(ConceptCheckError):
    """A run configuration is invalid or incomplete."""


class InsufficientPairsWarning(UserWarning):
    """Fewer unrelated pairs exist than were requested; non-fatal."""
