"""Exception hierarchy.

Every error carries a ``category`` string that the CLI prints in its
machine-readable error line, and an ``exit_code`` used as process status.
"""

from __future__ import annotations


class FailidError(Exception):
    category = "InternalError"
    exit_code = 3


class ValidationFailed(FailidError):
    """Base for rejected operations on otherwise well-formed input."""

    category = "ValidationFailed"
    exit_code = 1


class DuplicateId(ValidationFailed):
    category = "DuplicateId"


class MalformedElement(ValidationFailed):
    category = "MalformedElement"


class UnknownEndpoint(ValidationFailed):
    category = "UnknownEndpoint"


class KindConstraintViolated(ValidationFailed):
    category = "KindConstraintViolated"


class DuplicateLink(ValidationFailed):
    category = "DuplicateLink"


class CycleIntroduced(ValidationFailed):
    category = "CycleIntroduced"


class UnknownElement(ValidationFailed):
    category = "UnknownElement"


class WrongKind(ValidationFailed):
    category = "WrongKind"


class InvalidScenario(ValidationFailed):
    category = "InvalidScenario"


class EmptyText(ValidationFailed):
    category = "EmptyText"


class MissingCatalog(ValidationFailed):
    category = "MissingCatalog"


class InvalidWeights(ValidationFailed):
    category = "InvalidWeights"


class ReportMismatch(ValidationFailed):
    category = "ReportMismatch"


class InputFormatError(FailidError):
    """A file could not be parsed or does not follow the expected schema."""

    category = "InputFormatError"
    exit_code = 2


class MissingFiles(InputFormatError):
    category = "MissingFiles"

    def __init__(self, missing: list[str]):
        self.missing = sorted(missing)
        super().__init__("missing mandatory files: " + ", ".join(self.missing))
