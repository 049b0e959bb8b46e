"""Exception hierarchy.

Errors that stem from bad input data derive from ``DataError`` so the CLI can
map them to the data-error exit code.
"""
from __future__ import annotations


class RevertRiskError(Exception):
    pass


class DataError(RevertRiskError):
    pass


class ParseError(DataError):
    def __init__(self, message: str, line_number: int | None = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class SchemaError(ParseError):
    def __init__(self, field: str, message: str | None = None, line_number: int | None = None):
        self.field = field
        super().__init__(message or f"missing or invalid field {field!r}", line_number)


class EmptyCorpusError(DataError):
    pass


class AnnotationError(DataError):
    pass


class PreconditionError(DataError):
    pass


class BalanceError(DataError):
    pass


class TrainingError(DataError):
    pass


class WeightingError(DataError):
    pass


class MetricError(DataError):
    pass


class LoadError(DataError):
    pass


class VersionError(LoadError):
    def __init__(self, found, supported):
        self.found = found
        self.supported = supported
        super().__init__(f"unsupported schema version {found!r} (supported: {supported})")


class AssemblyError(RevertRiskError):
    pass


class PredictionError(RevertRiskError):
    pass


class ScoringError(RevertRiskError):
    pass


class FetchError(RevertRiskError):
    """Failure talking to the MediaWiki API."""

    def __init__(self, message: str, status: int | None = None):
        self.status = status
        super().__init__(message)


class TransportError(FetchError):
    pass


class UpstreamTimeout(TransportError):
    pass


class RevisionNotFound(FetchError):
    pass


class UnsupportedRevision(FetchError):
    pass


class StageError(RevertRiskError):
    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage!r} failed: {cause}")
