"""Exception types shared across the package."""

from __future__ import annotations


class VotesrError(Exception):
    """Base class for all errors raised by this package."""


class ImageError(VotesrError):
    """Invalid pixel buffer, geometry, or image file."""


class MetricError(VotesrError):
    """Metric preconditions violated (shape mismatch, undersized input, ...)."""


class BallotRejected(VotesrError):
    """A ballot failed validation. `code` is a stable machine-readable slug."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code
        self.message = message


class EnsembleError(VotesrError):
    """Sample-set or ensembling preconditions violated."""


class StudyError(VotesrError):
    """Study configuration or session-flow violation."""


class StoreError(VotesrError):
    """Sample-set catalog / persistence problem."""
