"""Exception types shared across the package."""


class QASearchError(Exception):
    """Base class for package errors."""


class DataError(QASearchError):
    """Malformed or missing input data (dataset files, artifacts, queries)."""


class FormatError(DataError):
    """A persisted binary or text artifact failed validation on load."""


class VocabularyMismatchError(QASearchError):
    """An encoder vocabulary does not cover the corpus it is applied to."""
