"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: usage errors exit 1, ``DataError``
exits 2, ``BackendError`` exits 3.
"""


class GenqeError(Exception):
    """Base class for all package errors."""


class UsageError(GenqeError):
    """Invalid configuration or command invocation."""


class DataError(GenqeError):
    """Malformed or inconsistent input data (files, records, formats)."""


class IndexFormatError(DataError):
    """Persisted index image is unreadable: bad magic, version or checksum."""


class ConfigMismatchError(DataError):
    """Tokenization config at query time differs from the one the index was built with."""


class CacheMissError(DataError):
    """Requested generated-text cache entry does not exist."""


class BackendError(GenqeError):
    """A generation backend failed.

    ``partial_texts`` carries whatever texts were obtained before the
    failure, so callers can inspect or salvage incomplete output.
    """

    def __init__(self, message: str, partial_texts: list[str] | None = None):
        super().__init__(message)
        self.partial_texts = partial_texts or []

    @property
    def partial_count(self) -> int:
        return len(self.partial_texts)
