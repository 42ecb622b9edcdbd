"""Exception hierarchy shared across the package."""
from __future__ import annotations


class TrihopError(Exception):
    """Base class for all errors raised by this package."""


class EmptyFieldError(TrihopError):
    """A required text field is empty or whitespace-only."""


class BadStepError(TrihopError):
    """Hop index outside the range the operation supports."""


class EmptyInputError(TrihopError):
    """An operation received an empty collection."""


class AllUnparseableError(TrihopError):
    """Every candidate fell into the unparseable sentinel cluster."""


class BackendError(TrihopError):
    """Base class for text-generation backend failures."""


class TransportError(BackendError):
    """Network, timeout, or HTTP-level failure, surfaced after retries."""


class RateLimitedError(BackendError):
    """The endpoint kept rate-limiting after all retries."""


class MalformedResponseError(BackendError):
    """The endpoint returned a payload that cannot be interpreted."""


class AuthMissingError(BackendError):
    """The configured API key environment variable is unset."""


class BadFixtureError(BackendError):
    """Mock script file violates the fixture schema."""


class ScriptExhaustedError(BackendError):
    """Mock script has no (remaining) entry for the requested key."""


class BadRecordError(TrihopError):
    """A dataset line was rejected; message carries line number and reason."""


class DuplicateIdError(TrihopError):
    """The same instance id occurred more than once."""


class UnknownIdError(TrihopError):
    """A trace refers to an instance id absent from the dataset."""


class SchemaMismatchError(TrihopError):
    """A serialized file does not match the expected schema."""


class ModeMismatchError(TrihopError):
    """An operation requiring three-hop traces received another mode."""
