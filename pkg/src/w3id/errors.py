"""Exception hierarchy.

Every error carries a stable ``code`` string; the HTTP layer and the CLI
map codes to status codes and exit codes respectively.
"""


class W3IDError(Exception):
    code = "W3ID_ERROR"

    def __init__(self, message: str = "", code: str | None = None):
        super().__init__(message or self.code)
        if code is not None:
            self.code = code


class MalformedInput(W3IDError, ValueError):
    """Base for anything rejected on shape alone (length, charset, range)."""

    code = "MALFORMED_INPUT"


class MalformedTimestamp(MalformedInput):
    """Raised by timestamp parsing.

    ``code`` is one of WRONG_LENGTH, NON_DIGIT, OUT_OF_RANGE, INVALID_DATE.
    """

    code = "MALFORMED_TIMESTAMP"


class MalformedId(MalformedInput):
    code = "MALFORMED_ID"


class MalformedKey(MalformedInput):
    code = "MALFORMED_KEY"


class MalformedChain(MalformedInput):
    code = "MALFORMED_CHAIN"


class MalformedRecord(MalformedInput):
    """A sidecar, chain or store line that does not match its schema."""

    code = "MALFORMED_RECORD"


class ClockUnavailable(W3IDError):
    code = "CLOCK_UNAVAILABLE"


class TimestampOverflow(W3IDError, OverflowError):
    code = "OVERFLOW"


class VerificationFailed(W3IDError):
    code = "VERIFICATION_FAILED"


class DuplicateId(W3IDError):
    code = "DUPLICATE_ID"


class NotFound(W3IDError, LookupError):
    code = "NOT_FOUND"


class StorageFailure(W3IDError):
    code = "STORAGE_FAILURE"
