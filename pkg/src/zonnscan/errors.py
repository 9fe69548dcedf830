"""Exception hierarchy shared by all modules.

The CLI maps these onto process exit codes: validation and data problems
exit with 2, file parsing and I/O problems with 3, numeric failures with 4.
"""


class ZonnscanError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(ZonnscanError):
    """A parameter, shape, or domain precondition was violated."""


class DataError(ValidationError):
    """A dataset, label, or key failed validation."""


class ParseError(ZonnscanError):
    """A file could not be decoded (bad magic, malformed JSON/CSV, truncation)."""


class NumericError(ZonnscanError):
    """A non-finite value appeared where finite arithmetic was required."""
