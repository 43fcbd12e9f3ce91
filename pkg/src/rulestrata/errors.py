"""Exception types shared across the package.

Two families matter to callers: ``ValidationError`` subclasses describe bad
input or schema problems (CLI exit code 2); ``IoError`` covers unreadable or
unwritable files (CLI exit code 1).
"""

from __future__ import annotations


class RuleStrataError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(RuleStrataError):
    pass


class EmptyInput(ValidationError):
    pass


class SchemaViolation(ValidationError):
    pass


class UnknownItem(ValidationError, KeyError):
    def __str__(self) -> str:
        # KeyError.__str__ would repr() the message
        return str(self.args[0]) if self.args else ""


class EmptyDatabase(ValidationError):
    pass


class UndefinedConfidence(ValidationError):
    pass


class DegenerateResponse(ValidationError):
    pass


class EmptySelection(ValidationError):
    pass


class TooLargeForOracle(ValidationError):
    pass


class IoError(RuleStrataError, OSError):
    pass


class DuplicateKey(UserWarning):
    """Issued when a join table holds more than one row for a key.

    The first row in file order is kept; the remainder are counted.
    """
