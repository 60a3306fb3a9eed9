"""Exception types shared across the toolkit.

The CLI maps InputError (and subclasses) to exit code 2 and NumericError
to exit code 3.
"""


class PaqregError(Exception):
    """Base class for all toolkit errors."""


class InputError(PaqregError):
    """Invalid user-supplied data or configuration."""


class ParseError(InputError):
    """Malformed structured text; carries the byte offset of the defect."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


class NumericError(PaqregError):
    """Numerical failure during computation (divergence, invalid result)."""
