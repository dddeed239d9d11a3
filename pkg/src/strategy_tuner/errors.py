"""Exception types shared across the package."""

from __future__ import annotations


class TunerError(Exception):
    """Base class for every error raised by this package."""


class LatticeMismatchError(TunerError):
    """Binary lattice operation applied to incompatible operands.

    Raised on variant or width mismatches. This always signals a
    programming bug in the caller, never bad user data.
    """


class ConfigParseError(TunerError):
    """Malformed configuration, catalog, or profile text."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.message = message
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)


class InvalidSettingsError(TunerError):
    """Tuner settings fail validation before any analysis starts."""


class RenderError(TunerError):
    """A configuration cannot be rendered to analyzer arguments."""


class ProfileError(TunerError):
    """A synthetic analyzer profile violates an operation's precondition."""


class BaselinesDoNotSeparateError(TunerError):
    """Dominancy baselines emit the same alarm count (d <= 0)."""
