"""Exception types raised across the package."""

from __future__ import annotations


class RevelationError(Exception):
    """Base class for every error raised by this package."""


class SpaceValidationError(RevelationError, ValueError):
    """A state-space or partition failed validation.

    ``errors`` carries one message per violated invariant.
    """

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class SpaceMismatchError(RevelationError, ValueError):
    """A contract or map was used with a space it does not belong to."""


class IncompatibleReportsError(RevelationError, ValueError):
    """Two reported partitions are not comparable under refinement."""


class InstanceTooLargeError(RevelationError):
    """An exhaustive enumeration would exceed its configured cap."""


class InvalidSequenceError(RevelationError, ValueError):
    """A revelation sequence does not start at the root or fails to refine strictly."""


class InstanceFormatError(RevelationError, ValueError):
    """An instance file could not be parsed.

    ``where`` names the offending field (and line, when the JSON itself is broken).
    """

    def __init__(self, where: str, message: str):
        self.where = where
        super().__init__(f"{where}: {message}")
