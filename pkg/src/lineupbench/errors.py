"""Exception taxonomy shared across the package.

Each class maps to one CLI exit code (see cli.EXIT_CODES): config problems
exit 2, data/parameter problems exit 3, I/O problems exit 4.
"""


class LineupBenchError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(LineupBenchError):
    """Bad run configuration: unknown key, missing key, type mismatch."""


class ParameterError(LineupBenchError):
    """An argument violates an operation's precondition."""


class ValidationError(LineupBenchError):
    """A manifest or record violates a structural invariant."""


class SetupError(LineupBenchError):
    """A lineup cannot be formed from the given gallery."""


class ArchiveLookupError(LineupBenchError):
    """An image_id is missing from an embedding archive."""


class EmptyEvaluationError(LineupBenchError):
    """An evaluation ended up with zero eligible probes."""


class FormatError(LineupBenchError):
    """A binary or text artifact does not match its declared format."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class RangeError(LineupBenchError):
    """A lookup argument falls outside the table's domain."""


class DataIOError(LineupBenchError):
    """A referenced file is missing, unreadable, or unwritable."""
