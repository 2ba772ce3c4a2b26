"""Exception types shared across the package."""


class ParseError(ValueError):
    """A file could not be read as the expected format."""


class MalformedHeaderError(ParseError):
    pass


class NotSymmetricError(ParseError):
    pass


class IndexOutOfRangeError(ParseError):
    pass


class DuplicateEntryError(ParseError):
    pass


class PartitionFileError(ParseError):
    pass


class ValidationError(ValueError):
    """A core assignment or partition breaks the core-halo rules."""

    def __init__(self, message, vertex=None, part=None):
        super().__init__(message)
        self.vertex = vertex
        self.part = part


class CoreOverlapError(ValidationError):
    pass


class CoverageError(ValidationError):
    pass


class EmptyCoreError(ValidationError):
    pass


class IllegalMoveError(ValueError):
    pass


class AssemblyError(RuntimeError):
    """Row provenance or symmetry checks failed while assembling parts."""


class ConvergenceWarning(UserWarning):
    pass
