"""Exception types shared across the package."""


class InvalidArgument(ValueError):
    """An argument is outside its documented domain."""


class StateError(RuntimeError):
    """An operation was called in a state that does not permit it."""


class ParseError(ValueError):
    """A text input could not be parsed.

    ``line`` is the 1-based line number of the offending row, when known.
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class FormatError(ValueError):
    """A binary file has the wrong magic, version, or head kind."""


class TruncatedFileError(OSError):
    """A binary file ended before all declared blocks were read."""
