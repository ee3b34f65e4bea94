"""Exception types shared across the pipeline."""


class GeoEmotionError(Exception):
    """Base class for all errors raised by this package."""


class IngestError(GeoEmotionError):
    """A fatal problem with an input file.

    ``line`` is the 1-based line number (or feature index for geodata) when
    the problem can be pinned to one record.
    """

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class InvariantError(GeoEmotionError):
    """An internal consistency check failed; indicates a bug, not bad input."""
