"""Exception types raised by the toolkit."""


class DeconvError(Exception):
    """Base class for all toolkit errors."""


class DimensionError(DeconvError, ValueError):
    """Grid or kernel shapes are incompatible."""


class ParameterError(DeconvError, ValueError):
    """A numeric parameter is outside its admissible range."""


class PGMError(DeconvError, ValueError):
    """Malformed or unsupported PGM data."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset
