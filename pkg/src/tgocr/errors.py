"""Exception hierarchy shared by every tgocr module."""


class TgocrError(Exception):
    """Base class for all library errors."""


class ShapeError(TgocrError, ValueError):
    pass


class SizeError(ShapeError):
    pass


class DataError(TgocrError, ValueError):
    pass


class ConfigError(TgocrError, ValueError):
    pass


class StateError(TgocrError, RuntimeError):
    pass


class DecodeError(DataError):
    """A bitmap file could not be decoded."""


class UnsupportedFormatError(DecodeError):
    """The bitmap is valid but not a 32x32 uncompressed 24-bit image."""


class DatasetError(DataError):
    pass


class CheckpointError(TgocrError):
    """Raised by ``load_checkpoint``; ``section`` names the part that failed."""

    def __init__(self, section: str, message: str):
        super().__init__(f"checkpoint {section}: {message}")
        self.section = section


class OutputError(TgocrError, OSError):
    """Writing metrics or checkpoints failed."""
