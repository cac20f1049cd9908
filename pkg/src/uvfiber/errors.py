"""Exception types shared across the package."""


class UvfiberError(Exception):
    """Base class for all errors raised by this package."""


class ImageIOError(UvfiberError):
    """Base class for image file read/write failures."""


class UnreadableFileError(ImageIOError):
    """The image file could not be opened or read."""


class MalformedImageError(ImageIOError):
    """The file was readable but its header or payload is broken."""


class UnsupportedFormatError(ImageIOError):
    """The file is in a format this package does not handle."""


class ImageTooSmallError(UvfiberError):
    """The image is below the minimum size an operation requires."""


class InvalidSpecError(UvfiberError):
    """A synthetic page spec violates its invariants."""


class ConfigError(UvfiberError):
    """A config file or flag value is invalid."""


class StageError(UvfiberError):
    """Wraps an error raised inside a named detector stage."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}': {cause}")
        self.stage = stage
        self.cause = cause
