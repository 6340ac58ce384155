"""Exception types shared across the package."""


class LgsqeError(Exception):
    """Base class for errors raised by this package."""


class FormatError(LgsqeError):
    """A file's magic number or structure is not what the parser expects."""


class LengthError(LgsqeError):
    """A file's payload size disagrees with its header or record size."""


class GeometryError(LgsqeError):
    """Tensor or feature shapes are inconsistent with a fitted model."""


class VersionError(LgsqeError):
    """A serialized artifact declares an unsupported format version."""
