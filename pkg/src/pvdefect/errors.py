"""Exception types shared across the library."""


class PvdefectError(Exception):
    """Base class for all library errors."""


class UnsupportedFormatError(PvdefectError):
    """Raster file is not one of the supported encodings (8-bit PNG, P5/P6)."""


class CorruptImageError(PvdefectError):
    """Raster file is recognized but its contents are damaged."""


class ChannelMismatchError(PvdefectError):
    """Operation received an image with the wrong channel count or tag."""


class BadMagicError(PvdefectError):
    """Binary container does not start with the expected magic bytes."""


class UnsupportedVersionError(PvdefectError):
    """Binary container version is newer than this library understands."""


class TruncatedFileError(PvdefectError):
    """Binary container ends before the header-implied length."""


class DuplicateIdError(PvdefectError):
    """Two records in a container share a sample id."""


class DimMismatchError(PvdefectError):
    """Vector length disagrees with the container or signature dimension."""


class SignatureMismatchError(PvdefectError):
    """Feature signature does not match the one a model or standardizer was fitted on."""


class ModelKindError(PvdefectError):
    """Persisted model is of a different kind than requested."""
