"""Exception hierarchy shared across the package.

``ValueError`` is reserved for caller mistakes (bad geometry, inconsistent
options); ``DataError`` subclasses signal malformed input data.  The CLI maps
the former to exit code 1 and the latter to exit code 2.
"""


class DataError(Exception):
    """Input data is malformed, truncated, or undecodable."""


class VideoIOError(DataError):
    """Raised for malformed or truncated video/image files."""


class BitstreamError(DataError):
    """Raised when a serialized split tree cannot be decoded."""
