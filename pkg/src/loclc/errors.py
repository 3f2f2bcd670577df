"""Exception types shared across the codec."""


class LoclcError(Exception):
    """Base class for all loclc errors."""


class ShapeError(LoclcError):
    """Tensor extents do not match what an operation requires."""


class WeightFormatError(LoclcError):
    """Weight file is malformed: bad magic/version, truncated, bad hash,
    or nonzero entries in masked kernel cells."""


class StreamFormatError(LoclcError):
    """Compressed container is malformed (magic/version/truncation)."""


class ImageFormatError(LoclcError):
    """PGM/PPM/raw image input cannot be parsed as 8-bit pixels."""


class CorruptStreamError(LoclcError):
    """rANS payload is inconsistent: byte underflow, leftover bytes, or
    final state mismatch."""


class ModelMismatchError(LoclcError):
    """Stream header names a different model than the one supplied."""
