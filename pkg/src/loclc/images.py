"""8-bit PGM (P5) / PPM (P6) and raw image IO.

Images are numpy uint8 arrays of shape (H, W, C) with C in {1, 3}.
"""

import numpy as np

from .errors import ImageFormatError


def _parse_pnm_tokens(data, count):
    """Yield `count` whitespace/comment-delimited header tokens, then the
    index of the first raster byte."""
    tokens = []
    pos = 0
    while len(tokens) < count:
        if pos >= len(data):
            raise ImageFormatError("truncated PNM header")
        b = data[pos:pos + 1]
        if b == b"#":
            nl = data.find(b"\n", pos)
            if nl < 0:
                raise ImageFormatError("unterminated comment in PNM header")
            pos = nl + 1
        elif b.isspace():
            pos += 1
        else:
            end = pos
            while end < len(data) and not data[end:end + 1].isspace():
                end += 1
            tokens.append(data[pos:end])
            pos = end
    # exactly one whitespace byte separates the header from the raster
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise ImageFormatError("missing separator before PNM raster")
    return tokens, pos + 1


def decode_pnm(data):
    """Parse P5/P6 bytes into (H, W, C) uint8."""
    if data[:2] == b"P5":
        channels = 1
    elif data[:2] == b"P6":
        channels = 3
    else:
        raise ImageFormatError("not a binary PGM/PPM file")
    tokens, start = _parse_pnm_tokens(data[2:], 3)
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError as e:
        raise ImageFormatError(f"bad PNM header field: {e}") from e
    if width < 1 or height < 1:
        raise ImageFormatError(f"bad PNM dimensions {width}x{height}")
    if not (0 < maxval <= 255):
        raise ImageFormatError(f"only 8-bit PNM supported, maxval={maxval}")
    need = width * height * channels
    raster = data[2 + start:2 + start + need]
    if len(raster) != need:
        raise ImageFormatError(f"PNM raster short: {len(raster)} of {need} bytes")
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width, channels).copy()


def encode_pnm(image):
    """Serialize (H, W, C) uint8 to P5 (C=1) or P6 (C=3) bytes."""
    image = np.ascontiguousarray(image, dtype=np.uint8)
    H, W, C = image.shape
    if C == 1:
        magic = b"P5"
    elif C == 3:
        magic = b"P6"
    else:
        raise ImageFormatError(f"cannot write {C}-channel image as PNM")
    return magic + f"\n{W} {H}\n255\n".encode() + image.tobytes()


def decode_raw(data, width, height, channels=1):
    """Headerless bytes with explicitly supplied extents."""
    need = width * height * channels
    if len(data) != need:
        raise ImageFormatError(f"raw image: {len(data)} bytes, expected {need}")
    return np.frombuffer(data, dtype=np.uint8).reshape(height, width, channels).copy()


def read_image(path, width=None, height=None, channels=1):
    """Load a PGM/PPM file, or raw bytes when extents are given."""
    with open(path, "rb") as f:
        data = f.read()
    if data[:2] in (b"P5", b"P6") and width is None:
        return decode_pnm(data)
    if width is None or height is None:
        raise ImageFormatError(
            f"{path}: not a PGM/PPM file; raw input needs --width and --height")
    return decode_raw(data, width, height, channels)


def write_image(path, image):
    """Write PNM by default; raw bytes when the path ends in .raw."""
    image = np.ascontiguousarray(image, dtype=np.uint8)
    with open(path, "wb") as f:
        if str(path).endswith(".raw"):
            f.write(image.tobytes())
        else:
            f.write(encode_pnm(image))
