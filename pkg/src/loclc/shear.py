"""Shear memory-layout transform.

Shifting image row i right by (i-1)*o with offset o = h+1 lines every
wavefront step up as one buffer column: a sheared pixel in column c has
unsheared timestep exactly c.  The buffer is materialized (zeros everywhere
no real pixel lands) and stored column-major so a decode step touches one
contiguous slab; the zero cells double as the model's boundary padding.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError


@dataclass
class ShearedBuffer:
    data: np.ndarray  # (H, L, C) float32, Fortran order
    offset: int
    width: int        # original image width W

    @property
    def H(self):
        return self.data.shape[0]

    @property
    def L(self):
        return self.data.shape[1]

    @property
    def C(self):
        return self.data.shape[2]


def sheared_length(H, W, o):
    return W + (H - 1) * o


def shear_image(image, o):
    """Place pixel (i, j) at buffer cell (i, j + (i-1)*o); zeros elsewhere."""
    if o < 1:
        raise ShapeError(f"shear offset must be >= 1, got {o}")
    image = np.asarray(image)
    if image.ndim != 3:
        raise ShapeError(f"image must be (H, W, C), got shape {image.shape}")
    H, W, C = image.shape
    L = sheared_length(H, W, o)
    data = np.zeros((H, L, C), dtype=np.float32, order="F")
    for r in range(H):
        data[r, r * o:r * o + W, :] = image[r]
    return ShearedBuffer(data=data, offset=o, width=W)


def unshear_image(buf):
    """Exact inverse of shear_image; returns uint8 (H, W, C)."""
    H, W, o = buf.H, buf.width, buf.offset
    image = np.empty((H, W, buf.C), dtype=np.uint8)
    for r in range(H):
        image[r] = buf.data[r, r * o:r * o + W, :]
    return image


def column_rows(c, H, W, o):
    """1-indexed rows holding a real pixel in sheared column c.

    Those pixels are exactly the wavefront step c when o = h+1.
    """
    lo = max(1, -(-(c - W) // o) + 1)   # ceil((c-W)/o) + 1
    hi = min(H, (c - 1) // o + 1)
    return range(lo, hi + 1)


def sheared_patch(buf, i, c, h):
    """Context window the sheared model reads for the pixel at (row i, col c).

    Rows i-h..i, columns c-h*(h+2)..c-1 of the buffer, zero-padded where the
    window leaves the buffer.  Under the sheared first-layer kernel this
    holds exactly the pixels of the unsheared context, each beneath its own
    weight.
    """
    Wk = h * (h + 2)
    out = np.zeros((h + 1, Wk, buf.C), dtype=np.float32)
    r0, r1 = i - 1 - h, i               # half-open, 0-indexed
    c0, c1 = c - 1 - Wk, c - 1
    sr0, sc0 = max(r0, 0), max(c0, 0)
    sr1, sc1 = min(r1, buf.H), min(c1, buf.L)
    if sr0 < sr1 and sc0 < sc1:
        out[sr0 - r0:sr1 - r0, sc0 - c0:sc1 - c0] = buf.data[sr0:sr1, sc0:sc1]
    return out
