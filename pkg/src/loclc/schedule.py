"""Wavefront decode scheduling.

A pixel (i, j) -- 1-indexed, as in the decode-order diagrams -- becomes
decodable at timestep t = j + (i-1)*(h+1): its context reaches h rows up and
h columns right, so row i trails row i-1 by h+1 columns.  Grouping pixels by
t yields T = W + (H-1)*(h+1) steps whose members are mutually independent
and can be decoded in parallel; at most min(H, ceil(W/(h+1))) pixels share a
step (for a DxD image that is the familiar floor((D+h)/(h+1))).

Schedules are pure functions of (H, W, h) and are cached.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ShapeError


def timestep(i, j, h):
    """Earliest decode step for 1-indexed pixel (i, j)."""
    return j + (i - 1) * (h + 1)


@dataclass(frozen=True)
class WavefrontSchedule:
    H: int
    W: int
    h: int
    steps: tuple  # steps[t-1] = tuple of 1-indexed (row, col), row ascending

    @property
    def T(self):
        return len(self.steps)

    @property
    def max_parallelism(self):
        """Largest step size: one pixel per row, rows h+1 columns apart.
        Equals floor((D+h)/(h+1)) on square DxD images."""
        return min(self.H, -(-self.W // (self.h + 1)))


@lru_cache(maxsize=None)
def build(H, W, h):
    """Wavefront schedule for an HxW image with dependency horizon h."""
    if H < 1 or W < 1:
        raise ShapeError(f"image extents must be >= 1, got {H}x{W}")
    if h < 1:
        raise ShapeError(f"horizon must be >= 1, got {h}")
    T = W + (H - 1) * (h + 1)
    steps = [[] for _ in range(T)]
    for i in range(1, H + 1):
        base = (i - 1) * (h + 1)
        for j in range(1, W + 1):
            steps[base + j - 1].append((i, j))
    return WavefrontSchedule(H, W, h, tuple(tuple(s) for s in steps))


def canonical_order(H, W, h, channels=1):
    """The single symbol order every scheme shares.

    Positions sorted by (timestep, row), channels innermost; restricted to a
    single row this is raster order.
    """
    out = []
    for step in build(H, W, h).steps:
        for (i, j) in step:
            for ch in range(channels):
                out.append((i, j, ch))
    return out


def gather_patch(image, i, j, h):
    """Zero-padded context window for 1-indexed pixel (i, j).

    Returns float32 (h+1, 2h+1, C): rows i-h..i, cols j-h..j+h of the image,
    zeros outside the bounds.  Cells at or right of (i, j) in the bottom row
    land under masked kernel entries, so whatever stale values they hold are
    irrelevant.
    """
    image = np.asarray(image)
    if image.ndim != 3:
        raise ShapeError(f"image must be (H, W, C), got shape {image.shape}")
    H, W, C = image.shape
    if not (1 <= i <= H and 1 <= j <= W):
        raise ShapeError(f"pixel ({i}, {j}) outside {H}x{W} image")
    patch = np.zeros((h + 1, 2 * h + 1, C), dtype=np.float32)
    r0, r1 = i - 1 - h, i          # half-open, 0-indexed
    c0, c1 = j - 1 - h, j + h
    sr0, sc0 = max(r0, 0), max(c0, 0)
    sr1, sc1 = min(r1, H), min(c1, W)
    if sr0 < sr1 and sc0 < sc1:
        patch[sr0 - r0:sr1 - r0, sc0 - c0:sc1 - c0] = image[sr0:sr1, sc0:sc1]
    return patch
