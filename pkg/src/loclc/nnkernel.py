"""Deterministic float32 dense/convolution arithmetic.

Tensors are plain numpy float32 ndarrays, row-major. Every reduction here
accumulates in a fixed order -- kernel row, then kernel column, then input
channel, ascending -- so results are bit-identical no matter how work is
batched or which worker runs it. ``np.einsum(..., optimize=False)`` performs
exactly that sequential accumulation (verified against a scalar loop in the
test suite); BLAS-backed ``matmul`` does not and must not be used here.

Transcendentals are evaluated in float64 and rounded to float32, which makes
them reproducible across the vectorized and scalar paths (and across language
runtimes that expose a correctly-rounded float64 libm).

einsum only honors subscript-order accumulation for C-contiguous operands
(its iterator reorders loops by memory layout), so every contraction here
copies strided inputs to C order first.
"""

import numpy as np

from .errors import ShapeError

F32 = np.float32


def _require(cond, msg):
    if not cond:
        raise ShapeError(msg)


def as_f32(a):
    """View/convert ``a`` as a float32 ndarray without copying when possible."""
    return np.asarray(a, dtype=F32)


def check_tensor(a, rank=None, name="tensor"):
    """Validate the tensor contract: float32, rank <= 4, all extents >= 1."""
    a = np.asarray(a)
    _require(a.dtype == F32, f"{name}: expected float32, got {a.dtype}")
    _require(a.ndim <= 4, f"{name}: rank {a.ndim} exceeds 4")
    _require(all(e >= 1 for e in a.shape), f"{name}: zero-sized extent in {a.shape}")
    return a


def conv2d_valid(input, kernel, anchor=(0, 0)):
    """Valid 2-D convolution (really cross-correlation; no kernel flip).

    input:  (H, W, Cin) float32
    kernel: (kh, kw, Cin, Cout) float32
    anchor: which kernel cell aligns with the output position; bookkeeping
            for callers that embed the result back into a padded grid.

    Returns (H-kh+1, W-kw+1, Cout). Each output element is the sum of
    input*weight products taken in (row, col, channel) ascending order with a
    float32 accumulator; callers pad explicitly when they need same-size
    output.
    """
    input = check_tensor(input, name="input")
    kernel = check_tensor(kernel, name="kernel")
    _require(input.ndim == 3, f"input must be rank 3, got {input.ndim}")
    _require(kernel.ndim == 4, f"kernel must be rank 4, got {kernel.ndim}")
    kh, kw, cin, _ = kernel.shape
    H, W, cin_in = input.shape
    _require(cin_in == cin, f"channel mismatch: input {cin_in} vs kernel {cin}")
    _require(kh <= H and kw <= W, f"kernel {kh}x{kw} larger than input {H}x{W}")
    ar, ac = anchor
    _require(0 <= ar < kh and 0 <= ac < kw, f"anchor {anchor} outside kernel")

    windows = np.lib.stride_tricks.sliding_window_view(input, (kh, kw), axis=(0, 1))
    # windows: (H', W', Cin, kh, kw) -> (H', W', kh, kw, Cin)
    windows = np.ascontiguousarray(np.moveaxis(windows, 2, -1))
    return np.einsum("yxrci,rcio->yxo", windows,
                     np.ascontiguousarray(kernel), optimize=False)


def conv_patches(patches, kernel):
    """First-layer contraction for a batch of gathered patches.

    patches: (B, kh, kw, Cin); kernel: (kh, kw, Cin, Cout) -> (B, Cout).
    Same accumulation order as conv2d_valid, so a batch of B patches is
    bit-identical to B single-patch calls.
    """
    patches = check_tensor(patches, name="patches")
    kernel = check_tensor(kernel, name="kernel")
    _require(patches.ndim == 4, f"patches must be rank 4, got {patches.ndim}")
    _require(
        patches.shape[1:] == kernel.shape[:3],
        f"patch window {patches.shape[1:]} vs kernel support {kernel.shape[:3]}",
    )
    return np.einsum("brci,rcio->bo", np.ascontiguousarray(patches),
                     np.ascontiguousarray(kernel), optimize=False)


def conv1x1(input, weight, bias):
    """Per-position affine map over the trailing axis.

    input: (..., Cin); weight: (Cin, Cout); bias: (Cout,) -> (..., Cout).
    Products accumulate over Cin ascending; bias is added after the full dot
    product (one extra float32 add).
    """
    input = check_tensor(input, name="input")
    weight = check_tensor(weight, name="weight")
    bias = check_tensor(bias, name="bias")
    _require(weight.ndim == 2, "weight must be rank 2")
    _require(input.shape[-1] == weight.shape[0],
             f"channel mismatch: input {input.shape[-1]} vs weight {weight.shape[0]}")
    _require(bias.shape == (weight.shape[1],), "bias/weight extent mismatch")
    out = np.einsum("...i,io->...o", np.ascontiguousarray(input),
                    np.ascontiguousarray(weight), optimize=False)
    return out + bias


def activation(x):
    """ELU (alpha=1), the frozen model nonlinearity.

    Evaluated in float64 and rounded back to float32 so the result is a pure
    function of each element's value, independent of array shape or SIMD
    batching.
    """
    x = check_tensor(x, name="x")
    xs = x.astype(np.float64)
    neg = xs <= 0.0
    out = xs.copy()
    out[neg] = np.expm1(xs[neg])
    return out.astype(F32)


def tanh32(x):
    """float32 tanh via the float64 path; same reproducibility rationale."""
    x = check_tensor(x, name="x")
    return np.tanh(x.astype(np.float64)).astype(F32)
