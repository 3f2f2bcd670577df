"""Per-channel pixel distributions and their integer quantization.

Converts a pixel's mixture-of-logistics parameters into an exact pmf over
{0..255}, quantizes it to the 16-bit integer cdf the stream coder consumes,
and evaluates log-likelihoods.  Everything here is a pure function of its
inputs, and the batched entry points are bit-identical to the single-pixel
ones (reductions run per row in a fixed order), so encoder and decoder can
batch differently -- or not at all -- and still build identical tables.
"""

import numpy as np

from .errors import LoclcError, ShapeError

PRECISION = 16
MASS_TOTAL = 1 << PRECISION

_EDGES = np.arange(257, dtype=np.float64) - 0.5


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def pmf_rows(params_list, channel=0, priors_rows=None):
    """Stacked pmfs for a batch of pixels' parameters, one row each.

    params_list: sequence of OutputParams (or None for exactly-uniform).
    priors_rows: per-pixel sequences of already-known earlier channel bytes;
    required for channel > 0, where the mean of each mixture is shifted
    linearly by those values scaled to [-1, 1].
    """
    B = len(params_list)
    if any(p is None for p in params_list):
        if not all(p is None for p in params_list):
            raise ShapeError("cannot mix uniform and mixture params in one batch")
        return np.full((B, 256), 1.0 / 256.0)

    logits = np.stack([p.logits for p in params_list]).astype(np.float64)
    mu = np.stack([p.means[channel] for p in params_list]).astype(np.float64)
    ls = np.stack([p.log_scales[channel] for p in params_list]).astype(np.float64)
    if channel > 0:
        if priors_rows is None or any(len(pr) < channel for pr in priors_rows):
            raise ShapeError(f"channel {channel} needs {channel} prior values per pixel")
        coeffs = np.stack([p.coeffs for p in params_list]).astype(np.float64)
        scaled = np.asarray([[v / 127.5 - 1.0 for v in pr[:channel]]
                             for pr in priors_rows], dtype=np.float64)
        if channel == 1:
            mu = mu + coeffs[:, 0] * scaled[:, 0:1]
        else:
            mu = mu + coeffs[:, 1] * scaled[:, 0:1] + coeffs[:, 2] * scaled[:, 1:2]

    if not (np.all(np.isfinite(logits)) and np.all(np.isfinite(mu))
            and np.all(np.isfinite(ls))):
        raise ValueError("non-finite distribution parameters")

    # logistic cdf at bin edges x-0.5, x = 0..256; outermost edges pinned to
    # 0 and 1 so bins 0 and 255 absorb the open tails.
    inv_s = np.exp(-ls)
    z = (_EDGES[None, None, :] - mu[:, :, None]) * inv_s[:, :, None]
    cdf = _sigmoid(z)
    cdf[:, :, 0] = 0.0
    cdf[:, :, 256] = 1.0
    per_mix = np.diff(cdf, axis=2)

    m = logits.max(axis=1, keepdims=True)
    e = np.exp(logits - m)
    weights = e / e.sum(axis=1, keepdims=True)
    out = np.einsum("bk,bkx->bx", weights, per_mix, optimize=False)
    return np.maximum(out, 0.0)


def pmf(params, channel=0, prior_values=()):
    """Probability mass over byte values {0..255} for one pixel's channel.

    params: an OutputParams (means/log-scales in byte units), or None for
    the exactly-uniform distribution.  Bin x receives
    sigma((x+0.5-mu)/s) - sigma((x-0.5-mu)/s); bins 0 and 255 absorb the
    tails.
    """
    return pmf_rows([params], channel, [list(prior_values)])[0]


def quantize_rows(p):
    """Integer-quantize a (B, 256) batch of pmfs to cumulative tables.

    Per row: floor-proportional allocation at 2**16 total, remainder units
    handed out in descending fractional-residual order (ties to the lower
    symbol), then zero-mass symbols bumped to 1 by taking units from the
    row's largest symbol.  The rule is frozen: the bitstream depends on it.
    """
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 2 or p.shape[1] != 256:
        raise ShapeError(f"pmf batch must be (B, 256), got {p.shape}")
    if not np.all(np.isfinite(p)) or np.any(p < 0):
        raise ValueError("pmf entries must be finite and non-negative")
    totals = p.sum(axis=1, keepdims=True)
    if np.any(totals <= 0):
        raise ValueError("pmf sums to zero")

    scaled = (p / totals) * MASS_TOTAL
    freqs = np.floor(scaled).astype(np.int64)
    resid = scaled - freqs
    remainder = MASS_TOTAL - freqs.sum(axis=1)
    if np.any(remainder < 0):
        raise LoclcError("quantizer invariant violated: floor sum exceeds total")
    order = np.argsort(-resid, axis=1, kind="stable")
    inc = np.zeros_like(freqs)
    np.put_along_axis(
        inc, order,
        (np.arange(256)[None, :] < remainder[:, None]).astype(np.int64), axis=1)
    freqs += inc

    for b in np.flatnonzero((freqs == 0).any(axis=1)):
        row = freqs[b]
        for zi in np.flatnonzero(row == 0):
            donor = int(np.argmax(row))
            if row[donor] <= 1:
                raise LoclcError("quantizer cannot reserve unit mass")
            row[donor] -= 1
            row[zi] = 1

    cdf = np.zeros((p.shape[0], 257), dtype=np.uint32)
    np.cumsum(freqs, axis=1, out=cdf[:, 1:])
    return cdf


def quantize(p):
    """Cumulative table for one pmf: length 257, c[0], c[256] = 0, 2**16,
    every symbol's mass >= 1."""
    p = np.asarray(p, dtype=np.float64)
    if p.shape != (256,):
        raise ShapeError(f"pmf must have 256 entries, got {p.shape}")
    return quantize_rows(p[None])[0]


def log2_likelihood(image, params_grid):
    """Total code length -sum(log2 pmf[x]) in bits for an image.

    params_grid: per-pixel OutputParams, laid out as rows of columns (the
    shape forward_image produces).
    """
    image = np.asarray(image)
    H, W, C = image.shape
    bits = 0.0
    for r in range(H):
        for c in range(W):
            params = params_grid[r][c]
            priors = []
            for ch in range(C):
                x = int(image[r, c, ch])
                px = pmf(params, ch, priors)[x]
                if px <= 0.0:
                    raise LoclcError(f"zero-probability symbol at {(r, c, ch)}")
                bits -= float(np.log2(px))
                priors.append(x)
    return bits


def bits_per_dim(bits, image):
    image = np.asarray(image)
    return bits / image.size
