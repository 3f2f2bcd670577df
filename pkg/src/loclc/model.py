"""The local autoregressive network and its weight container.

A pixel's distribution parameters are produced from its context window by a
masked first convolution of kernel height h+1 and width 2h+1 (masked cells
are stored as exact zeros, so masking is free at inference), a stack of 1x1
residual blocks, and an affine head.  The dependency horizon therefore lives
entirely in the first kernel, which is also why shearing the model touches
only that tensor.

Head output layout per pixel, for K mixture components:
  C=1: [logits K][means K][log-scales K]                  (3K values)
  C=3: [logits K][means 3K][log-scales 3K][coeffs 3K]     (10K values)
Raw head values are mapped into byte units: mean = 127.5*raw + 127.5,
log-scale = max(raw, -7) + log(127.5), coupling coeff = 127.5*tanh(raw).
The mapping constants are frozen f32 literals; they are part of the weight
format version.
"""

import struct
from dataclasses import dataclass, field

import numpy as np

from . import nnkernel
from .errors import ShapeError, WeightFormatError
from .nnkernel import F32, activation, conv_patches, conv1x1, tanh32

WEIGHT_MAGIC = b"NLWT"
WEIGHT_VERSION = 1
_WHEADER = struct.Struct("<BBBHBBB")

MEAN_SCALE = F32(127.5)
MEAN_BIAS = F32(127.5)
LOG_SCALE_OFFSET = F32(4.848116397857666)   # float32(log(127.5))
MIN_RAW_LOG_SCALE = F32(-7.0)
COEFF_SCALE = F32(127.5)
PIXEL_SCALE = F32(1.0) / F32(255.0)


def fnv1a64(data):
    """FNV-1a 64-bit hash of a bytes-like object."""
    h = 0xCBF29CE484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


@dataclass(frozen=True)
class ModelConfig:
    h: int
    channels: int
    hidden: int
    n_resblocks: int
    n_mixtures: int

    def __post_init__(self):
        if self.h < 1:
            raise ShapeError(f"horizon must be >= 1, got {self.h}")
        if self.channels not in (1, 3):
            raise ShapeError(f"channels must be 1 or 3, got {self.channels}")
        if self.hidden < 1 or self.n_resblocks < 0 or self.n_mixtures < 1:
            raise ShapeError("hidden >= 1, n_resblocks >= 0, n_mixtures >= 1 required")

    @property
    def kernel_height(self):
        return self.h + 1

    @property
    def kernel_width(self):
        return 2 * self.h + 1

    @property
    def sheared_kernel_width(self):
        return self.h * (self.h + 2)

    @property
    def params_per_pixel(self):
        return self.n_mixtures * (3 if self.channels == 1 else 10)


def kernel_mask(config, sheared=False):
    """Boolean (kh, kw) map of kernel cells allowed to be nonzero.

    Unsheared: rows above the current one are fully usable; in the bottom
    row only the h cells left of the current pixel are.  Sheared: row r
    (0-indexed) is shifted right by r*(h+1).
    """
    h = config.h
    if not sheared:
        mask = np.zeros((h + 1, 2 * h + 1), dtype=bool)
        mask[:h, :] = True
        mask[h, :h] = True
        return mask
    mask = np.zeros((h + 1, config.sheared_kernel_width), dtype=bool)
    for r in range(h):
        mask[r, r * (h + 1):r * (h + 1) + 2 * h + 1] = True
    mask[h, h * (h + 1):h * (h + 1) + h] = True
    return mask


@dataclass
class WeightSet:
    first_kernel: np.ndarray          # (h+1, 2h+1 | h(h+2), C, hidden)
    first_bias: np.ndarray            # (hidden,)
    blocks: tuple                     # ((w1, b1, w2, b2), ...), all 1x1 shapes
    head_w: np.ndarray                # (hidden, P)
    head_b: np.ndarray                # (P,)
    sheared: bool = False
    _compact: tuple = field(default=None, repr=False, compare=False)

    def named_tensors(self):
        """Tensors in the frozen serialization order."""
        yield "first_kernel", self.first_kernel
        yield "first_bias", self.first_bias
        for idx, (w1, b1, w2, b2) in enumerate(self.blocks):
            yield f"res{idx}_w1", w1
            yield f"res{idx}_b1", b1
            yield f"res{idx}_w2", w2
            yield f"res{idx}_b2", b2
        yield "head_w", self.head_w
        yield "head_b", self.head_b


@dataclass
class OutputParams:
    """Mixture parameters for one pixel, in byte units."""
    logits: np.ndarray                # (K,)
    means: np.ndarray                 # (C, K)
    log_scales: np.ndarray            # (C, K)
    coeffs: np.ndarray = None         # (3, K) when C == 3


def _expected_shapes(config):
    shapes = {
        "first_kernel": (config.kernel_height, config.kernel_width,
                         config.channels, config.hidden),
        "first_bias": (config.hidden,),
        "head_w": (config.hidden, config.params_per_pixel),
        "head_b": (config.params_per_pixel,),
    }
    for idx in range(config.n_resblocks):
        shapes[f"res{idx}_w1"] = (config.hidden, config.hidden)
        shapes[f"res{idx}_b1"] = (config.hidden,)
        shapes[f"res{idx}_w2"] = (config.hidden, config.hidden)
        shapes[f"res{idx}_b2"] = (config.hidden,)
    return shapes


def validate_weights(config, weights):
    shapes = _expected_shapes(config)
    if weights.sheared:
        shapes["first_kernel"] = (config.kernel_height, config.sheared_kernel_width,
                                  config.channels, config.hidden)
    for name, tensor in weights.named_tensors():
        if name not in shapes:
            raise WeightFormatError(f"unexpected tensor {name!r}")
        if tensor.shape != shapes[name]:
            raise WeightFormatError(
                f"{name}: shape {tensor.shape}, expected {shapes[name]}")
        if tensor.dtype != F32:
            raise WeightFormatError(f"{name}: dtype must be float32")
    mask = kernel_mask(config, weights.sheared)
    if np.any(weights.first_kernel[~mask] != 0.0):
        raise WeightFormatError("nonzero weight in a masked kernel cell")


def _compact_kernel(weights):
    """Nonzero first-kernel cells in (row, col) order, for the contraction
    that skips structural zeros.  Adding a zero product never changes a
    float32 accumulator (the running sum can never be -0.0), so dropping
    those terms is bit-transparent; sheared kernels are mostly zeros, which
    makes this the natural way to evaluate them."""
    if weights._compact is None:
        support = np.any(weights.first_kernel != 0.0, axis=(2, 3))
        r_idx, c_idx = np.nonzero(support)
        kernel = np.ascontiguousarray(weights.first_kernel[r_idx, c_idx])
        weights._compact = (r_idx, c_idx, kernel)
    return weights._compact


def forward_batch(patches, weights):
    """Distribution parameters for a batch of context windows.

    patches: (B, kh, kw, C) float32 raw byte values (zero padding included;
    masked cells may hold anything).  Output is bit-identical however the
    batch is partitioned.
    """
    patches = nnkernel.as_f32(patches)
    if patches.ndim == 3:
        patches = patches[None]
    if weights.sheared:
        r_idx, c_idx, kernel = _compact_kernel(weights)
        x = patches[:, r_idx, c_idx, :] * PIXEL_SCALE
        z = np.einsum("bki,kio->bo", x, kernel, optimize=False) + weights.first_bias
    else:
        x = patches * PIXEL_SCALE
        z = conv_patches(x, weights.first_kernel) + weights.first_bias
    z = activation(z)
    for (w1, b1, w2, b2) in weights.blocks:
        t = conv1x1(activation(z), w1, b1)
        t = conv1x1(activation(t), w2, b2)
        z = z + t
    raw = conv1x1(activation(z), weights.head_w, weights.head_b)

    C = weights.first_kernel.shape[2]
    K = raw.shape[-1] // (3 if C == 1 else 10)
    logits = raw[:, :K]
    means = MEAN_SCALE * raw[:, K:K + C * K] + MEAN_BIAS
    ls = np.maximum(raw[:, K + C * K:K + 2 * C * K], MIN_RAW_LOG_SCALE) + LOG_SCALE_OFFSET
    means = means.reshape(-1, C, K)
    ls = ls.reshape(-1, C, K)
    if C == 3:
        coeffs = (COEFF_SCALE * tanh32(raw[:, K + 6 * K:])).reshape(-1, 3, K)
        return [OutputParams(logits[b], means[b], ls[b], coeffs[b])
                for b in range(raw.shape[0])]
    return [OutputParams(logits[b], means[b], ls[b]) for b in range(raw.shape[0])]


def forward_patch(patch, weights):
    """Parameters for a single (h+1, 2h+1, C) context window."""
    if patch.ndim != 3:
        raise ShapeError(f"patch must be rank 3, got shape {patch.shape}")
    return forward_batch(patch[None], weights)[0]


def forward_image(image, weights, config):
    """Per-pixel parameters for a whole image (training/eval path).

    Returns a list of H rows of W OutputParams.  Evaluates the same gathered
    patches as the codec, batched one image row at a time.
    """
    from .schedule import gather_patch  # local import: schedule pulls no model deps

    image = np.asarray(image)
    H, W, _ = image.shape
    h = config.h
    grid = []
    for i in range(1, H + 1):
        patches = np.stack([gather_patch(image, i, j, h) for j in range(1, W + 1)])
        grid.append(forward_batch(patches, weights))
    return grid


def shear_weights(weights, config):
    """Shear the first convolution kernel; all other tensors are shared.

    Row r (0-indexed) moves right by r*(h+1) into a width-h(h+2) kernel.
    One-way: shearing a sheared set is rejected.
    """
    if weights.sheared:
        raise ValueError("weights are already sheared")
    h = config.h
    kw_s = config.sheared_kernel_width
    kernel = weights.first_kernel
    out = np.zeros((h + 1, kw_s) + kernel.shape[2:], dtype=F32)
    for r in range(h + 1):
        shift = r * (h + 1)
        keep = min(2 * h + 1, kw_s - shift)
        out[r, shift:shift + keep] = kernel[r, :keep]
        # cells that fall off the sheared kernel are masked zeros by invariant
        if keep < 2 * h + 1 and np.any(kernel[r, keep:] != 0.0):
            raise WeightFormatError("nonzero masked cell encountered while shearing")
    return WeightSet(first_kernel=out, first_bias=weights.first_bias,
                     blocks=weights.blocks, head_w=weights.head_w,
                     head_b=weights.head_b, sheared=True)


def save_weights(config, weights):
    """Serialize to the NLWT byte format (little-endian, FNV-1a-64 trailer)."""
    validate_weights(config, weights)
    out = bytearray()
    out += WEIGHT_MAGIC
    out += struct.pack("<BBBHBBB", WEIGHT_VERSION, config.h, config.channels,
                       config.hidden, config.n_resblocks, config.n_mixtures,
                       1 if weights.sheared else 0)
    for name, tensor in weights.named_tensors():
        nb = name.encode("utf-8")
        out += struct.pack("<H", len(nb)) + nb
        out += struct.pack("<B", tensor.ndim)
        out += struct.pack(f"<{tensor.ndim}I", *tensor.shape)
        out += np.ascontiguousarray(tensor, dtype="<f4").tobytes()
    out += struct.pack("<Q", fnv1a64(out))
    return bytes(out)


def load_weights(data):
    """Parse NLWT bytes back into (ModelConfig, WeightSet)."""
    if len(data) < 4 or data[:4] != WEIGHT_MAGIC:
        raise WeightFormatError("not a weight file (bad magic)")
    if len(data) < 4 + _WHEADER.size + 8:
        raise WeightFormatError("weight file truncated")
    version, h, channels, hidden, n_res, n_mix, sheared = _WHEADER.unpack_from(data, 4)
    if version != WEIGHT_VERSION:
        raise WeightFormatError(f"unsupported weight version {version}")
    body, trailer = data[:-8], data[-8:]
    if struct.unpack("<Q", trailer)[0] != fnv1a64(body):
        raise WeightFormatError("weight file hash mismatch")

    try:
        config = ModelConfig(h=h, channels=channels, hidden=hidden,
                             n_resblocks=n_res, n_mixtures=n_mix)
    except ShapeError as e:
        raise WeightFormatError(f"invalid config in weight file: {e}") from e

    pos = 4 + _WHEADER.size
    tensors = {}
    expected = _expected_shapes(config)
    if sheared:
        expected["first_kernel"] = (config.kernel_height, config.sheared_kernel_width,
                                    config.channels, config.hidden)
    order = (["first_kernel", "first_bias"]
             + [f"res{i}_{t}" for i in range(n_res) for t in ("w1", "b1", "w2", "b2")]
             + ["head_w", "head_b"])
    for want in order:
        try:
            (nlen,) = struct.unpack_from("<H", body, pos)
            pos += 2
            name = body[pos:pos + nlen].decode("utf-8")
            pos += nlen
            (rank,) = struct.unpack_from("<B", body, pos)
            pos += 1
            dims = struct.unpack_from(f"<{rank}I", body, pos)
            pos += 4 * rank
            count = int(np.prod(dims))
            payload = body[pos:pos + 4 * count]
            if len(payload) != 4 * count:
                raise struct.error("tensor payload short")
            pos += 4 * count
        except struct.error as e:
            raise WeightFormatError(f"weight file truncated in tensor block: {e}") from e
        if name != want:
            raise WeightFormatError(f"tensor order: expected {want!r}, found {name!r}")
        tensors[name] = np.frombuffer(payload, dtype="<f4").reshape(dims).copy()
    if pos != len(body):
        raise WeightFormatError(f"{len(body) - pos} trailing bytes in weight file")

    weights = WeightSet(
        first_kernel=tensors["first_kernel"],
        first_bias=tensors["first_bias"],
        blocks=tuple((tensors[f"res{i}_w1"], tensors[f"res{i}_b1"],
                      tensors[f"res{i}_w2"], tensors[f"res{i}_b2"])
                     for i in range(n_res)),
        head_w=tensors["head_w"],
        head_b=tensors["head_b"],
        sheared=bool(sheared),
    )
    validate_weights(config, weights)
    return config, weights


def random_weights(config, seed=0, scale=0.2):
    """Small random weights for tests and benchmarks; masked cells zeroed.

    The head's log-scale biases start at -0.6 so an untrained model spreads
    mass widely (near-uniform-ish code lengths) instead of collapsing.
    """
    rng = np.random.default_rng(seed)

    def t(*shape, s=scale):
        return (rng.standard_normal(shape) * s).astype(F32)

    kernel = t(config.kernel_height, config.kernel_width, config.channels,
               config.hidden)
    kernel[~kernel_mask(config)] = 0.0
    head_b = t(config.params_per_pixel, s=0.05)
    K, C = config.n_mixtures, config.channels
    head_b[K + C * K:K + 2 * C * K] = -0.6
    weights = WeightSet(
        first_kernel=kernel,
        first_bias=t(config.hidden, s=0.05),
        blocks=tuple((t(config.hidden, config.hidden), t(config.hidden, s=0.05),
                      t(config.hidden, config.hidden), t(config.hidden, s=0.05))
                     for _ in range(config.n_resblocks)),
        head_w=t(config.hidden, config.params_per_pixel),
        head_b=head_b,
    )
    return weights


class LocalModel:
    """Bundled (config, weights) with the caches the codec wants."""

    def __init__(self, config, weights):
        validate_weights(config, weights)
        if weights.sheared:
            raise ValueError("LocalModel wants unsheared weights; decoders shear on demand")
        self.config = config
        self.weights = weights
        # the content hash IS the weight file's trailing FNV value
        self.hash = fnv1a64(save_weights(config, weights)[:-8])
        self._sheared = None

    @property
    def h(self):
        return self.config.h

    @property
    def channels(self):
        return self.config.channels

    def sheared_weights(self):
        if self._sheared is None:
            self._sheared = shear_weights(self.weights, self.config)
        return self._sheared

    def predict_batch(self, patches, sheared=False):
        ws = self.sheared_weights() if sheared else self.weights
        return forward_batch(patches, ws)

    def save(self, path):
        with open(path, "wb") as f:
            f.write(save_weights(self.config, self.weights))

    @classmethod
    def load(cls, path):
        with open(path, "rb") as f:
            config, weights = load_weights(f.read())
        return cls(config, weights)


class UniformModel:
    """Degenerate model whose every pixel distribution is exactly uniform.

    Useful as a codec baseline: bits-per-dim approaches 8 exactly.  Carries a
    horizon so the schedules and container header still make sense.
    """

    def __init__(self, h=1, channels=1):
        self.h = h
        self.channels = channels
        self.hash = fnv1a64(b"LOCLC-UNIFORM" + bytes([h, channels]))

    def predict_batch(self, patches, sheared=False):
        n = patches.shape[0] if patches.ndim == 4 else 1
        return [None] * n

    def sheared_weights(self):
        return None
