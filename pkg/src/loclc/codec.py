"""End-to-end compressor and the three bit-compatible decoders.

One canonical symbol order (wavefront step, then row, channels innermost) is
shared by the encoder and every decoder, so a single stream serves all
schemes and the choice of scheme -- or worker count -- can never change the
bytes.  The encoder computes each pixel's parameters through the same
gather-patch inference the decoders use; batching is free to differ because
every kernel in the pipeline is bit-identical under any batch partition.

Decoders:
  sequential -- one forward pass per pixel, H*W evaluation rounds.
  parallel   -- walk the wavefront schedule; per step, batch the member
                pixels' context windows, compute their predictive
                distributions in one round, then decode that step's symbols
                in row order from the single rANS state.
                W + (H-1)*(h+1) rounds.
  sheared    -- same wavefront on the shear layout: a step's windows are
                adjacent row-windows of one contiguous buffer slab, read
                with the pre-sheared kernel, and decoded values land in one
                contiguous column.  Same round count.

First-channel distribution tables are built for a whole step at once; for
3-channel images the G and B tables depend on this pixel's just-decoded
earlier channels, so they are built per pixel (identical values either way).
"""

import struct
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import schedule, shear
from .distribution import pmf, pmf_rows, quantize, quantize_rows
from .errors import ModelMismatchError, ShapeError, StreamFormatError
from .rans import RansDecoder, RansEncoder

STREAM_MAGIC = b"NLLC"
STREAM_VERSION = 1
_HEADER = struct.Struct("<4sBIIBBQI")

_ENCODE_CHUNK = 512  # fixed batching unit; independent of worker count


class Scheme(Enum):
    SEQUENTIAL = "sequential"
    PARALLEL = "parallel"
    SHEARED = "sheared"

    @classmethod
    def parse(cls, name):
        aliases = {
            "seq": cls.SEQUENTIAL, "sequential": cls.SEQUENTIAL,
            "par": cls.PARALLEL, "parallel": cls.PARALLEL,
            "shear": cls.SHEARED, "sheared": cls.SHEARED,
        }
        try:
            return aliases[str(name).lower()]
        except KeyError:
            raise ValueError(f"unknown scheme {name!r}") from None


@dataclass
class CompressedStream:
    height: int
    width: int
    channels: int
    horizon: int
    model_hash: int
    payload: bytes

    @property
    def bits(self):
        return 8 * len(self.payload)

    @property
    def bpd(self):
        return self.bits / (self.height * self.width * self.channels)

    def serialize(self):
        return _HEADER.pack(STREAM_MAGIC, STREAM_VERSION, self.height, self.width,
                            self.channels, self.horizon, self.model_hash,
                            len(self.payload)) + self.payload

    @classmethod
    def parse(cls, data):
        if len(data) < 4 or data[:4] != STREAM_MAGIC:
            raise StreamFormatError("not a compressed stream (bad magic)")
        if len(data) < _HEADER.size:
            raise StreamFormatError("stream header truncated")
        magic, version, H, W, C, h, mhash, plen = _HEADER.unpack_from(data)
        if version != STREAM_VERSION:
            raise StreamFormatError(f"unsupported stream version {version}")
        payload = data[_HEADER.size:]
        if len(payload) != plen:
            raise StreamFormatError(
                f"payload length {len(payload)} does not match header {plen}")
        return cls(height=H, width=W, channels=C, horizon=h,
                   model_hash=mhash, payload=payload)


def _check_model(stream, model):
    if stream.model_hash != model.hash:
        raise ModelMismatchError(
            f"stream was encoded with model {stream.model_hash:016x}, "
            f"got {model.hash:016x}")
    if stream.channels != model.channels or stream.horizon != model.h:
        raise ModelMismatchError("stream header disagrees with model geometry")


def _context_windows(canvas, h):
    """Per-pixel context views over a canvas padded h above and h each side:
    windows[r, c] is the (kh, kw) window of 0-indexed pixel (r, c)."""
    return sliding_window_view(canvas, (h + 1, 2 * h + 1), axis=(0, 1))


def _predict_chunked(model, patches, threads, sheared=False):
    """model.predict_batch, optionally fanned out over a thread pool.

    Chunk boundaries never affect values (fixed-order accumulation), so any
    worker count yields identical parameters.
    """
    n = patches.shape[0]
    if threads <= 1 or n < 2 * threads:
        return model.predict_batch(patches, sheared=sheared)
    bounds = np.linspace(0, n, threads + 1, dtype=int)
    spans = [(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if a < b]
    with ThreadPoolExecutor(max_workers=len(spans)) as pool:
        parts = pool.map(
            lambda span: model.predict_batch(patches[span[0]:span[1]], sheared=sheared),
            spans)
        out = []
        for part in parts:
            out.extend(part)
    return out


def encode(image, model, threads=1):
    """Compress an (H, W, C) uint8 image; bytes are scheme- and
    worker-count-independent."""
    image = np.asarray(image, dtype=np.uint8)
    if image.ndim != 3:
        raise ShapeError(f"image must be (H, W, C), got shape {image.shape}")
    H, W, C = image.shape
    if C != model.channels:
        raise ShapeError(f"model expects {model.channels} channels, image has {C}")
    h = model.h

    canvas = np.zeros((H + h, W + 2 * h, C), dtype=np.float32)
    canvas[h:, h:h + W] = image
    windows = _context_windows(canvas, h)

    order = [(i, j) for step in schedule.build(H, W, h).steps for (i, j) in step]
    coded = []  # (symbol, cdf) in canonical order
    for lo in range(0, len(order), _ENCODE_CHUNK):
        chunk = order[lo:lo + _ENCODE_CHUNK]
        patches = np.stack(
            [np.moveaxis(windows[i - 1, j - 1], 0, -1) for (i, j) in chunk])
        params = _predict_chunked(model, patches, threads)
        values = np.stack([image[i - 1, j - 1] for (i, j) in chunk])
        for ch in range(C):
            cdfs = quantize_rows(pmf_rows(params, ch, values[:, :ch]))
            for b in range(len(chunk)):
                coded.append((lo * C + b * C + ch, int(values[b, ch]), cdfs[b]))

    coded.sort(key=lambda t: t[0])  # canonical order: channels innermost
    enc = RansEncoder()
    for _, sym, cdf in reversed(coded):
        enc.encode_symbol(sym, cdf)
    return CompressedStream(height=H, width=W, channels=C, horizon=h,
                            model_hash=model.hash, payload=enc.flush())


def _decode_step_symbols(dec, step_positions, params, out, C, write):
    """Decode one wavefront step's symbols in canonical (row, channel) order.

    First-channel cdf tables are precomputed for the whole step; later
    channels depend on this pixel's fresh values and are built per pixel.
    """
    cdfs0 = quantize_rows(pmf_rows(params, 0))
    for b, (i, j) in enumerate(step_positions):
        vals = [dec.decode_symbol(cdfs0[b])]
        for ch in range(1, C):
            cdf = quantize(pmf(params[b], ch, vals))
            vals.append(dec.decode_symbol(cdf))
        out[i - 1, j - 1] = vals
        write(i, j, vals)


def _decode_sequential(stream, model, threads=1):
    _check_model(stream, model)
    H, W, C, h = stream.height, stream.width, stream.channels, stream.horizon
    dec = RansDecoder(stream.payload)
    out = np.zeros((H, W, C), dtype=np.uint8)
    canvas = np.zeros((H + h, W + 2 * h, C), dtype=np.float32)
    windows = _context_windows(canvas, h)

    def write(i, j, vals):
        canvas[i - 1 + h, j - 1 + h] = vals

    rounds = 0
    for step in schedule.build(H, W, h).steps:
        for (i, j) in step:
            patch = np.moveaxis(windows[i - 1, j - 1], 0, -1)
            params = model.predict_batch(patch[None])
            rounds += 1
            _decode_step_symbols(dec, [(i, j)], params, out, C, write)
    dec.expect_end()
    return out, rounds


def _decode_parallel(stream, model, threads=1):
    _check_model(stream, model)
    H, W, C, h = stream.height, stream.width, stream.channels, stream.horizon
    dec = RansDecoder(stream.payload)
    out = np.zeros((H, W, C), dtype=np.uint8)
    canvas = np.zeros((H + h, W + 2 * h, C), dtype=np.float32)
    windows = _context_windows(canvas, h)

    def write(i, j, vals):
        canvas[i - 1 + h, j - 1 + h] = vals

    rounds = 0
    for step in schedule.build(H, W, h).steps:
        if not step:
            continue
        rows = np.fromiter((i - 1 for (i, _) in step), dtype=np.intp)
        cols = np.fromiter((j - 1 for (_, j) in step), dtype=np.intp)
        patches = np.moveaxis(windows[rows, cols], 1, -1)
        params = _predict_chunked(model, patches, threads)
        rounds += 1
        _decode_step_symbols(dec, step, params, out, C, write)
    dec.expect_end()
    return out, rounds


def _decode_sheared(stream, model, threads=1):
    _check_model(stream, model)
    H, W, C, h = stream.height, stream.width, stream.channels, stream.horizon
    dec = RansDecoder(stream.payload)
    out = np.zeros((H, W, C), dtype=np.uint8)
    o = h + 1
    Wk = h * (h + 2)
    L = shear.sheared_length(H, W, o)

    # shear the model once; shear an empty image buffer, padded h rows above
    # and Wk columns left so every window stays in bounds.
    _ = model.sheared_weights()
    padbuf = np.zeros((H + h, L + Wk, C), dtype=np.float32)
    windows = np.moveaxis(
        sliding_window_view(padbuf, (h + 1, Wk), axis=(0, 1)), 2, -1)
    steps = schedule.build(H, W, h).steps  # step c <-> sheared column c

    def write(i, j, vals):
        padbuf[i - 1 + h, j + (i - 1) * o - 1 + Wk] = vals

    rounds = 0
    for c in range(1, L + 1):
        step = steps[c - 1]
        if not step:
            continue
        # a step's rows are consecutive, so its context windows are one
        # contiguous slice of the window view: the shear layout's payoff
        i0 = step[0][0] - 1
        patches = windows[i0:i0 + len(step), c - 1]
        params = _predict_chunked(model, patches, threads, sheared=True)
        rounds += 1
        _decode_step_symbols(dec, step, params, out, C, write)
    dec.expect_end()
    return out, rounds


_DECODERS = {
    Scheme.SEQUENTIAL: _decode_sequential,
    Scheme.PARALLEL: _decode_parallel,
    Scheme.SHEARED: _decode_sheared,
}


def decode_sequential(stream, model, threads=1):
    return _decode_sequential(stream, model, threads)[0]


def decode_parallel(stream, model, threads=1):
    return _decode_parallel(stream, model, threads)[0]


def decode_sheared(stream, model, threads=1):
    return _decode_sheared(stream, model, threads)[0]


def decode(stream, model, scheme=Scheme.SHEARED, threads=1):
    if not isinstance(scheme, Scheme):
        scheme = Scheme.parse(scheme)
    return _DECODERS[scheme](stream, model, threads)[0]


def measure(model, image, scheme, repeats=3, threads=1):
    """Timing/rounds/size record for one (image, scheme) pair.

    Wall time is the median over `repeats` decodes; rounds is the number of
    model evaluation rounds the decode performed.
    """
    if not isinstance(scheme, Scheme):
        scheme = Scheme.parse(scheme)
    stream = encode(image, model, threads=threads)
    decoder = _DECODERS[scheme]
    times = []
    rounds = None
    decoded = None
    for _ in range(max(1, repeats)):
        t0 = time.perf_counter()
        decoded, rounds = decoder(stream, model, threads)
        times.append(time.perf_counter() - t0)
    if not np.array_equal(decoded, image):
        raise AssertionError("decode mismatch during measurement")
    return {
        "scheme": scheme.value,
        "height": stream.height,
        "width": stream.width,
        "channels": stream.channels,
        "wall_seconds": float(np.median(times)),
        "rounds": rounds,
        "bits": stream.bits,
        "bpd": stream.bpd,
    }
