"""Range asymmetric numeral system stream coder.

Stack (LIFO) semantics: the encoder must be fed symbols in *reverse* of the
order the decoder will read them. Frozen conventions, which define the
on-disk payload layout:

  - 16-bit frequency precision: every cdf sums to 2**16,
  - 32-bit state with lower renormalization bound L = 2**16,
  - byte-wise renormalization,
  - payload = 4-byte little-endian final state, then renormalization bytes
    in the order the decoder consumes them (reverse of emission).

The decoder's state returns to L exactly when every encoded symbol has been
read and every payload byte consumed; anything else is a corrupt stream.
"""

import struct

import numpy as np

from .errors import CorruptStreamError

PRECISION = 16
MASS_TOTAL = 1 << PRECISION  # every QuantizedCdf sums to this
RANS_L = 1 << 16             # renormalization lower bound


class RansEncoder:
    """Accumulates symbols (in reverse decode order) into a payload."""

    def __init__(self):
        self.state = RANS_L
        self._emitted = bytearray()

    def encode_symbol(self, symbol, cdf):
        start = int(cdf[symbol])
        freq = int(cdf[symbol + 1]) - start
        if freq <= 0:
            raise ValueError(f"symbol {symbol} has zero mass")
        x = self.state
        x_max = freq << 8
        while x >= x_max:
            self._emitted.append(x & 0xFF)
            x >>= 8
        self.state = ((x // freq) << PRECISION) + start + (x % freq)

    def flush(self):
        """Final payload bytes; the encoder must not be reused afterwards."""
        return struct.pack("<I", self.state) + bytes(reversed(self._emitted))


class RansDecoder:
    """Reads symbols from a payload produced by :class:`RansEncoder`."""

    def __init__(self, payload):
        if len(payload) < 4:
            raise CorruptStreamError("payload shorter than the 4-byte state flush")
        self.state = struct.unpack_from("<I", payload)[0]
        self._payload = payload
        self._pos = 4

    def decode_symbol(self, cdf):
        x = self.state
        slot = x & (MASS_TOTAL - 1)
        symbol = int(np.searchsorted(cdf, slot, side="right")) - 1
        start = int(cdf[symbol])
        freq = int(cdf[symbol + 1]) - start
        x = freq * (x >> PRECISION) + slot - start
        while x < RANS_L:
            if self._pos >= len(self._payload):
                raise CorruptStreamError("payload exhausted mid-symbol")
            x = (x << 8) | self._payload[self._pos]
            self._pos += 1
        self.state = x
        return symbol

    def expect_end(self):
        """Verify the stream is fully and exactly consumed."""
        if self._pos != len(self._payload):
            raise CorruptStreamError(
                f"{len(self._payload) - self._pos} unread payload bytes remain")
        if self.state != RANS_L:
            raise CorruptStreamError("final coder state mismatch")
