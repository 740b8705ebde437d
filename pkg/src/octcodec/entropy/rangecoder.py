"""Deterministic integer range coder.

32-bit range, byte-at-a-time renormalization, carry propagation through a
cached byte plus a run of pending 0xFF bytes. Probabilities enter as
cumulative frequency tables quantized to a fixed 16-bit total, so encoder
and decoder stay bit-exact on any platform (integer arithmetic only).
"""

import numpy as np

from ..errors import BitstreamError

PRECISION = 16
CDF_TOTAL = 1 << PRECISION  # 65536
_TOP = 1 << 24
_MASK32 = 0xFFFFFFFF


def quantize_cdf(pmf: np.ndarray) -> np.ndarray:
    """Turn a probability vector into a cumulative table with total 65536.

    Every symbol keeps a frequency of at least 1. Returns an int64 array of
    length len(pmf) + 1 with cdf[0] = 0 and cdf[-1] = 65536.
    """
    pmf = np.asarray(pmf, dtype=np.float64)
    n = pmf.size
    if n < 1:
        raise BitstreamError("cannot quantize an empty pmf")
    if n > CDF_TOTAL:
        raise BitstreamError(f"alphabet of {n} symbols exceeds CDF precision")
    total = pmf.sum()
    if not np.isfinite(total) or total <= 0:
        raise BitstreamError("pmf must have positive finite mass")
    freqs = np.maximum(1, np.round(pmf / total * CDF_TOTAL).astype(np.int64))
    # repair the total by walking the largest entries
    excess = int(freqs.sum()) - CDF_TOTAL
    if excess != 0:
        order = np.argsort(freqs)[::-1]
        i = 0
        while excess != 0:
            idx = order[i % n]
            if excess > 0:
                take = min(excess, int(freqs[idx]) - 1)
                freqs[idx] -= take
                excess -= take
            else:
                freqs[idx] += -excess
                excess = 0
            i += 1
            if i > 2 * n and excess > 0:
                raise BitstreamError("cannot normalize pmf to CDF total")
    cdf = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(freqs, out=cdf[1:])
    return cdf


class RangeEncoder:
    """Encodes symbols against per-symbol cumulative tables."""

    def __init__(self):
        self._low = 0
        self._range = _MASK32
        self._cache = 0
        self._cache_size = 1
        self._out = bytearray()

    def encode(self, symbol: int, cdf) -> None:
        """Encode ``symbol`` using ``cdf`` (cumulative, cdf[-1] == 65536)."""
        if symbol < 0 or symbol >= len(cdf) - 1:
            raise BitstreamError(
                f"symbol {symbol} outside alphabet of {len(cdf) - 1}"
            )
        c_lo = int(cdf[symbol])
        c_hi = int(cdf[symbol + 1])
        if c_hi <= c_lo:
            raise BitstreamError("symbol has zero frequency")
        r = self._range
        low_inc = (r * c_lo) >> PRECISION
        width = ((r * c_hi) >> PRECISION) - low_inc
        self._low += low_inc
        self._range = width
        while self._range < _TOP:
            self._shift_low()
            self._range = (self._range << 8) & _MASK32

    def _shift_low(self):
        if self._low < 0xFF000000 or self._low > _MASK32:
            carry = self._low >> 32
            self._out.append((self._cache + carry) & 0xFF)
            for _ in range(self._cache_size - 1):
                self._out.append((0xFF + carry) & 0xFF)
            self._cache = (self._low >> 24) & 0xFF
            self._cache_size = 1
        else:
            self._cache_size += 1
        self._low = (self._low << 8) & _MASK32

    def finish(self) -> bytes:
        for _ in range(5):
            self._shift_low()
        return bytes(self._out)


class RangeDecoder:
    """Mirror of :class:`RangeEncoder` over a byte buffer."""

    def __init__(self, data: bytes):
        self._data = data
        self._pos = 0
        self._range = _MASK32
        self._code = 0
        self._next_byte()  # leading byte emitted by the encoder's first shift
        for _ in range(4):
            self._code = ((self._code << 8) | self._next_byte()) & _MASK32

    def _next_byte(self) -> int:
        if self._pos >= len(self._data):
            raise BitstreamError("range-coded stream truncated")
        b = self._data[self._pos]
        self._pos += 1
        return b

    def decode(self, cdf) -> int:
        """Decode one symbol using ``cdf`` (cumulative, cdf[-1] == 65536)."""
        r = self._range
        code = self._code
        # binary search for the largest s with (r * cdf[s]) >> 16 <= code
        lo, hi = 0, len(cdf) - 1
        while hi - lo > 1:
            mid = (lo + hi) >> 1
            if (r * int(cdf[mid])) >> PRECISION <= code:
                lo = mid
            else:
                hi = mid
        symbol = lo
        low_inc = (r * int(cdf[symbol])) >> PRECISION
        width = ((r * int(cdf[symbol + 1])) >> PRECISION) - low_inc
        self._code -= low_inc
        self._range = width
        while self._range < _TOP:
            self._code = ((self._code << 8) | self._next_byte()) & _MASK32
            self._range = (self._range << 8) & _MASK32
        return symbol
