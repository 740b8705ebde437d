"""Versioned bitstream container.

Layout: magic "OMR1", version u8, config id u8, lambda index u8, alpha
numerator u8 (over 100), original width u32 LE, original height u32 LE,
then four length-prefixed payloads in fixed order: z-high, z-low, y-high,
y-low. Each payload starts with its own symbol-range header (2 x i32 LE).
"""

import struct
from dataclasses import dataclass

from ..errors import BitstreamError

MAGIC = b"OMR1"
VERSION = 1
HEADER_FMT = "<4sBBBBII"
HEADER_SIZE = struct.calcsize(HEADER_FMT)
RANGE_FMT = "<ii"
RANGE_SIZE = struct.calcsize(RANGE_FMT)
STREAM_ORDER = ("z_high", "z_low", "y_high", "y_low")


@dataclass
class StreamHeader:
    """Container header carrying everything needed to size the decode."""

    config_id: int
    lambda_index: int
    alpha_pct: int
    width: int
    height: int
    version: int = VERSION

    def pack(self) -> bytes:
        return struct.pack(
            HEADER_FMT,
            MAGIC,
            self.version,
            self.config_id,
            self.lambda_index,
            self.alpha_pct,
            self.width,
            self.height,
        )

    @classmethod
    def unpack(cls, data: bytes) -> "StreamHeader":
        if len(data) < HEADER_SIZE:
            raise BitstreamError("stream shorter than header")
        magic, version, config_id, lambda_index, alpha_pct, width, height = (
            struct.unpack_from(HEADER_FMT, data)
        )
        if magic != MAGIC:
            raise BitstreamError(f"bad magic {magic!r}, expected {MAGIC!r}")
        if version != VERSION:
            raise BitstreamError(f"unsupported stream version {version}")
        return cls(config_id, lambda_index, alpha_pct, width, height, version)


def pack_payload(symbol_range: tuple[int, int], coded: bytes) -> bytes:
    return struct.pack(RANGE_FMT, *symbol_range) + coded


def unpack_payload(payload: bytes) -> tuple[tuple[int, int], bytes]:
    if len(payload) < RANGE_SIZE:
        raise BitstreamError("payload shorter than its symbol-range header")
    low, high = struct.unpack_from(RANGE_FMT, payload)
    if high < low:
        raise BitstreamError(f"invalid symbol range [{low}, {high}]")
    return (low, high), payload[RANGE_SIZE:]


def pack_container(header: StreamHeader, payloads: list[bytes]) -> bytes:
    if len(payloads) != len(STREAM_ORDER):
        raise BitstreamError(f"expected {len(STREAM_ORDER)} payloads")
    parts = [header.pack()]
    for p in payloads:
        parts.append(struct.pack("<I", len(p)))
        parts.append(p)
    return b"".join(parts)


def unpack_container(data: bytes) -> tuple[StreamHeader, list[bytes]]:
    header = StreamHeader.unpack(data)
    payloads = []
    offset = HEADER_SIZE
    for name in STREAM_ORDER:
        if offset + 4 > len(data):
            raise BitstreamError(f"container truncated before {name} length")
        (length,) = struct.unpack_from("<I", data, offset)
        offset += 4
        if offset + length > len(data):
            raise BitstreamError(f"container truncated inside {name} payload")
        payloads.append(data[offset : offset + length])
        offset += length
    if offset != len(data):
        raise BitstreamError(f"{len(data) - offset} trailing bytes after payloads")
    return header, payloads
