"""Bit-level I/O and the ``.ews`` container.

Layout (multi-byte integers little-endian, bits packed MSB-first)::

    stream  := header segment*
    header  := magic "EWSP" | version u8 | width u16 | height u16 | frames u32
               | chroma u8 (0 mono, 1 4:2:0) | gop u16 | tlevels u8 | slevels u8
               | tfilter u8 | sfilter u8 | normalization u8 | term_exp i8
               | pad_frames u16 | tree u8 | weighted u8 | fps_num u16 | fps_den u16
               | split_y u16 | split_u u16 | split_v u16            (36 bytes)
    segment := component u8 | gop u32 | flags u8 (bit 0: empty GOP)
               | exponent i8 | payload_bits u32 | payload           (11 + ceil(bits/8) bytes)

Segments appear GOP by GOP, Y then U then V inside a GOP, each starting on a
byte boundary.  A reader tolerates a short final segment: the payload bits
that are present are returned and flagged as truncated.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from .errors import CorruptStream, EndOfStream

MAGIC = b"EWSP"
VERSION = 1

_HEADER = struct.Struct("<4sBHHIBHBBBBBbHBBHHHHH")
_SEGMENT = struct.Struct("<BIBbI")
HEADER_SIZE = _HEADER.size
SEGMENT_HEADER_SIZE = _SEGMENT.size

COMPONENTS = ("Y", "U", "V")


class BitWriter:
    def __init__(self):
        self._buf = bytearray()
        self._acc = 0
        self._nacc = 0

    def put_bits(self, value: int, n: int):
        if not 0 <= n <= 64:
            raise ValueError("n must be in [0, 64]")
        if value >> n:
            raise ValueError(f"{value} does not fit in {n} bits")
        self._acc = (self._acc << n) | value
        self._nacc += n
        while self._nacc >= 8:
            self._nacc -= 8
            self._buf.append((self._acc >> self._nacc) & 0xFF)
        self._acc &= (1 << self._nacc) - 1

    def put_bit(self, bit: int):
        self.put_bits(bit & 1, 1)

    def align(self):
        if self._nacc:
            self.put_bits(0, 8 - self._nacc)

    def __len__(self) -> int:
        return 8 * len(self._buf) + self._nacc

    def getvalue(self) -> bytes:
        """Bytes written so far, zero-padding the last partial byte."""
        tail = bytes([(self._acc << (8 - self._nacc)) & 0xFF]) if self._nacc else b""
        return bytes(self._buf) + tail


class BitReader:
    def __init__(self, data: bytes, nbits: Optional[int] = None):
        self._data = bytes(data)
        self._nbits = 8 * len(self._data) if nbits is None else nbits
        self.pos = 0

    @property
    def remaining(self) -> int:
        return self._nbits - self.pos

    def get_bits(self, n: int) -> int:
        if not 0 <= n <= 64:
            raise ValueError("n must be in [0, 64]")
        if n > self.remaining:
            raise EndOfStream(f"need {n} bits, {self.remaining} left")
        value = 0
        for _ in range(n):
            byte = self._data[self.pos >> 3]
            value = (value << 1) | ((byte >> (7 - (self.pos & 7))) & 1)
            self.pos += 1
        return value

    def get_bit(self) -> int:
        return self.get_bits(1)

    def align(self):
        self.pos = min(self._nbits, (self.pos + 7) & ~7)


def pack_bits(bits: np.ndarray) -> bytes:
    return np.packbits(np.asarray(bits, dtype=np.uint8)).tobytes()


def unpack_bits(data: bytes, nbits: int) -> np.ndarray:
    arr = np.unpackbits(np.frombuffer(data, dtype=np.uint8))
    return arr[:nbits].copy()


@dataclass(frozen=True)
class StreamHeader:
    width: int
    height: int
    frame_count: int
    chroma: int = 1
    gop_length: int = 16
    temporal_levels: int = 4
    spatial_levels: int = 3
    temporal_filter: int = 1
    spatial_filter: int = 2
    normalization: int = 1
    termination_exponent: int = -16
    pad_frames: int = 0
    tree: int = 0
    weighted: int = 1
    fps_num: int = 30
    fps_den: int = 1
    rate_split: tuple[int, int, int] = (4, 1, 1)
    version: int = VERSION

    @property
    def fps(self) -> float:
        return self.fps_num / self.fps_den

    @property
    def components(self) -> tuple[str, ...]:
        return COMPONENTS if self.chroma else COMPONENTS[:1]


def write_header(h: StreamHeader) -> bytes:
    try:
        return _HEADER.pack(
            MAGIC, h.version, h.width, h.height, h.frame_count, h.chroma, h.gop_length,
            h.temporal_levels, h.spatial_levels, h.temporal_filter, h.spatial_filter,
            h.normalization, h.termination_exponent, h.pad_frames, h.tree, h.weighted,
            h.fps_num, h.fps_den, *h.rate_split)
    except struct.error as exc:
        raise ValueError(f"header field out of range: {exc}") from None


def read_header(data: bytes) -> StreamHeader:
    if len(data) < HEADER_SIZE:
        raise CorruptStream(f"stream shorter than its {HEADER_SIZE}-byte header")
    (magic, version, width, height, frames, chroma, gop, tl, sl, tf, sf, norm, term,
     pad, tree, weighted, fnum, fden, sy, su, sv) = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise CorruptStream(f"bad magic {magic!r}")
    if version != VERSION:
        raise CorruptStream(f"unsupported version {version}")
    if fden == 0 or fnum == 0 or chroma not in (0, 1):
        raise CorruptStream("invalid header fields")
    return StreamHeader(width, height, frames, chroma, gop, tl, sl, tf, sf, norm, term,
                        pad, tree, weighted, fnum, fden, (sy, su, sv), version)


@dataclass
class GopSegment:
    component: int
    gop_index: int
    exponent: Optional[int]  # None: empty-GOP marker
    bits: np.ndarray
    declared_bits: int = -1
    truncated: bool = False

    def __post_init__(self):
        if self.declared_bits < 0:
            self.declared_bits = len(self.bits)

    @property
    def empty(self) -> bool:
        return self.exponent is None


def write_segment(seg: GopSegment) -> bytes:
    flags = 1 if seg.empty else 0
    head = _SEGMENT.pack(seg.component, seg.gop_index, flags,
                         0 if seg.empty else seg.exponent, len(seg.bits))
    return head + pack_bits(seg.bits)


def read_segment(data: bytes, offset: int) -> tuple[Optional[GopSegment], int]:
    """Parse the segment at ``offset``; returns (segment or None at end, next offset)."""
    if offset + SEGMENT_HEADER_SIZE > len(data):
        return None, len(data)
    comp, gop, flags, exp, nbits = _SEGMENT.unpack_from(data, offset)
    start = offset + SEGMENT_HEADER_SIZE
    end = start + (nbits + 7) // 8
    payload = data[start:end]
    have = min(nbits, 8 * len(payload))
    seg = GopSegment(comp, gop, None if flags & 1 else exp,
                     unpack_bits(payload, have), nbits, have < nbits)
    return seg, min(end, len(data))


def iter_segments(data: bytes, offset: int = HEADER_SIZE) -> Iterator[GopSegment]:
    while True:
        seg, offset = read_segment(data, offset)
        if seg is None:
            return
        yield seg
